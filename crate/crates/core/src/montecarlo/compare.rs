use serde::Serialize;

use super::field::FluenceField;
use crate::error::{Error, Result};
use crate::fluence::ForwardModel;
use crate::geometry::Point3;

/// Voxel column through `(x, y)`, restricted to depths `z_min..=z_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialLine {
    pub x: f64,
    pub y: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl AxialLine {
    pub fn on_axis(z_min: f64, z_max: f64) -> Self {
        AxialLine { x: 0.0, y: 0.0, z_min, z_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub z_mm: f64,
    pub reference: f64,
    /// Model value after amplitude matching.
    pub model: f64,
    /// `(model - reference) / reference`.
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub amplitude: f64,
    pub mean_abs_deviation: f64,
    pub max_abs_deviation: f64,
}

/// Compares a model against a reference field along `line`.
///
/// The model amplitude is the minimiser of the summed squared relative
/// deviation, so that the deep, dim part of the profile weighs as much as the
/// bright part. Voxels with a zero reference value carry no relative
/// information and are skipped.
pub fn compare_to_model(
    field: &FluenceField,
    model: &ForwardModel,
    tip: Point3,
    line: &AxialLine,
) -> Result<ComparisonTable> {
    let mut pts = Vec::new();
    for (p, reference) in field.column(line.x, line.y)? {
        if p.z < line.z_min || p.z > line.z_max || reference <= 0.0 {
            continue;
        }
        let m = model.eval(tip, p)?;
        pts.push((p.z, reference, m));
    }
    if pts.is_empty() {
        return Err(Error::domain(format!(
            "no voxels with nonzero reference fluence in z = [{}, {}] mm",
            line.z_min, line.z_max
        )));
    }
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), &(_, r, m)| {
        let q = m / r;
        (n + q, d + q * q)
    });
    if den <= 0.0 {
        return Err(Error::Numeric("model vanishes on the whole comparison line".into()));
    }
    let amplitude = num / den;
    let rows: Vec<ComparisonRow> = pts
        .iter()
        .map(|&(z, r, m)| ComparisonRow {
            z_mm: z,
            reference: r,
            model: amplitude * m,
            relative_deviation: (amplitude * m - r) / r,
        })
        .collect();
    let mean = rows.iter().map(|r| r.relative_deviation.abs()).sum::<f64>() / rows.len() as f64;
    let max = rows.iter().map(|r| r.relative_deviation.abs()).fold(0.0, f64::max);
    Ok(ComparisonTable { rows, amplitude, mean_abs_deviation: mean, max_abs_deviation: max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::reflection_moments;
    use crate::montecarlo::GridSpec;

    #[test]
    fn self_comparison_has_zero_error() {
        let moments = reflection_moments(1.33 / 1.49).unwrap();
        let model = ForwardModel::model1(0.11, 1.0, 35f64.to_radians(), &moments).unwrap();
        let tip = Point3::new(0.0, 5.68, 0.0);
        let grid = GridSpec::centered(3.0, 3.0, 30.0, 0.5).unwrap();
        let field = FluenceField::from_fn(grid, |p| Ok(7.5 * model.eval(tip, p)?)).unwrap();
        let t = compare_to_model(&field, &model, tip, &AxialLine::on_axis(5.0, 25.0)).unwrap();
        assert!((t.amplitude - 7.5).abs() < 1e-9);
        assert!(t.max_abs_deviation < 1e-12);
        assert_eq!(t.rows.len(), 40);
    }

    #[test]
    fn empty_window_is_an_error() {
        let model = ForwardModel::model2(0.1).unwrap();
        let grid = GridSpec::centered(3.0, 3.0, 10.0, 1.0).unwrap();
        let field = FluenceField::from_fn(grid, |_| Ok(1.0)).unwrap();
        let r = compare_to_model(&field, &model, Point3::new(0.0, 5.68, 0.0), &AxialLine::on_axis(50.0, 60.0));
        assert!(r.is_err());
    }
}
