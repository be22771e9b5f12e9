use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simplex::{nelder_mead, SimplexOptions};
use super::smooth::smooth_spectra;
use super::{debias, estimate_noise_bias, normalize, select_support, NormalizedPixel, NormalizedTensor};
use super::{TauPolicy, WeightMode};
use crate::boundary::ReflectionMoments;
use crate::error::{Error, Result};
use crate::fluence::{ForwardModel, ModelKind};
use crate::geometry::{Point3, ProbeGeometry, FIBER_COUNT};
use crate::tensor::{Cube, MeasurementTensor};

/// Search box and optimiser settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// mm⁻¹
    pub mu_eff_bounds: (f64, f64),
    /// mm⁻¹
    pub mu_s_bounds: (f64, f64),
    /// Log-spaced grid points per parameter for the initial scan.
    pub grid_points: usize,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { mu_eff_bounds: (0.01, 0.5), mu_s_bounds: (0.1, 5.0), grid_points: 40, rel_tol: 1e-6, max_iter: 500 }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi > lo && hi.is_finite();
        if !ok(self.mu_eff_bounds) || !ok(self.mu_s_bounds) {
            return Err(Error::Config(format!(
                "search bounds must satisfy 0 < lo < hi: mu_eff {:?}, mu_s' {:?}",
                self.mu_eff_bounds, self.mu_s_bounds
            )));
        }
        if self.grid_points < 2 || !(self.rel_tol > 0.0) {
            return Err(Error::Config("need at least 2 grid points and a positive tolerance".into()));
        }
        Ok(())
    }

    fn log_bounds(&self, kind: ModelKind) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = self.mu_eff_bounds;
        let (c, d) = self.mu_s_bounds;
        match kind {
            ModelKind::One => (vec![a.ln(), c.ln()], vec![b.ln(), d.ln()]),
            ModelKind::Two => (vec![a.ln()], vec![b.ln()]),
        }
    }
}

/// Fit at one wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavelengthFit {
    pub wavelength_nm: f64,
    /// mm⁻¹
    pub mu_eff: f64,
    /// mm⁻¹; absent for Model II.
    pub mu_s_reduced: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mu_eff_at_bound: bool,
    pub mu_s_at_bound: bool,
    pub pixels_used: usize,
    /// `(pixel, beta)`: fiber-summed data over fiber-summed fitted fluence.
    pub beta: Vec<(usize, f64)>,
}

impl WavelengthFit {
    pub fn at_bound(&self) -> bool {
        self.mu_eff_at_bound || self.mu_s_at_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub model: ModelKind,
    pub boundary: ReflectionMoments,
    pub tau: Option<f64>,
    /// Support pixels with their weights at the first wavelength.
    pub support: Vec<(usize, f64)>,
    pub dropped: Vec<(usize, usize)>,
    pub fits: Vec<WavelengthFit>,
    pub smoothed_mu_eff: Option<Vec<f64>>,
    pub smoothed_mu_s: Option<Vec<f64>>,
}

impl EstimationResult {
    pub fn wavelengths_nm(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.wavelength_nm).collect()
    }

    pub fn mu_eff_hat(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.mu_eff).collect()
    }

    pub fn mu_s_hat(&self) -> Option<Vec<f64>> {
        self.fits.iter().map(|f| f.mu_s_reduced).collect()
    }

    pub fn any_at_bound(&self) -> bool {
        self.fits.iter().any(WavelengthFit::at_bound)
    }

    /// Forward model at wavelength `j`, from the smoothed estimates if present.
    pub fn model_at(&self, j: usize, geometry: &ProbeGeometry, smoothed: bool) -> Result<ForwardModel> {
        let pick = |raw: f64, s: &Option<Vec<f64>>| match s {
            Some(v) if smoothed => v[j],
            _ => raw,
        };
        let f = &self.fits[j];
        let mu_eff = pick(f.mu_eff, &self.smoothed_mu_eff);
        let mu_s = f.mu_s_reduced.map(|m| pick(m, &self.smoothed_mu_s)).unwrap_or(f64::NAN);
        ForwardModel::new(self.model, mu_eff, mu_s, geometry.tilt_rad(), &self.boundary)
    }
}

/// Everything the full pipeline needs besides the tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOptions {
    pub model: ModelKind,
    /// Explicit per-fiber bias; otherwise taken from the control frame.
    pub bias: Option<Vec<f64>>,
    pub tau: TauPolicy,
    pub weight_mode: WeightMode,
    pub search: SearchConfig,
    pub smooth: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            model: ModelKind::One,
            bias: None,
            tau: TauPolicy::default(),
            weight_mode: WeightMode::default(),
            search: SearchConfig::default(),
            smooth: true,
        }
    }
}

/// Debias, support selection, normalization, fit and (optionally) smoothing.
pub fn estimate(
    tensor: &MeasurementTensor,
    geometry: &ProbeGeometry,
    moments: &ReflectionMoments,
    opts: &EstimateOptions,
) -> Result<EstimationResult> {
    let bias = match &opts.bias {
        Some(b) => b.clone(),
        None => estimate_noise_bias(tensor)?,
    };
    let debiased = debias(tensor, &bias)?;
    let support = select_support(&debiased, opts.tau, opts.weight_mode)?;
    let normalized = normalize(&debiased, &support)?;
    let mut result = fit_parameters(&normalized, geometry, moments, opts.model, &opts.search)?;
    result.tau = Some(support.tau);
    if opts.smooth && result.fits.len() >= 3 {
        result = smooth_spectra(result)?;
    }
    Ok(result)
}

struct Frame {
    points: Vec<Point3>,
    pixels: Vec<NormalizedPixel>,
}

/// Weighted squared misfit between normalized data and the normalized model.
fn objective(model: &ForwardModel, tips: &[Point3], frame: &Frame) -> f64 {
    let mut phi = [0.0; FIBER_COUNT];
    let mut total = 0.0;
    for (p, px) in frame.points.iter().zip(&frame.pixels) {
        if model.eval_fibers(tips, *p, &mut phi).is_err() {
            return f64::INFINITY;
        }
        let s: f64 = phi.iter().sum();
        if !(s > 0.0) {
            return f64::INFINITY;
        }
        let misfit: f64 = phi.iter().zip(&px.values).map(|(m, y)| (y - m / s).powi(2)).sum();
        total += px.weight.max(0.0) * misfit;
    }
    total
}

fn build_model(kind: ModelKind, x: &[f64], tilt: f64, moments: &ReflectionMoments) -> Option<ForwardModel> {
    let mu_s = if kind == ModelKind::One { x[1].exp() } else { f64::NAN };
    ForwardModel::new(kind, x[0].exp(), mu_s, tilt, moments).ok()
}

/// Grid cells to refine: the lowest few local minima of the scan. A single
/// start can settle in a side basin along the `mu_eff`/`mu_s'` valley.
fn grid_starts(values: &[f64], kind: ModelKind, n: usize) -> Vec<usize> {
    const MAX_STARTS: usize = 4;
    let is_min = |idx: usize| {
        let v = values[idx];
        let neighbours: Vec<usize> = match kind {
            ModelKind::Two => [idx.checked_sub(1), (idx + 1 < n).then_some(idx + 1)].into_iter().flatten().collect(),
            ModelKind::One => {
                let (a, b) = ((idx / n) as isize, (idx % n) as isize);
                let mut out = Vec::new();
                for da in -1..=1 {
                    for db in -1..=1 {
                        let (x, y) = (a + da, b + db);
                        if (da, db) != (0, 0) && (0..n as isize).contains(&x) && (0..n as isize).contains(&y) {
                            out.push(x as usize * n + y as usize);
                        }
                    }
                }
                out
            }
        };
        v.is_finite() && neighbours.iter().all(|&m| values[m] >= v)
    };
    let mut minima: Vec<usize> = (0..values.len()).filter(|&i| is_min(i)).collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    minima.truncate(MAX_STARTS);
    if minima.is_empty() {
        let best = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        minima.push(best);
    }
    minima
}

/// Simplex search restarted from its best vertex until it stops improving.
/// Restarts re-expand a simplex that has collapsed onto a face of the box or
/// along a narrow valley.
fn refine<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    steps: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: SimplexOptions,
    rel_tol: f64,
) -> super::SimplexResult {
    let mut r = nelder_mead(&f, start, steps, lo, hi, opts);
    let mut used = r.iterations;
    while used < opts.max_iter {
        let budget = SimplexOptions { max_iter: opts.max_iter - used, ..opts };
        let next = nelder_mead(&f, &r.x, steps, lo, hi, budget);
        used += next.iterations.max(1);
        let improved = next.f < r.f - rel_tol * r.f.abs();
        if next.f <= r.f {
            r = next;
        }
        if !improved {
            break;
        }
    }
    r.iterations = used;
    r
}

/// Fits the chosen model independently at every wavelength.
///
/// A log-spaced grid scan picks starting points for a Nelder–Mead search
/// in log-parameter space; estimates that end on the search box are flagged.
pub fn fit_parameters(
    data: &NormalizedTensor,
    geometry: &ProbeGeometry,
    moments: &ReflectionMoments,
    kind: ModelKind,
    search: &SearchConfig,
) -> Result<EstimationResult> {
    search.validate()?;
    let tips = geometry.fiber_tips();
    let tilt = geometry.tilt_rad();
    let (lo, hi) = search.log_bounds(kind);
    let dims = lo.len();
    let steps: Vec<f64> = (0..dims).map(|d| (hi[d] - lo[d]) / (search.grid_points - 1) as f64).collect();
    let axis = |d: usize| -> Vec<f64> { (0..search.grid_points).map(|g| lo[d] + steps[d] * g as f64).collect() };
    let candidates: Vec<Vec<f64>> = match kind {
        ModelKind::Two => axis(0).into_iter().map(|a| vec![a]).collect(),
        ModelKind::One => {
            let (ax, ay) = (axis(0), axis(1));
            ax.iter().flat_map(|&a| ay.iter().map(move |&b| vec![a, b])).collect()
        }
    };

    let fits: Vec<Result<WavelengthFit>> = data
        .frames
        .par_iter()
        .enumerate()
        .map(|(j, pixels)| {
            let frame = Frame {
                points: pixels.iter().map(|p| data.pixels.point(p.pixel)).collect(),
                pixels: pixels.clone(),
            };
            let f = |x: &[f64]| match build_model(kind, x, tilt, moments) {
                Some(m) => objective(&m, tips, &frame),
                None => f64::INFINITY,
            };
            let values: Vec<f64> = candidates.iter().map(|c| f(c)).collect();
            let opts = SimplexOptions { rel_tol: search.rel_tol, x_tol: 1e-10, max_iter: search.max_iter };
            let mut used = 0;
            let mut best: Option<super::SimplexResult> = None;
            for s in grid_starts(&values, kind, search.grid_points) {
                let r = refine(f, &candidates[s], &steps, &lo, &hi, opts, search.rel_tol);
                used += r.iterations;
                if best.as_ref().is_none_or(|b| r.f < b.f) {
                    best = Some(r);
                }
            }
            let mut r = best.expect("grid has at least one local minimum");
            r.iterations = used;
            if !r.f.is_finite() {
                return Err(Error::Numeric(format!(
                    "model cannot be evaluated anywhere near the data at {} nm",
                    data.wavelengths_nm[j]
                )));
            }
            let near = |d: usize| (r.x[d] - lo[d]).abs() < 1e-6 || (hi[d] - r.x[d]).abs() < 1e-6;
            let model = build_model(kind, &r.x, tilt, moments).expect("finite objective implies a valid model");
            let mut phi = [0.0; FIBER_COUNT];
            let beta = frame
                .points
                .iter()
                .zip(&frame.pixels)
                .map(|(p, px)| {
                    model.eval_fibers(tips, *p, &mut phi)?;
                    Ok((px.pixel, px.fiber_sum / phi.iter().sum::<f64>()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(WavelengthFit {
                wavelength_nm: data.wavelengths_nm[j],
                mu_eff: r.x[0].exp(),
                mu_s_reduced: (kind == ModelKind::One).then(|| r.x[1].exp()),
                residual: r.f,
                iterations: r.iterations,
                converged: r.converged,
                mu_eff_at_bound: near(0),
                mu_s_at_bound: kind == ModelKind::One && near(1),
                pixels_used: frame.pixels.len(),
                beta,
            })
        })
        .collect();
    let fits = fits.into_iter().collect::<Result<Vec<_>>>()?;
    let support = data.frames.first().map(|f| f.iter().map(|p| (p.pixel, p.weight)).collect()).unwrap_or_default();
    Ok(EstimationResult {
        model: kind,
        boundary: *moments,
        tau: None,
        support,
        dropped: data.dropped.clone(),
        fits,
        smoothed_mu_eff: None,
        smoothed_mu_s: None,
    })
}

/// Fitted fluence `[wavelength][fiber][point]` with unit amplitude.
pub fn model_fluence_cube(
    result: &EstimationResult,
    geometry: &ProbeGeometry,
    points: &[Point3],
    smoothed: bool,
) -> Result<Cube> {
    let mut cube = Cube::zeros([result.fits.len(), FIBER_COUNT, points.len()]);
    for j in 0..result.fits.len() {
        let model = result.model_at(j, geometry, smoothed)?;
        for (i, &p) in points.iter().enumerate() {
            for (k, &tip) in geometry.fiber_tips().iter().enumerate() {
                cube.set(j, k, i, model.eval(tip, p)?);
            }
        }
    }
    Ok(cube)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::reflection_moments;
    use crate::estimation::DebiasedTensor;
    use crate::tensor::PixelGrid;

    fn synthetic(model_of: impl Fn(usize) -> ForwardModel, geometry: &ProbeGeometry, scale: f64) -> DebiasedTensor {
        let pixels = PixelGrid { x0_mm: -2.0, dx_mm: 2.0, nx: 3, z0_mm: 8.0, dz_mm: 2.0, nz: 2 };
        let wl = vec![715.0, 795.0, 875.0];
        let mut values = Cube::zeros([wl.len(), FIBER_COUNT, pixels.len()]);
        for j in 0..wl.len() {
            let m = model_of(j);
            for i in 0..pixels.len() {
                let beta = scale * (1.0 + i as f64);
                for (k, &tip) in geometry.fiber_tips().iter().enumerate() {
                    values.set(j, k, i, beta * m.eval(tip, pixels.point(i)).unwrap());
                }
            }
        }
        DebiasedTensor { wavelengths_nm: wl, pixels, values }
    }

    fn run(d: &DebiasedTensor, g: &ProbeGeometry, m: &ReflectionMoments, kind: ModelKind) -> EstimationResult {
        let s = select_support(d, TauPolicy::Absolute(f64::NEG_INFINITY), WeightMode::Summed).unwrap();
        let n = normalize(d, &s).unwrap();
        fit_parameters(&n, g, m, kind, &SearchConfig::default()).unwrap()
    }

    #[test]
    fn noiseless_model2_recovers_mu_eff() {
        let g = ProbeGeometry::default();
        let m = reflection_moments(g.n_rel()).unwrap();
        let d = synthetic(|_| ForwardModel::model2(0.10).unwrap(), &g, 1.0);
        let r = run(&d, &g, &m, ModelKind::Two);
        for f in &r.fits {
            assert!((f.mu_eff - 0.10).abs() < 1e-4, "{f:?}");
            assert!(!f.at_bound());
            assert!(f.mu_s_reduced.is_none());
        }
    }

    #[test]
    fn noiseless_model1_recovers_both_parameters() {
        let g = ProbeGeometry::default();
        let m = reflection_moments(g.n_rel()).unwrap();
        let truth = [(0.11, 1.353), (0.0935, 0.975), (0.08, 0.725)];
        let d = synthetic(|j| ForwardModel::model1(truth[j].0, truth[j].1, g.tilt_rad(), &m).unwrap(), &g, 1.0);
        let r = run(&d, &g, &m, ModelKind::One);
        for (f, t) in r.fits.iter().zip(truth) {
            assert!((f.mu_eff / t.0 - 1.0).abs() < 1e-4, "{f:?}");
            assert!((f.mu_s_reduced.unwrap() / t.1 - 1.0).abs() < 1e-3, "{f:?}");
            assert!(f.residual < 1e-10, "{f:?}");
            // beta recovers the per-pixel scale up to the model's unit amplitude
            assert!((f.beta[1].1 / f.beta[0].1 - 2.0).abs() < 1e-3);
        }
    }

    #[test]
    fn argmin_is_invariant_to_data_scale() {
        let g = ProbeGeometry::default();
        let m = reflection_moments(g.n_rel()).unwrap();
        let model = |_| ForwardModel::model1(0.1, 1.0, g.tilt_rad(), &m).unwrap();
        let mut d = synthetic(model, &g, 1.0);
        // perturb so the optimum has a nonzero residual
        for (n, v) in d.values.data_mut().iter_mut().enumerate() {
            *v *= 1.0 + 0.02 * ((n * 7919) % 13) as f64 / 13.0;
        }
        let mut scaled = d.clone();
        scaled.values.data_mut().iter_mut().for_each(|v| *v *= 250.0);
        let a = run(&d, &g, &m, ModelKind::One);
        let b = run(&scaled, &g, &m, ModelKind::One);
        for (x, y) in a.fits.iter().zip(&b.fits) {
            assert!((x.mu_eff / y.mu_eff - 1.0).abs() < 1e-5);
            assert!((x.residual * 250.0 / y.residual - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn estimates_outside_the_box_are_flagged() {
        let g = ProbeGeometry::default();
        let m = reflection_moments(g.n_rel()).unwrap();
        let d = synthetic(|_| ForwardModel::model2(0.9).unwrap(), &g, 1.0);
        let r = run(&d, &g, &m, ModelKind::Two);
        assert!(r.any_at_bound());
        assert!((r.fits[0].mu_eff - 0.5).abs() < 1e-9);
    }
}
