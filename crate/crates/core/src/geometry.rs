//! Probe geometry, optical media and the scalar optical-parameter relations
//! shared by every other module.
//!
//! Internal units are millimetres for lengths and mm⁻¹ for coefficients.
//! Literature values (and the JSON configuration) are usually quoted in
//! cm⁻¹; use [`per_cm_to_per_mm`] at ingestion and [`per_mm_to_per_cm`] for
//! reporting.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of illumination fibers around the linear array.
pub const FIBER_COUNT: usize = 20;
/// Elevational offset of each fiber row from the image plane, mm.
pub const DEFAULT_FIBER_Y_MM: f64 = 5.68;
/// Half of the 12.7 mm lateral aperture over which the fibers are spread.
pub const DEFAULT_FIBER_HALF_SPAN_MM: f64 = 6.35;
pub const DEFAULT_TILT_DEG: f64 = 35.0;
pub const DEFAULT_N_MEDIUM: f64 = 1.33;
pub const DEFAULT_N_COUPLING: f64 = 1.49;
pub const DEFAULT_ANISOTROPY: f64 = 0.9;

/// Reduced scattering of the brain scattering law at its 500 nm reference, mm⁻¹.
const BRAIN_MUS_AT_500NM: f64 = 4.08;
const BRAIN_SCATTER_POWER: f64 = 3.089;

#[inline]
pub fn per_cm_to_per_mm(v: f64) -> f64 {
    v / 10.0
}

#[inline]
pub fn per_mm_to_per_cm(v: f64) -> f64 {
    v * 10.0
}

/// A point (or displacement) in the probe frame, mm.
///
/// The origin is the centre of the transducer face, `z` points into the
/// scattering medium and the image plane is `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Effective attenuation coefficient `sqrt(3 mu_a mu_s')`.
pub fn mu_eff(mu_a: f64, mu_s_reduced: f64) -> Result<f64> {
    if !(mu_a >= 0.0 && mu_a.is_finite()) {
        return Err(Error::domain(format!("mu_a must be finite and >= 0, got {mu_a}")));
    }
    if !(mu_s_reduced > 0.0 && mu_s_reduced.is_finite()) {
        return Err(Error::domain(format!("mu_s' must be finite and > 0, got {mu_s_reduced}")));
    }
    Ok((3.0 * mu_a * mu_s_reduced).sqrt())
}

/// Absorption implied by an effective attenuation and reduced scattering pair.
pub fn mu_a_from_mu_eff(mu_eff: f64, mu_s_reduced: f64) -> Result<f64> {
    check_scattering(mu_s_reduced)?;
    if !(mu_eff >= 0.0 && mu_eff.is_finite()) {
        return Err(Error::domain(format!("mu_eff must be finite and >= 0, got {mu_eff}")));
    }
    Ok(mu_eff * mu_eff / (3.0 * mu_s_reduced))
}

/// Reduced scattering of brain tissue, mm⁻¹, as a power law in wavelength
/// (4.08 mm⁻¹ at 500 nm, exponent −3.089).
pub fn brain_scattering(lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0 && lambda_nm.is_finite()) {
        return Err(Error::domain(format!("wavelength must be positive, got {lambda_nm} nm")));
    }
    Ok(BRAIN_MUS_AT_500NM * (lambda_nm / 500.0).powf(-BRAIN_SCATTER_POWER))
}

/// Transport mean free path `1 / mu_s'`, mm.
pub fn transport_mfp(mu_s_reduced: f64) -> Result<f64> {
    check_scattering(mu_s_reduced)?;
    Ok(1.0 / mu_s_reduced)
}

/// Diffusion coefficient `1 / (3 mu_s')`, mm.
pub fn diffusion_coefficient(mu_s_reduced: f64) -> Result<f64> {
    check_scattering(mu_s_reduced)?;
    Ok(1.0 / (3.0 * mu_s_reduced))
}

fn check_scattering(mu_s_reduced: f64) -> Result<()> {
    if mu_s_reduced > 0.0 && mu_s_reduced.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("mu_s' must be finite and > 0, got {mu_s_reduced}")))
    }
}

/// Fiber tips, beam tilt and the refractive indices on both sides of the
/// tissue surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGeometry {
    fiber_tips: Vec<Point3>,
    tilt_deg: f64,
    n_medium: f64,
    n_coupling: f64,
}

impl ProbeGeometry {
    /// Validates an explicit fiber layout.
    ///
    /// Requires exactly 20 tips on the surface `z = 0`, ten on each side of the
    /// image plane at a common elevational offset.
    pub fn new(fiber_tips: Vec<Point3>, tilt_deg: f64, n_medium: f64, n_coupling: f64) -> Result<Self> {
        if fiber_tips.len() != FIBER_COUNT {
            return Err(Error::Config(format!(
                "expected {FIBER_COUNT} fiber tips, got {}",
                fiber_tips.len()
            )));
        }
        if fiber_tips.iter().any(|p| !p.is_finite() || p.z != 0.0) {
            return Err(Error::Config("fiber tips must be finite and lie on z = 0".into()));
        }
        let offset = fiber_tips[0].y.abs();
        if offset == 0.0 || fiber_tips.iter().any(|p| (p.y.abs() - offset).abs() > 1e-9) {
            return Err(Error::Config(
                "fiber tips must share one nonzero elevational offset |y'|".into(),
            ));
        }
        let above = fiber_tips.iter().filter(|p| p.y > 0.0).count();
        if above != FIBER_COUNT / 2 {
            return Err(Error::Config(format!(
                "expected {} fibers on each side of the image plane, got {above} with y' > 0",
                FIBER_COUNT / 2
            )));
        }
        if !(0.0..90.0).contains(&tilt_deg) {
            return Err(Error::Config(format!("tilt must be in [0, 90) degrees, got {tilt_deg}")));
        }
        if !(n_medium > 0.0 && n_coupling > 0.0 && n_medium.is_finite() && n_coupling.is_finite()) {
            return Err(Error::Config("refractive indices must be finite and positive".into()));
        }
        Ok(ProbeGeometry { fiber_tips, tilt_deg, n_medium, n_coupling })
    }

    /// Ten fibers per side, uniformly spaced over `[-half_span, half_span]` in x
    /// at `y = ±fiber_y`. Fibers 0..10 sit at `+fiber_y`, 10..20 at `-fiber_y`.
    pub fn uniform(
        half_span_mm: f64,
        fiber_y_mm: f64,
        tilt_deg: f64,
        n_medium: f64,
        n_coupling: f64,
    ) -> Result<Self> {
        let per_side = FIBER_COUNT / 2;
        let step = 2.0 * half_span_mm / (per_side - 1) as f64;
        let tips = [fiber_y_mm, -fiber_y_mm]
            .iter()
            .flat_map(|&y| (0..per_side).map(move |i| Point3::new(-half_span_mm + step * i as f64, y, 0.0)))
            .collect();
        ProbeGeometry::new(tips, tilt_deg, n_medium, n_coupling)
    }

    pub fn fiber_tips(&self) -> &[Point3] {
        &self.fiber_tips
    }

    pub fn tilt_deg(&self) -> f64 {
        self.tilt_deg
    }

    pub fn tilt_rad(&self) -> f64 {
        self.tilt_deg.to_radians()
    }

    pub fn n_medium(&self) -> f64 {
        self.n_medium
    }

    pub fn n_coupling(&self) -> f64 {
        self.n_coupling
    }

    /// Ratio of the scattering-medium index to the outer (transducer) index.
    pub fn n_rel(&self) -> f64 {
        self.n_medium / self.n_coupling
    }
}

impl Default for ProbeGeometry {
    fn default() -> Self {
        ProbeGeometry::uniform(
            DEFAULT_FIBER_HALF_SPAN_MM,
            DEFAULT_FIBER_Y_MM,
            DEFAULT_TILT_DEG,
            DEFAULT_N_MEDIUM,
            DEFAULT_N_COUPLING,
        )
        .expect("default probe geometry is valid")
    }
}

/// Single-wavelength optical properties of a homogeneous medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalProperties {
    /// mm⁻¹
    pub mu_a: f64,
    /// mm⁻¹
    pub mu_s_reduced: f64,
    pub g: f64,
    pub n: f64,
}

impl OpticalProperties {
    pub fn new(mu_a: f64, mu_s_reduced: f64, g: f64, n: f64) -> Result<Self> {
        let p = OpticalProperties { mu_a, mu_s_reduced, g, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_a >= 0.0 && self.mu_a.is_finite()) {
            return Err(Error::domain(format!("mu_a must be >= 0, got {}", self.mu_a)));
        }
        check_scattering(self.mu_s_reduced)?;
        if !(self.g > -1.0 && self.g < 1.0) {
            return Err(Error::domain(format!("anisotropy g must be in (-1, 1), got {}", self.g)));
        }
        if !(self.n > 0.0 && self.n.is_finite()) {
            return Err(Error::domain(format!("refractive index must be > 0, got {}", self.n)));
        }
        Ok(())
    }

    /// Scattering coefficient `mu_s' / (1 - g)`.
    pub fn mu_s(&self) -> f64 {
        self.mu_s_reduced / (1.0 - self.g)
    }

    pub fn mu_t(&self) -> f64 {
        self.mu_a + self.mu_s()
    }

    pub fn mu_eff(&self) -> f64 {
        (3.0 * self.mu_a * self.mu_s_reduced).sqrt()
    }
}

/// Wavelength-resolved homogeneous medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalMedium {
    mu_a: Vec<f64>,
    mu_s_reduced: Vec<f64>,
    g: f64,
    n: f64,
}

impl OpticalMedium {
    pub fn new(mu_a: Vec<f64>, mu_s_reduced: Vec<f64>, g: f64, n: f64) -> Result<Self> {
        if mu_a.len() != mu_s_reduced.len() || mu_a.is_empty() {
            return Err(Error::Config(format!(
                "mu_a ({}) and mu_s' ({}) must be nonempty and equally long",
                mu_a.len(),
                mu_s_reduced.len()
            )));
        }
        for (&a, &s) in mu_a.iter().zip(&mu_s_reduced) {
            OpticalProperties::new(a, s, g, n)?;
        }
        Ok(OpticalMedium { mu_a, mu_s_reduced, g, n })
    }

    /// Constant absorption with the brain scattering law evaluated at each
    /// wavelength.
    pub fn brain(wavelengths_nm: &[f64], mu_a: f64, g: f64, n: f64) -> Result<Self> {
        let mus = wavelengths_nm.iter().map(|&l| brain_scattering(l)).collect::<Result<Vec<_>>>()?;
        OpticalMedium::new(vec![mu_a; mus.len()], mus, g, n)
    }

    pub fn len(&self) -> usize {
        self.mu_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_a.is_empty()
    }

    pub fn mu_a(&self) -> &[f64] {
        &self.mu_a
    }

    pub fn mu_s_reduced(&self) -> &[f64] {
        &self.mu_s_reduced
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn at(&self, j: usize) -> OpticalProperties {
        OpticalProperties { mu_a: self.mu_a[j], mu_s_reduced: self.mu_s_reduced[j], g: self.g, n: self.n }
    }

    pub fn mu_eff(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.at(j).mu_eff()).collect()
    }
}

/// Acquisition wavelengths, with an optional zero-power control frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    wavelengths_nm: Vec<f64>,
    control_index: Option<usize>,
}

impl WavelengthGrid {
    pub fn new(wavelengths_nm: Vec<f64>, control_index: Option<usize>) -> Result<Self> {
        if wavelengths_nm.is_empty() {
            return Err(Error::Config("wavelength grid is empty".into()));
        }
        if wavelengths_nm.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Config("wavelengths must be finite and positive".into()));
        }
        if let Some(c) = control_index {
            if c >= wavelengths_nm.len() {
                return Err(Error::Config(format!(
                    "control_index {c} out of range for {} wavelengths",
                    wavelengths_nm.len()
                )));
            }
        }
        Ok(WavelengthGrid { wavelengths_nm, control_index })
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn control_index(&self) -> Option<usize> {
        self.control_index
    }

    pub fn len(&self) -> usize {
        self.wavelengths_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths_nm.is_empty()
    }

    /// Frame indices that carry laser light, in acquisition order.
    pub fn analysis_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| Some(j) != self.control_index).collect()
    }

    pub fn analysis_wavelengths(&self) -> Vec<f64> {
        self.analysis_indices().into_iter().map(|j| self.wavelengths_nm[j]).collect()
    }
}

impl Default for WavelengthGrid {
    /// 700 nm control frame followed by 715..=875 nm in 20 nm steps.
    fn default() -> Self {
        let mut nm = vec![700.0];
        nm.extend((0..9).map(|i| 715.0 + 20.0 * i as f64));
        WavelengthGrid { wavelengths_nm: nm, control_index: Some(0) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mu_eff_matches_tabulated_pairs() {
        // 0.03 cm^-1 absorption with 13.53 and 7.25 cm^-1 scattering
        assert!((mu_eff(0.003, 1.353).unwrap() - 0.1104).abs() < 1e-4);
        assert!((mu_eff(0.003, 0.725).unwrap() - 0.0808).abs() < 1e-4);
        assert_eq!(mu_eff(0.0, 2.0).unwrap(), 0.0);
        assert!(mu_eff(-1e-3, 1.0).is_err());
        assert!(mu_eff(1e-3, 0.0).is_err());
    }

    #[test]
    fn brain_law_reference_points() {
        assert!((brain_scattering(500.0).unwrap() - 4.08).abs() < 1e-12);
        // tabulated 13.53 and 7.25 cm^-1 are quoted to two decimals
        assert!((brain_scattering(715.0).unwrap() - 1.353).abs() < 2e-3);
        assert!((brain_scattering(875.0).unwrap() - 0.725).abs() < 2e-3);
        assert!(brain_scattering(0.0).is_err());
        assert!(brain_scattering(-5.0).is_err());
    }

    #[test]
    fn transport_and_diffusion_lengths() {
        assert_eq!(transport_mfp(1.0).unwrap(), 1.0);
        assert_eq!(transport_mfp(0.5).unwrap(), 2.0);
        assert!((transport_mfp(1.353).unwrap() - 0.7391).abs() < 5e-5);
        assert!((diffusion_coefficient(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((diffusion_coefficient(3.0).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!((diffusion_coefficient(1.353).unwrap() - 0.2464).abs() < 5e-5);
        assert!(transport_mfp(0.0).is_err());
        assert!(diffusion_coefficient(-1.0).is_err());
    }

    #[test]
    fn default_probe_layout() {
        let g = ProbeGeometry::default();
        assert_eq!(g.fiber_tips().len(), 20);
        assert_eq!(g.fiber_tips().iter().filter(|p| p.y == 5.68).count(), 10);
        assert_eq!(g.fiber_tips().iter().filter(|p| p.y == -5.68).count(), 10);
        assert!(g.fiber_tips().iter().all(|p| p.z == 0.0));
        assert!((g.fiber_tips()[9].x - 6.35).abs() < 1e-12);
        assert!((g.n_rel() - 1.33 / 1.49).abs() < 1e-15);
    }

    #[test]
    fn probe_rejects_bad_layouts() {
        let mut tips = ProbeGeometry::default().fiber_tips().to_vec();
        tips.pop();
        assert!(ProbeGeometry::new(tips, 35.0, 1.33, 1.49).is_err());
        let tips = ProbeGeometry::default().fiber_tips().to_vec();
        assert!(ProbeGeometry::new(tips.clone(), 90.0, 1.33, 1.49).is_err());
        assert!(ProbeGeometry::new(tips.clone(), 35.0, 0.0, 1.49).is_err());
        let mut lifted = tips;
        lifted[3].z = 0.5;
        assert!(ProbeGeometry::new(lifted, 35.0, 1.33, 1.49).is_err());
    }

    #[test]
    fn default_wavelength_grid() {
        let w = WavelengthGrid::default();
        assert_eq!(w.len(), 10);
        assert_eq!(w.control_index(), Some(0));
        assert_eq!(w.wavelengths_nm()[1], 715.0);
        assert_eq!(w.wavelengths_nm()[2], 735.0);
        assert_eq!(*w.wavelengths_nm().last().unwrap(), 875.0);
        assert_eq!(w.analysis_indices(), (1..10).collect::<Vec<_>>());
    }

    #[test]
    fn medium_invariants() {
        assert!(OpticalProperties::new(0.01, 1.0, 1.0, 1.33).is_err());
        let p = OpticalProperties::new(0.01, 1.0, 0.9, 1.33).unwrap();
        assert!((p.mu_s() - 10.0).abs() < 1e-12);
        assert!(OpticalMedium::new(vec![0.01], vec![1.0, 2.0], 0.9, 1.33).is_err());
    }

    proptest! {
        #[test]
        fn mu_eff_squared_round_trip(a in 1e-6f64..10.0, s in 1e-3f64..100.0) {
            let m = mu_eff(a, s).unwrap();
            prop_assert!((m * m - 3.0 * a * s).abs() <= 1e-12 * 3.0 * a * s);
        }

        #[test]
        fn transport_is_three_diffusion(s in 1e-4f64..1e4) {
            let lt = transport_mfp(s).unwrap();
            let d = diffusion_coefficient(s).unwrap();
            prop_assert!((lt - 3.0 * d).abs() <= 1e-14 * lt);
        }

        #[test]
        fn unit_round_trip(v in -1e6f64..1e6) {
            let back = per_mm_to_per_cm(per_cm_to_per_mm(v));
            prop_assert!((back - v).abs() <= f64::EPSILON * v.abs());
        }

        #[test]
        fn brain_law_strictly_decreasing(a in 500.0f64..899.0, step in 1e-3f64..1.0) {
            prop_assert!(brain_scattering(a + step).unwrap() < brain_scattering(a).unwrap());
        }
    }
}
