//! Analytic fluence of an obliquely incident pencil beam on a semi-infinite
//! homogeneous medium.
//!
//! Model I replaces the beam by a positive isotropic source one transport
//! mean free path along the refracted beam and a negative mirror source about
//! the extrapolated boundary `z = -z_b`. Model II is its far-field limit, in
//! which only `mu_eff` shapes the fluence.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryCondition, ReflectionMoments};
use crate::error::{Error, Result};
use crate::geometry::{diffusion_coefficient, transport_mfp, Point3};

/// Evaluations closer than this to a point source are rejected.
pub const SINGULARITY_RADIUS_MM: f64 = 1e-6;

/// Depth window, in transport mean free paths, used to fix Model II's
/// amplitude against Model I.
pub const TAIL_MATCH_WINDOW: (f64, f64) = (15.0, 40.0);
const TAIL_MATCH_SAMPLES: usize = 200;

const PEAK_SCAN_RANGE_MM: (f64, f64) = (0.1, 40.0);
const PEAK_SCAN_POINTS: usize = 800;
const PEAK_TOLERANCE_MM: f64 = 0.01;

/// Which analytic model to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Two image sources; depends on `mu_eff` and `mu_s'`.
    #[serde(rename = "1")]
    One,
    /// Asymptotic single-parameter form; depends on `mu_eff` only.
    #[serde(rename = "2")]
    Two,
}

impl ModelKind {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(ModelKind::One),
            2 => Ok(ModelKind::Two),
            other => Err(Error::Config(format!("model must be 1 or 2, got {other}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            ModelKind::One => 1,
            ModelKind::Two => 2,
        }
    }
}

fn side_sign(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else if y < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Real and mirror isotropic sources standing in for one fiber's beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSourcePair {
    pub r_plus: Point3,
    pub r_minus: Point3,
}

/// Places the image-source pair for a fiber tip.
///
/// The beam tilts toward the image plane, so the lateral offset is
/// `-sign(y') l_t sin(theta)`; the mirror source sits at
/// `-z' - l_t cos(theta) - 2 z_b`.
pub fn image_sources(tip: Point3, tilt_rad: f64, l_t: f64, z_b: f64) -> Result<ImageSourcePair> {
    if !(l_t >= 0.0 && l_t.is_finite() && z_b >= 0.0 && z_b.is_finite()) {
        return Err(Error::domain(format!("need l_t >= 0 and z_b >= 0, got l_t = {l_t}, z_b = {z_b}")));
    }
    Ok(image_sources_unchecked(tip, l_t * tilt_rad.sin(), l_t * tilt_rad.cos(), z_b))
}

#[inline]
fn image_sources_unchecked(tip: Point3, lateral: f64, axial: f64, z_b: f64) -> ImageSourcePair {
    let y = tip.y - side_sign(tip.y) * lateral;
    ImageSourcePair {
        r_plus: Point3::new(tip.x, y, tip.z + axial),
        r_minus: Point3::new(tip.x, y, -tip.z - axial - 2.0 * z_b),
    }
}

/// Parameters of Model I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluenceParams {
    pub mu_eff: f64,
    pub mu_s_reduced: f64,
    pub amplitude: f64,
    pub boundary: BoundaryCondition,
}

impl FluenceParams {
    pub fn new(mu_eff: f64, mu_s_reduced: f64, amplitude: f64, moments: &ReflectionMoments) -> Result<Self> {
        if !(mu_eff > 0.0 && mu_eff.is_finite()) {
            return Err(Error::domain(format!("mu_eff must be > 0, got {mu_eff}")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::domain(format!("amplitude must be > 0, got {amplitude}")));
        }
        let d = diffusion_coefficient(mu_s_reduced)?;
        let boundary = BoundaryCondition::new(moments, d)?;
        Ok(FluenceParams { mu_eff, mu_s_reduced, amplitude, boundary })
    }

    pub fn diffusion_coefficient(&self) -> f64 {
        1.0 / (3.0 * self.mu_s_reduced)
    }

    pub fn transport_mfp(&self) -> f64 {
        1.0 / self.mu_s_reduced
    }

    /// Absorption implied by the pair, `mu_eff² / (3 mu_s')`.
    pub fn implied_mu_a(&self) -> f64 {
        self.mu_eff * self.mu_eff / (3.0 * self.mu_s_reduced)
    }

    /// True when `mu_a > mu_s'`, outside the regime where diffusion holds.
    pub fn outside_diffusion_regime(&self) -> bool {
        self.mu_eff * self.mu_eff > 3.0 * self.mu_s_reduced * self.mu_s_reduced
    }
}

fn guarded_distance(r: Point3, source: Point3) -> Result<f64> {
    let rho = r.distance(source);
    if rho < SINGULARITY_RADIUS_MM {
        return Err(Error::Singular(format!(
            "evaluation point ({:.4}, {:.4}, {:.4}) lies on a point source",
            r.x, r.y, r.z
        )));
    }
    Ok(rho)
}

/// Model I fluence at `r` for one fiber.
pub fn model1_fluence(r: Point3, sources: &ImageSourcePair, params: &FluenceParams) -> Result<f64> {
    let rho_p = guarded_distance(r, sources.r_plus)?;
    let rho_m = guarded_distance(r, sources.r_minus)?;
    Ok(model1_kernel(rho_p, rho_m, params.mu_eff, params.diffusion_coefficient(), params.amplitude))
}

#[inline]
fn model1_kernel(rho_p: f64, rho_m: f64, mu_eff: f64, d: f64, amplitude: f64) -> f64 {
    let c = amplitude / (4.0 * PI * d);
    c * ((-mu_eff * rho_p).exp() / rho_p - (-mu_eff * rho_m).exp() / rho_m)
}

/// Model II fluence at `r` for the fiber at `tip`.
pub fn model2_fluence(r: Point3, tip: Point3, mu_eff: f64, amplitude: f64) -> Result<f64> {
    if !(mu_eff >= 0.0 && mu_eff.is_finite()) {
        return Err(Error::domain(format!("mu_eff must be >= 0, got {mu_eff}")));
    }
    let z_rel = r.z - tip.z;
    if z_rel < 0.0 {
        return Err(Error::domain(format!("point at depth {z_rel} mm lies above the source plane")));
    }
    let rho = guarded_distance(r, tip)?;
    Ok(model2_kernel(rho, z_rel, mu_eff, amplitude))
}

#[inline]
fn model2_kernel(rho: f64, z_rel: f64, mu_eff: f64, amplitude: f64) -> f64 {
    amplitude * z_rel * (1.0 + mu_eff * rho) * (-mu_eff * rho).exp() / (rho * rho * rho)
}

/// A parameterised forward model that can be evaluated for any fiber tip.
///
/// Per-parameter constants (diffusion coefficient, source offsets, `z_b`) are
/// computed once so that repeated evaluation over fibers and pixels is cheap.
#[derive(Debug, Clone, Copy)]
pub struct ForwardModel {
    kind: ModelKind,
    mu_eff: f64,
    amplitude: f64,
    d: f64,
    lateral: f64,
    axial: f64,
    z_b: f64,
}

impl ForwardModel {
    pub fn model1(mu_eff: f64, mu_s_reduced: f64, tilt_rad: f64, moments: &ReflectionMoments) -> Result<Self> {
        let p = FluenceParams::new(mu_eff, mu_s_reduced, 1.0, moments)?;
        let l_t = p.transport_mfp();
        Ok(ForwardModel {
            kind: ModelKind::One,
            mu_eff,
            amplitude: 1.0,
            d: p.diffusion_coefficient(),
            lateral: l_t * tilt_rad.sin(),
            axial: l_t * tilt_rad.cos(),
            z_b: p.boundary.z_b,
        })
    }

    pub fn model2(mu_eff: f64) -> Result<Self> {
        if !(mu_eff >= 0.0 && mu_eff.is_finite()) {
            return Err(Error::domain(format!("mu_eff must be >= 0, got {mu_eff}")));
        }
        Ok(ForwardModel { kind: ModelKind::Two, mu_eff, amplitude: 1.0, d: 0.0, lateral: 0.0, axial: 0.0, z_b: 0.0 })
    }

    /// Builds either model; `mu_s_reduced` is ignored for Model II.
    pub fn new(
        kind: ModelKind,
        mu_eff: f64,
        mu_s_reduced: f64,
        tilt_rad: f64,
        moments: &ReflectionMoments,
    ) -> Result<Self> {
        match kind {
            ModelKind::One => ForwardModel::model1(mu_eff, mu_s_reduced, tilt_rad, moments),
            ModelKind::Two => ForwardModel::model2(mu_eff),
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn image_sources(&self, tip: Point3) -> ImageSourcePair {
        image_sources_unchecked(tip, self.lateral, self.axial, self.z_b)
    }

    /// Fluence at `r` due to the fiber at `tip`.
    pub fn eval(&self, tip: Point3, r: Point3) -> Result<f64> {
        match self.kind {
            ModelKind::One => {
                let s = self.image_sources(tip);
                let rho_p = guarded_distance(r, s.r_plus)?;
                let rho_m = guarded_distance(r, s.r_minus)?;
                Ok(model1_kernel(rho_p, rho_m, self.mu_eff, self.d, self.amplitude))
            }
            ModelKind::Two => model2_fluence(r, tip, self.mu_eff, self.amplitude),
        }
    }

    /// Fluence from every fiber at `r`, written into `out`.
    pub fn eval_fibers(&self, tips: &[Point3], r: Point3, out: &mut [f64]) -> Result<()> {
        for (o, &tip) in out.iter_mut().zip(tips) {
            *o = self.eval(tip, r)?;
        }
        Ok(())
    }
}

/// One fiber and medium, probed along the axial line `(0, 0, z)` through the
/// image centre.
#[derive(Debug, Clone, Copy)]
pub struct AxialSetup {
    pub tip: Point3,
    pub tilt_rad: f64,
    pub mu_a: f64,
    pub mu_s_reduced: f64,
    pub moments: ReflectionMoments,
    model1: ForwardModel,
    model2: ForwardModel,
    model2_amplitude: f64,
}

impl AxialSetup {
    pub fn new(tip: Point3, tilt_rad: f64, mu_a: f64, mu_s_reduced: f64, moments: ReflectionMoments) -> Result<Self> {
        let mu_eff = crate::geometry::mu_eff(mu_a, mu_s_reduced)?;
        let model1 = ForwardModel::model1(mu_eff, mu_s_reduced, tilt_rad, &moments)?;
        let model2 = ForwardModel::model2(mu_eff)?;
        let mut setup =
            AxialSetup { tip, tilt_rad, mu_a, mu_s_reduced, moments, model1, model2, model2_amplitude: 1.0 };
        setup.model2_amplitude = setup.match_model2_amplitude()?;
        Ok(setup)
    }

    /// Same medium, different fiber elevation `y'`.
    pub fn with_fiber_y(&self, fiber_y_mm: f64) -> Result<Self> {
        AxialSetup::new(
            Point3::new(self.tip.x, fiber_y_mm, self.tip.z),
            self.tilt_rad,
            self.mu_a,
            self.mu_s_reduced,
            self.moments,
        )
    }

    pub fn mu_eff(&self) -> f64 {
        (3.0 * self.mu_a * self.mu_s_reduced).sqrt()
    }

    pub fn transport_mfp(&self) -> f64 {
        1.0 / self.mu_s_reduced
    }

    pub fn model1_at(&self, z_mm: f64) -> Result<f64> {
        self.model1.eval(self.tip, Point3::new(0.0, 0.0, z_mm))
    }

    /// Model II with the tail-matched amplitude.
    pub fn model2_at(&self, z_mm: f64) -> Result<f64> {
        Ok(self.model2_amplitude * self.model2.eval(self.tip, Point3::new(0.0, 0.0, z_mm))?)
    }

    pub fn model2_amplitude(&self) -> f64 {
        self.model2_amplitude
    }

    pub fn model1(&self) -> &ForwardModel {
        &self.model1
    }

    /// Amplitude minimizing `sum (1 - a Phi_II / Phi_I)^2` over the deep tail.
    fn match_model2_amplitude(&self) -> Result<f64> {
        let l_t = self.transport_mfp();
        let (lo, hi) = TAIL_MATCH_WINDOW;
        let mut sr = 0.0;
        let mut srr = 0.0;
        for i in 0..TAIL_MATCH_SAMPLES {
            let z = l_t * (lo + (hi - lo) * i as f64 / (TAIL_MATCH_SAMPLES - 1) as f64);
            let r = Point3::new(0.0, 0.0, z);
            let m1 = self.model1.eval(self.tip, r)?;
            let m2 = self.model2.eval(self.tip, r)?;
            if m1 <= 0.0 || !m1.is_finite() || !m2.is_finite() {
                continue;
            }
            let ratio = m2 / m1;
            sr += ratio;
            srr += ratio * ratio;
        }
        if srr == 0.0 || !srr.is_finite() {
            return Err(Error::Numeric("Model I vanishes over the matching window".into()));
        }
        Ok(sr / srr)
    }
}

/// Percentage discrepancy `(Phi_I - Phi_II) / Phi_I * 100` at depth `z_mm` on
/// the axial line, with Model II's amplitude matched over the deep tail.
pub fn fractional_model_error(z_mm: f64, setup: &AxialSetup) -> Result<f64> {
    let m1 = setup.model1_at(z_mm)?;
    if m1 == 0.0 {
        return Err(Error::Numeric(format!("Model I vanishes at z = {z_mm} mm; fractional error undefined")));
    }
    let m2 = setup.model2_at(z_mm)?;
    Ok((m1 - m2) / m1 * 100.0)
}

/// Depth of the Model I fluence maximum on the axial line for a fiber at
/// elevation `fiber_y_mm`.
///
/// A dense scan over `[0.1, 40]` mm brackets the global maximum, which is then
/// refined by golden-section search to 0.01 mm.
pub fn axial_fluence_peak(fiber_y_mm: f64, setup: &AxialSetup) -> Result<f64> {
    let s = setup.with_fiber_y(fiber_y_mm)?;
    let f = |z: f64| s.model1_at(z);
    let (lo, hi) = PEAK_SCAN_RANGE_MM;
    let step = (hi - lo) / (PEAK_SCAN_POINTS - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..PEAK_SCAN_POINTS {
        let z = lo + step * i as f64;
        let v = f(z)?;
        if v > best.1 {
            best = (z, v);
        }
    }
    let mut a = (best.0 - step).max(lo);
    let mut b = (best.0 + step).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > PEAK_TOLERANCE_MM {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Image-source pair for a single medium, exposed for diagnostics.
pub fn model1_sources(tip: Point3, tilt_rad: f64, params: &FluenceParams) -> Result<ImageSourcePair> {
    image_sources(tip, tilt_rad, transport_mfp(params.mu_s_reduced)?, params.boundary.z_b)
}
