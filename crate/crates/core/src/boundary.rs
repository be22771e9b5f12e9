//! Fresnel reflectance at the tissue surface, its angular moments and the
//! extrapolated-boundary distance used by the image-source fluence models.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;

const MOMENT_REL_TOL: f64 = 1e-8;
const MOMENT_ABS_TOL: f64 = 1e-13;

/// Unpolarized Fresnel reflectance for light inside the medium hitting the
/// surface at incidence `theta_rad`.
///
/// `n_rel` is the medium index over the outer index. Beyond the critical
/// angle (only when `n_rel > 1`) the reflectance is 1.
pub fn fresnel_reflectance(theta_rad: f64, n_rel: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta_rad) {
        return Err(Error::domain(format!("incidence angle {theta_rad} rad outside [0, pi/2]")));
    }
    if !(n_rel > 0.0 && n_rel.is_finite()) {
        return Err(Error::domain(format!("relative index must be > 0, got {n_rel}")));
    }
    Ok(reflectance(theta_rad, n_rel))
}

pub(crate) fn reflectance(theta: f64, n_rel: f64) -> f64 {
    if n_rel == 1.0 {
        return if theta < FRAC_PI_2 { 0.0 } else { 1.0 };
    }
    let sin_t = n_rel * theta.sin();
    if sin_t >= 1.0 {
        return 1.0;
    }
    let cos_i = theta.cos();
    let cos_t = (1.0 - sin_t * sin_t).sqrt();
    let rp = (n_rel * cos_t - cos_i) / (n_rel * cos_t + cos_i);
    let rs = (n_rel * cos_i - cos_t) / (n_rel * cos_i + cos_t);
    0.5 * (rp * rp + rs * rs)
}

/// Critical angle `asin(1 / n_rel)` when total internal reflection exists.
pub fn critical_angle(n_rel: f64) -> Option<f64> {
    (n_rel > 1.0).then(|| (1.0 / n_rel).asin())
}

/// Fluence and current reflection moments of the Fresnel reflectance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionMoments {
    pub n_rel: f64,
    pub r_phi: f64,
    pub r_j: f64,
}

impl ReflectionMoments {
    /// `(1 + R_J) / (1 - R_phi)`, the factor multiplying `2D` in `z_b`.
    pub fn extrapolation_factor(&self) -> f64 {
        (1.0 + self.r_j) / (1.0 - self.r_phi)
    }

    pub fn extrapolated_distance(&self, d_mm: f64) -> Result<f64> {
        if !(d_mm >= 0.0 && d_mm.is_finite()) {
            return Err(Error::domain(format!("diffusion coefficient must be >= 0, got {d_mm}")));
        }
        if self.r_phi >= 1.0 {
            return Err(Error::Singular(format!(
                "fluence reflection moment {} >= 1 makes the boundary singular",
                self.r_phi
            )));
        }
        Ok(2.0 * d_mm * self.extrapolation_factor())
    }
}

/// Computes `R_phi = ∫ 2 sin cos R dθ` and `R_J = ∫ 3 sin cos² R dθ` over
/// `[0, pi/2]`.
///
/// The interval is split at the critical angle when it exists, where the
/// reflectance has a kink.
pub fn reflection_moments(n_rel: f64) -> Result<ReflectionMoments> {
    if !(n_rel > 0.0 && n_rel.is_finite()) {
        return Err(Error::domain(format!("relative index must be > 0, got {n_rel}")));
    }
    if n_rel == 1.0 {
        return Ok(ReflectionMoments { n_rel, r_phi: 0.0, r_j: 0.0 });
    }
    let mut breaks = vec![0.0];
    if let Some(tc) = critical_angle(n_rel) {
        breaks.push(tc);
    }
    breaks.push(FRAC_PI_2);

    let mut r_phi = 0.0;
    let mut r_j = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        r_phi += integrate(
            |t| 2.0 * t.sin() * t.cos() * reflectance(t, n_rel),
            a,
            b,
            MOMENT_REL_TOL,
            MOMENT_ABS_TOL,
        )?;
        r_j += integrate(
            |t| {
                let c = t.cos();
                3.0 * t.sin() * c * c * reflectance(t, n_rel)
            },
            a,
            b,
            MOMENT_REL_TOL,
            MOMENT_ABS_TOL,
        )?;
    }
    Ok(ReflectionMoments { n_rel, r_phi, r_j })
}

/// Extrapolated boundary distance `2D (1 + R_J) / (1 - R_phi)`, mm.
pub fn extrapolated_distance(d_mm: f64, n_rel: f64) -> Result<f64> {
    reflection_moments(n_rel)?.extrapolated_distance(d_mm)
}

/// Boundary description for one medium: reflection moments plus the
/// resulting extrapolated distance for a particular diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub n_rel: f64,
    pub r_phi: f64,
    pub r_j: f64,
    /// mm
    pub z_b: f64,
}

impl BoundaryCondition {
    pub fn new(moments: &ReflectionMoments, d_mm: f64) -> Result<Self> {
        let z_b = moments.extrapolated_distance(d_mm)?;
        Ok(BoundaryCondition { n_rel: moments.n_rel, r_phi: moments.r_phi, r_j: moments.r_j, z_b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Midpoint Riemann sum with `panels` slices, independent of the adaptive rule.
    fn riemann_moments(n_rel: f64, panels: usize) -> (f64, f64) {
        let h = FRAC_PI_2 / panels as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..panels {
            let t = (i as f64 + 0.5) * h;
            let r = reflectance(t, n_rel);
            a += 2.0 * t.sin() * t.cos() * r;
            b += 3.0 * t.sin() * t.cos() * t.cos() * r;
        }
        (a * h, b * h)
    }

    #[test]
    fn normal_incidence_value() {
        let r = fresnel_reflectance(0.0, 1.33).unwrap();
        let expect = ((1.33f64 - 1.0) / (1.33 + 1.0)).powi(2);
        assert!((r - expect).abs() < 1e-15);
        assert!((r - 0.02006).abs() < 5e-6);
    }

    #[test]
    fn total_internal_reflection_branch() {
        let tc = critical_angle(1.4).unwrap();
        assert_eq!(fresnel_reflectance(tc, 1.4).unwrap(), 1.0);
        assert_eq!(fresnel_reflectance(tc + 0.1, 1.4).unwrap(), 1.0);
        assert!(fresnel_reflectance(tc - 1e-3, 1.4).unwrap() < 1.0);
        assert!(critical_angle(0.893).is_none());
    }

    #[test]
    fn matched_indices_reflect_nothing() {
        for t in [0.0, 0.3, 1.0, 1.5] {
            assert_eq!(fresnel_reflectance(t, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_out_of_range_angles() {
        assert!(fresnel_reflectance(-0.1, 1.4).is_err());
        assert!(fresnel_reflectance(1.6, 1.4).is_err());
        assert!(fresnel_reflectance(0.2, 0.0).is_err());
    }

    #[test]
    fn grazing_limit_is_total() {
        for n in [0.75, 0.893, 1.12, 1.4] {
            let r = fresnel_reflectance(FRAC_PI_2 - 1e-9, n).unwrap();
            assert!(r > 0.999, "n = {n}: {r}");
        }
    }

    #[test]
    fn moments_match_riemann_oracle() {
        for n in [0.75, 1.0, 1.12, 1.4, 1.33 / 1.49] {
            let m = reflection_moments(n).unwrap();
            let (a, b) = riemann_moments(n, 1_000_000);
            assert!((m.r_phi - a).abs() < 1e-6, "n = {n}: {} vs {a}", m.r_phi);
            assert!((m.r_j - b).abs() < 1e-6, "n = {n}: {} vs {b}", m.r_j);
        }
    }

    #[test]
    fn moment_ranges() {
        let air = reflection_moments(1.4).unwrap();
        assert!(air.r_phi > 0.0 && air.r_phi < 1.0);
        assert!(air.r_j > 0.0 && air.r_j < 1.0);
        let glass = reflection_moments(1.33 / 1.49).unwrap();
        assert!(glass.r_phi > 0.0 && glass.r_phi < 0.2);
        assert!(glass.r_j > 0.0 && glass.r_j < 0.2);
        let matched = reflection_moments(1.0).unwrap();
        assert_eq!((matched.r_phi, matched.r_j), (0.0, 0.0));
    }

    #[test]
    fn extrapolated_distance_cases() {
        let d = 1.0 / 3.0;
        assert!((extrapolated_distance(d, 1.0).unwrap() - 2.0 * d).abs() < 1e-12);
        let (a, b) = riemann_moments(1.4, 1_000_000);
        let oracle = 2.0 * d * (1.0 + b) / (1.0 - a);
        let zb = extrapolated_distance(d, 1.4).unwrap();
        assert!(zb > 2.0 * d);
        assert!((zb - oracle).abs() < 1e-5);
        assert!(extrapolated_distance(1e-12, 1.4).unwrap() < 1e-10);
        let singular = ReflectionMoments { n_rel: 9.0, r_phi: 1.0, r_j: 0.5 };
        assert!(matches!(singular.extrapolated_distance(d), Err(Error::Singular(_))));
    }

    proptest! {
        #[test]
        fn normal_incidence_reciprocity(n in 0.2f64..5.0) {
            let a = fresnel_reflectance(0.0, n).unwrap();
            let b = fresnel_reflectance(0.0, 1.0 / n).unwrap();
            prop_assert!((a - b).abs() < 1e-14);
        }

        #[test]
        fn reflectance_is_a_probability(t in 0.0f64..FRAC_PI_2, n in 0.2f64..5.0) {
            let r = fresnel_reflectance(t, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}
