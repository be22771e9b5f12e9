//! Random sampling primitives for photon transport.

use rand::Rng;

/// Exponentially distributed free path for total attenuation `mu_t`.
#[inline]
pub fn sample_free_path<R: Rng + ?Sized>(rng: &mut R, mu_t: f64) -> f64 {
    // 1 - u lies in (0, 1], so the log is finite
    -(1.0 - rng.random::<f64>()).ln() / mu_t
}

/// Deflection cosine drawn from the Henyey–Greenstein phase function.
#[inline]
pub fn sample_hg_cos<R: Rng + ?Sized>(rng: &mut R, g: f64) -> f64 {
    let u: f64 = rng.random();
    if g.abs() < 1e-6 {
        return 2.0 * u - 1.0;
    }
    let frac = (1.0 - g * g) / (1.0 - g + 2.0 * g * u);
    ((1.0 + g * g - frac * frac) / (2.0 * g)).clamp(-1.0, 1.0)
}

/// Uniform azimuth as `(cos phi, sin phi)`, without trigonometric calls.
///
/// A point drawn uniformly in the unit disk has a uniform polar angle; the
/// double-angle form of that angle is also uniform and needs no square root.
#[inline]
pub fn sample_azimuth<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let x = 2.0 * rng.random::<f64>() - 1.0;
        let y = 2.0 * rng.random::<f64>() - 1.0;
        let r2 = x * x + y * y;
        if r2 > 0.0 && r2 < 1.0 {
            return ((x * x - y * y) / r2, 2.0 * x * y / r2);
        }
    }
}

/// Rotates unit direction `dir` by polar deflection `cos_t` and azimuth `phi`.
#[inline]
pub fn deflect(dir: [f64; 3], cos_t: f64, phi: f64) -> [f64; 3] {
    let (sin_p, cos_p) = phi.sin_cos();
    deflect_cs(dir, cos_t, cos_p, sin_p)
}

/// [`deflect`] with the azimuth given by its cosine and sine.
#[inline]
pub fn deflect_cs(dir: [f64; 3], cos_t: f64, cos_p: f64, sin_p: f64) -> [f64; 3] {
    let [ux, uy, uz] = dir;
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let out = if uz.abs() > 0.999_99 {
        [sin_t * cos_p, sin_t * sin_p, cos_t * uz.signum()]
    } else {
        let tmp = (1.0 - uz * uz).sqrt();
        let k = sin_t / tmp;
        [
            k * (ux * uz * cos_p - uy * sin_p) + ux * cos_t,
            k * (uy * uz * cos_p + ux * sin_p) + uy * cos_t,
            -sin_t * cos_p * tmp + uz * cos_t,
        ]
    };
    let inv = 1.0 / (out[0] * out[0] + out[1] * out[1] + out[2] * out[2]).sqrt();
    [out[0] * inv, out[1] * inv, out[2] * inv]
}
