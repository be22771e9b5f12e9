use super::fit::EstimationResult;
use crate::error::{Error, Result};

/// Least-squares quadratic in `x`, evaluated back at `x`.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::domain(format!("quadratic fit needs >= 3 matched points, got {}/{}", x.len(), y.len())));
    }
    // centre and scale the abscissa so the normal equations stay well conditioned
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let half_range = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if half_range == 0.0 {
        return Err(Error::domain("quadratic fit needs distinct abscissae"));
    }
    let t: Vec<f64> = x.iter().map(|v| (v - mean) / half_range).collect();
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (&ti, &yi) in t.iter().zip(y) {
        let basis = [1.0, ti, ti * ti];
        for r in 0..3 {
            b[r] += basis[r] * yi;
            for c in 0..3 {
                a[r][c] += basis[r] * basis[c];
            }
        }
    }
    let coef = solve3(a, b).ok_or_else(|| Error::Numeric("quadratic fit is rank deficient".into()))?;
    Ok(t.iter().map(|&ti| coef[0] + coef[1] * ti + coef[2] * ti * ti).collect())
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Quadratic fit to `ln y`, so the smoothed curve stays positive.
pub fn log_quadratic_fit(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::domain(format!("cannot smooth nonpositive estimate {v}")));
    }
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(quadratic_fit(x, &logs)?.into_iter().map(f64::exp).collect())
}

/// Attaches smoothed copies of the per-wavelength estimates, each a quadratic
/// in wavelength fitted to the log of the estimates. The raw estimates are
/// kept alongside.
pub fn smooth_spectra(mut result: EstimationResult) -> Result<EstimationResult> {
    let wl = result.wavelengths_nm();
    result.smoothed_mu_eff = Some(log_quadratic_fit(&wl, &result.mu_eff_hat())?);
    result.smoothed_mu_s = match result.mu_s_hat() {
        Some(mu_s) => Some(log_quadratic_fit(&wl, &mu_s)?),
        None => None,
    };
    Ok(result)
}
