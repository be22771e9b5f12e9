use crate::error::{Error, Result};
use crate::tensor::Cube;

/// Signal-to-noise ratio in dB: `10 log10(mean(p)² / sigma²)`.
pub fn snr_db(signal: &[f64], sigma_n: f64) -> Result<f64> {
    if sigma_n == 0.0 {
        return Err(Error::domain("noise level is zero, so the SNR is infinite"));
    }
    if !(sigma_n > 0.0 && sigma_n.is_finite()) || signal.is_empty() {
        return Err(Error::domain(format!("need a positive noise level and a nonempty signal, got sigma = {sigma_n}")));
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    Ok(10.0 * (mean * mean / (sigma_n * sigma_n)).log10())
}

/// Noise standard deviation giving `snr_db` for a signal of mean `mean_signal`.
pub fn noise_sigma_for_snr(mean_signal: f64, snr_db: f64) -> f64 {
    mean_signal.abs() / 10f64.powf(snr_db / 20.0)
}

/// Correlation of two per-fiber profiles after removing each one's mean:
/// `sum(a b) / sqrt(sum(a²) sum(b²))`.
pub fn profile_correlation(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() || estimate.is_empty() {
        return Err(Error::domain("profiles must have equal, nonzero length"));
    }
    let centre = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - m).collect::<Vec<_>>()
    };
    let (a, b) = (centre(estimate), centre(truth));
    let saa: f64 = a.iter().map(|x| x * x).sum();
    let sbb: f64 = b.iter().map(|x| x * x).sum();
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Numeric("correlation is undefined for a constant profile".into()));
    }
    let sab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    Ok(sab / (saa * sbb).sqrt())
}

/// Correlation between estimated and true fluence cubes
/// `[wavelength][fiber][pixel]`.
///
/// Each `(wavelength, pixel)` slice is first normalized to unit sum over
/// fibers, because estimated fluence is only known up to a per-wavelength,
/// per-pixel scale. The normalized slices are summed into one value per fiber
/// and the two profiles are compared with [`profile_correlation`].
pub fn fluence_correlation(estimate: &Cube, truth: &Cube) -> Result<f64> {
    if estimate.dims() != truth.dims() {
        return Err(Error::domain(format!("cube shapes differ: {:?} vs {:?}", estimate.dims(), truth.dims())));
    }
    let profile = |c: &Cube| -> Result<Vec<f64>> {
        let [nj, nk, ni] = c.dims();
        let mut out = vec![0.0; nk];
        for j in 0..nj {
            for i in 0..ni {
                let s: f64 = (0..nk).map(|k| c.get(j, k, i)).sum();
                if !(s > 0.0) {
                    return Err(Error::Numeric(format!("fluence sums to {s} over fibers at ({j}, {i})")));
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += c.get(j, k, i) / s;
                }
            }
        }
        Ok(out)
    };
    profile_correlation(&profile(estimate)?, &profile(truth)?)
}
