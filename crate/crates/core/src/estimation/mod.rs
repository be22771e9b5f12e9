//! Optical-parameter estimation from multi-fiber measurements.
//!
//! The pipeline removes the per-fiber noise floor measured in the zero-power
//! control frame, keeps the pixels whose summed signal clears a threshold,
//! normalizes every retained pixel across fibers (which cancels the unknown
//! local absorption and Grüneisen factors) and fits a fluence model to the
//! normalized data one wavelength at a time.

mod fit;
mod simplex;
mod metrics;
mod smooth;

use serde::{Deserialize, Serialize};

pub use fit::{estimate, fit_parameters, model_fluence_cube, EstimateOptions, EstimationResult, SearchConfig, WavelengthFit};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};
pub use metrics::{fluence_correlation, noise_sigma_for_snr, profile_correlation, snr_db};
pub use smooth::{log_quadratic_fit, quadratic_fit, smooth_spectra};

use crate::error::{Error, Result};
use crate::geometry::FIBER_COUNT;
use crate::tensor::{Cube, MeasurementTensor, PixelGrid};

/// Mean of the control frame over pixels, per fiber.
pub fn estimate_noise_bias(tensor: &MeasurementTensor) -> Result<Vec<f64>> {
    let c = tensor.control_index.ok_or(Error::MissingControlFrame)?;
    let n = tensor.n_pixels() as f64;
    Ok((0..FIBER_COUNT).map(|k| tensor.values.row(c, k).iter().sum::<f64>() / n).collect())
}

/// Measurements with the noise floor removed and the control frame dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct DebiasedTensor {
    /// Wavelengths of the retained frames.
    pub wavelengths_nm: Vec<f64>,
    pub pixels: PixelGrid,
    pub values: Cube,
}

impl DebiasedTensor {
    pub fn n_wavelengths(&self) -> usize {
        self.values.dims()[0]
    }

    pub fn n_pixels(&self) -> usize {
        self.values.dims()[2]
    }

    /// `sum_k y[j][k][i]`.
    pub fn fiber_sum(&self, j: usize, i: usize) -> f64 {
        (0..FIBER_COUNT).map(|k| self.values.get(j, k, i)).sum()
    }

    /// `sum_{j,k} y[j][k][i]` for every pixel.
    pub fn summed_image(&self) -> Vec<f64> {
        let n = self.n_pixels();
        let mut s = vec![0.0; n];
        for j in 0..self.n_wavelengths() {
            for k in 0..FIBER_COUNT {
                for (acc, v) in s.iter_mut().zip(self.values.row(j, k)) {
                    *acc += v;
                }
            }
        }
        s
    }
}

/// Subtracts `bias[k]` from every data frame and drops the control frame.
pub fn debias(tensor: &MeasurementTensor, bias: &[f64]) -> Result<DebiasedTensor> {
    if bias.len() != FIBER_COUNT {
        return Err(Error::Config(format!("bias vector needs {FIBER_COUNT} entries, got {}", bias.len())));
    }
    let frames: Vec<usize> = (0..tensor.n_wavelengths()).filter(|&j| Some(j) != tensor.control_index).collect();
    if frames.is_empty() {
        return Err(Error::Config("tensor has no data frames besides the control frame".into()));
    }
    let n = tensor.n_pixels();
    let mut values = Cube::zeros([frames.len(), FIBER_COUNT, n]);
    for (jj, &j) in frames.iter().enumerate() {
        for (k, b) in bias.iter().enumerate() {
            for (i, v) in tensor.values.row(j, k).iter().enumerate() {
                values.set(jj, k, i, v - b);
            }
        }
    }
    Ok(DebiasedTensor {
        wavelengths_nm: frames.iter().map(|&j| tensor.wavelengths_nm[j]).collect(),
        pixels: tensor.pixels,
        values,
    })
}

/// How the support threshold `tau` is chosen from the summed image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TauPolicy {
    /// `tau` is the given percentile (0–100) of the summed image.
    Percentile(f64),
    /// `tau` is used as given.
    Absolute(f64),
    /// `tau` is this fraction of the brightest summed pixel.
    FractionOfMax(f64),
}

impl Default for TauPolicy {
    fn default() -> Self {
        TauPolicy::Percentile(90.0)
    }
}

impl TauPolicy {
    pub fn threshold(&self, summed: &[f64]) -> Result<f64> {
        match *self {
            TauPolicy::Absolute(t) if !t.is_nan() => Ok(t),
            TauPolicy::Percentile(p) if (0.0..=100.0).contains(&p) => Ok(percentile(summed, p)),
            TauPolicy::FractionOfMax(f) if f.is_finite() => Ok(f * summed.iter().copied().fold(f64::MIN, f64::max)),
            other => Err(Error::Config(format!("invalid threshold policy {other:?}"))),
        }
    }
}

/// Linear-interpolated percentile, matching the usual `(n - 1) p / 100` rank.
fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (v.len() - 1) as f64 * p / 100.0;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    v[lo] + (rank - lo as f64) * (v[hi] - v[lo])
}

/// Which sum defines the per-pixel weight of the fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `w_i = sum_{j,k} y`, shared by all wavelengths.
    #[default]
    Summed,
    /// `w_i = sum_k y` at the wavelength being fitted.
    PerWavelength,
}

/// Retained pixels and their fit weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Support {
    pub tau: f64,
    /// Pixel indices, ascending.
    pub pixels: Vec<usize>,
    /// `weights[j][s]` for wavelength `j` and support entry `s`.
    pub weights: Vec<Vec<f64>>,
}

/// Keeps the pixels whose summed signal exceeds the policy threshold.
pub fn select_support(tensor: &DebiasedTensor, policy: TauPolicy, mode: WeightMode) -> Result<Support> {
    let summed = tensor.summed_image();
    let tau = policy.threshold(&summed)?;
    let pixels: Vec<usize> = (0..summed.len()).filter(|&i| summed[i] > tau).collect();
    if pixels.is_empty() {
        let max = summed.iter().copied().fold(f64::MIN, f64::max);
        return Err(Error::EmptySupport { tau, suggested: max - 1e-6 * max.abs().max(1.0) });
    }
    let weights = (0..tensor.n_wavelengths())
        .map(|j| {
            pixels
                .iter()
                .map(|&i| match mode {
                    WeightMode::Summed => summed[i],
                    WeightMode::PerWavelength => tensor.fiber_sum(j, i),
                })
                .collect()
        })
        .collect();
    Ok(Support { tau, pixels, weights })
}

/// One retained pixel at one wavelength, normalized across fibers.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPixel {
    pub pixel: usize,
    pub weight: f64,
    /// Fiber-sum before normalization.
    pub fiber_sum: f64,
    pub values: [f64; FIBER_COUNT],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTensor {
    pub wavelengths_nm: Vec<f64>,
    pub pixels: PixelGrid,
    /// Retained pixels per wavelength.
    pub frames: Vec<Vec<NormalizedPixel>>,
    /// `(wavelength, pixel)` pairs dropped for a nonpositive fiber-sum.
    pub dropped: Vec<(usize, usize)>,
}

/// Divides each supported pixel by its fiber-sum, so every retained
/// `(wavelength, pixel)` slice sums to one over fibers.
///
/// Pixels whose fiber-sum is not positive cannot be normalized and are dropped
/// from that wavelength; they are listed in [`NormalizedTensor::dropped`].
pub fn normalize(tensor: &DebiasedTensor, support: &Support) -> Result<NormalizedTensor> {
    let mut frames = Vec::with_capacity(tensor.n_wavelengths());
    let mut dropped = Vec::new();
    for j in 0..tensor.n_wavelengths() {
        let mut frame = Vec::with_capacity(support.pixels.len());
        for (s, &i) in support.pixels.iter().enumerate() {
            let sum = tensor.fiber_sum(j, i);
            if !(sum > 0.0) {
                dropped.push((j, i));
                continue;
            }
            let mut values = [0.0; FIBER_COUNT];
            for (k, v) in values.iter_mut().enumerate() {
                *v = tensor.values.get(j, k, i) / sum;
            }
            frame.push(NormalizedPixel { pixel: i, weight: support.weights[j][s], fiber_sum: sum, values });
        }
        if frame.is_empty() {
            return Err(Error::Numeric(format!(
                "no supported pixel has a positive fiber-sum at {} nm",
                tensor.wavelengths_nm[j]
            )));
        }
        frames.push(frame);
    }
    Ok(NormalizedTensor { wavelengths_nm: tensor.wavelengths_nm.clone(), pixels: tensor.pixels, frames, dropped })
}
