//! Fluence compensation of measured absorption spectra and the metrics used
//! to judge it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::DebiasedTensor;
use crate::geometry::FIBER_COUNT;
use crate::tensor::Cube;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Uncorrected,
    Corrected,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub kind: SpectrumKind,
    pub wavelengths_nm: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    /// Copy scaled to unit Euclidean norm.
    pub fn unit_normalized(&self) -> Result<Spectrum> {
        let n = norm(&self.values);
        if n == 0.0 {
            return Err(Error::domain("cannot normalize a zero spectrum"));
        }
        Ok(Spectrum { values: self.values.iter().map(|v| v / n).collect(), ..self.clone() })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `d_j`: debiased measurements summed over fibers and footprint pixels.
pub fn uncorrected_spectrum(tensor: &DebiasedTensor, pixels: &[usize]) -> Result<Spectrum> {
    if pixels.is_empty() {
        return Err(Error::domain("target footprint is empty"));
    }
    let values = (0..tensor.n_wavelengths()).map(|j| pixels.iter().map(|&i| tensor.fiber_sum(j, i)).sum()).collect();
    Ok(Spectrum { kind: SpectrumKind::Uncorrected, wavelengths_nm: tensor.wavelengths_nm.clone(), values })
}

/// `c_j`: least-squares projection of the measurements onto the estimated
/// fluence, `sum(Phi y) / sum(Phi²)` over fibers and footprint pixels.
///
/// `fluence` is `[wavelength][fiber][footprint pixel]`, in the order of
/// `pixels`.
pub fn corrected_spectrum(tensor: &DebiasedTensor, fluence: &Cube, pixels: &[usize]) -> Result<Spectrum> {
    if pixels.is_empty() {
        return Err(Error::domain("target footprint is empty"));
    }
    if fluence.dims() != [tensor.n_wavelengths(), FIBER_COUNT, pixels.len()] {
        return Err(Error::domain(format!(
            "fluence cube {:?} does not match {} wavelengths × {FIBER_COUNT} fibers × {} pixels",
            fluence.dims(),
            tensor.n_wavelengths(),
            pixels.len()
        )));
    }
    let mut values = Vec::with_capacity(tensor.n_wavelengths());
    for j in 0..tensor.n_wavelengths() {
        let (mut num, mut den) = (0.0, 0.0);
        for (s, &i) in pixels.iter().enumerate() {
            for k in 0..FIBER_COUNT {
                let phi = fluence.get(j, k, s);
                num += phi * tensor.values.get(j, k, i);
                den += phi * phi;
            }
        }
        if !(den > 0.0) {
            return Err(Error::Numeric(format!(
                "estimated fluence vanishes at {} nm; correction undefined",
                tensor.wavelengths_nm[j]
            )));
        }
        values.push(num / den);
    }
    Ok(Spectrum { kind: SpectrumKind::Corrected, wavelengths_nm: tensor.wavelengths_nm.clone(), values })
}

/// `(mu - mu_hat) / mu × 100`.
pub fn estimation_fractional_error(mu_true: f64, mu_hat: f64) -> Result<f64> {
    if mu_true == 0.0 {
        return Err(Error::domain("fractional error is undefined for a zero true value"));
    }
    Ok((mu_true - mu_hat) / mu_true * 100.0)
}

/// Shape comparison of two spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Similarity {
    /// Euclidean distance after scaling both spectra to unit norm.
    pub distance: f64,
    /// Pearson correlation of the raw values; NaN if either is constant.
    pub correlation: f64,
}

pub fn spectrum_similarity(a: &[f64], b: &[f64]) -> Result<Similarity> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::domain("spectra must have equal, nonzero length"));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::domain("spectrum similarity is undefined for a zero spectrum"));
    }
    let distance = a.iter().zip(b).map(|(x, y)| (x / na - y / nb).powi(2)).sum::<f64>().sqrt();
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    let correlation = if saa == 0.0 || sbb == 0.0 { f64::NAN } else { sab / (saa * sbb).sqrt() };
    Ok(Similarity { distance, correlation })
}
