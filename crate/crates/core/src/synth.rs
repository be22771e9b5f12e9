//! Synthetic multi-fiber measurements from chromophore targets.
//!
//! Each target pixel produces `mu_a(r) * Phi_k(r)` for fiber `k`, with the
//! Grüneisen parameter and model amplitude fixed to one, so that spectra are
//! recovered up to a global scale. Additive white Gaussian noise is set per
//! wavelength from the requested SNR, and a zero-power control frame holding
//! noise only is inserted at the control index.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::boundary::ReflectionMoments;
use crate::error::{Error, Result};
use crate::estimation::noise_sigma_for_snr;
use crate::fluence::{ForwardModel, ModelKind};
use crate::geometry::{OpticalMedium, Point3, ProbeGeometry, WavelengthGrid, FIBER_COUNT};
use crate::tensor::{Cube, MeasurementTensor, PixelGrid};

/// Absorption per unit concentration at each analysis wavelength, mm⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChromophoreSpectrum {
    pub name: String,
    pub alpha: Vec<f64>,
}

/// Pixels a target occupies around its centre pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Footprint {
    /// Only the pixel nearest the target position.
    Single,
    /// A `(2h+1) × (2h+1)` block with half-width `h`, clipped to the image.
    Square(usize),
}

impl Default for Footprint {
    fn default() -> Self {
        Footprint::Square(1)
    }
}

impl Footprint {
    fn half_width(self) -> usize {
        match self {
            Footprint::Single => 0,
            Footprint::Square(h) => h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub x_mm: f64,
    pub z_mm: f64,
    /// Concentration of each chromophore, in the order of [`TargetSet::chromophores`].
    pub concentrations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    pub chromophores: Vec<ChromophoreSpectrum>,
    pub targets: Vec<Target>,
    #[serde(default)]
    pub footprint: Footprint,
}

impl TargetSet {
    pub fn validate(&self, n_wavelengths: usize) -> Result<()> {
        for c in &self.chromophores {
            if c.alpha.len() != n_wavelengths {
                return Err(Error::Config(format!(
                    "chromophore {} has {} absorption values for {n_wavelengths} wavelengths",
                    c.name,
                    c.alpha.len()
                )));
            }
            if c.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return Err(Error::Config(format!("chromophore {} has a negative or non-finite absorption", c.name)));
            }
        }
        for (t, target) in self.targets.iter().enumerate() {
            if target.concentrations.len() != self.chromophores.len() {
                return Err(Error::Config(format!(
                    "target {t} lists {} concentrations for {} chromophores",
                    target.concentrations.len(),
                    self.chromophores.len()
                )));
            }
            if target.concentrations.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(Error::Config(format!("target {t} has a negative concentration")));
            }
        }
        Ok(())
    }

    /// Mixture absorption of target `t` at analysis wavelength `j`.
    pub fn mu_a(&self, t: usize, j: usize) -> f64 {
        self.chromophores.iter().zip(&self.targets[t].concentrations).map(|(c, conc)| conc * c.alpha[j]).sum()
    }

    /// Mixture absorption spectrum of target `t`.
    pub fn spectrum(&self, t: usize, n_wavelengths: usize) -> Vec<f64> {
        (0..n_wavelengths).map(|j| self.mu_a(t, j)).collect()
    }

    /// Pixel indices covered by each target. Fails if any target centre lies
    /// outside the image, listing all such targets.
    pub fn footprints(&self, pixels: &PixelGrid) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::with_capacity(self.targets.len());
        let mut outside = Vec::new();
        let h = self.footprint.half_width() as isize;
        for (t, target) in self.targets.iter().enumerate() {
            let Some(centre) = pixels.nearest(target.x_mm, target.z_mm) else {
                outside.push(format!("#{t} at ({}, {}) mm", target.x_mm, target.z_mm));
                continue;
            };
            let (cz, cx) = ((centre / pixels.nx) as isize, (centre % pixels.nx) as isize);
            let mut fp = Vec::new();
            for dz in -h..=h {
                for dx in -h..=h {
                    let (z, x) = (cz + dz, cx + dx);
                    if (0..pixels.nz as isize).contains(&z) && (0..pixels.nx as isize).contains(&x) {
                        fp.push(pixels.index(x as usize, z as usize));
                    }
                }
            }
            out.push(fp);
        }
        if !outside.is_empty() {
            return Err(Error::Config(format!("targets outside the imaging field: {}", outside.join(", "))));
        }
        Ok(out)
    }
}

/// Noise settings. `snr_db = None` produces noiseless data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub snr_db: Option<f64>,
    /// Mean of the noise, in units of the average per-wavelength sigma. The
    /// same offset is applied to every frame, including the control frame.
    #[serde(default)]
    pub offset_sigmas: f64,
    pub seed: u64,
}

/// Everything needed to render one measurement tensor.
#[derive(Debug, Clone)]
pub struct Scene<'a> {
    pub geometry: &'a ProbeGeometry,
    pub moments: &'a ReflectionMoments,
    /// Optical properties at the analysis wavelengths.
    pub medium: &'a OpticalMedium,
    pub wavelengths: &'a WavelengthGrid,
    pub pixels: PixelGrid,
    pub targets: &'a TargetSet,
    pub model: ModelKind,
}

impl Scene<'_> {
    /// Forward model at analysis wavelength `j`.
    pub fn model_at(&self, j: usize) -> Result<ForwardModel> {
        let p = self.medium.at(j);
        ForwardModel::new(self.model, p.mu_eff(), p.mu_s_reduced, self.geometry.tilt_rad(), self.moments)
    }

    /// True fluence `[analysis wavelength][fiber][point]`.
    pub fn fluence_cube(&self, points: &[Point3]) -> Result<Cube> {
        let nj = self.medium.len();
        let mut cube = Cube::zeros([nj, FIBER_COUNT, points.len()]);
        for j in 0..nj {
            let m = self.model_at(j)?;
            for (i, &p) in points.iter().enumerate() {
                for (k, &tip) in self.geometry.fiber_tips().iter().enumerate() {
                    cube.set(j, k, i, m.eval(tip, p)?);
                }
            }
        }
        Ok(cube)
    }

    /// Noiseless signal `[analysis wavelength][fiber][pixel]`.
    pub fn signal(&self) -> Result<Cube> {
        let nj = self.wavelengths.analysis_indices().len();
        if self.medium.len() != nj {
            return Err(Error::Config(format!(
                "medium lists {} wavelengths but the grid has {nj} analysis wavelengths",
                self.medium.len()
            )));
        }
        self.pixels.validate()?;
        self.targets.validate(nj)?;
        let footprints = self.targets.footprints(&self.pixels)?;
        let mut cube = Cube::zeros([nj, FIBER_COUNT, self.pixels.len()]);
        for j in 0..nj {
            let m = self.model_at(j)?;
            for (t, fp) in footprints.iter().enumerate() {
                let mu_a = self.targets.mu_a(t, j);
                for &i in fp {
                    let p = self.pixels.point(i);
                    for (k, &tip) in self.geometry.fiber_tips().iter().enumerate() {
                        // overlapping footprints add, as two absorbers would
                        cube.set(j, k, i, cube.get(j, k, i) + mu_a * m.eval(tip, p)?);
                    }
                }
            }
        }
        Ok(cube)
    }
}

/// Derives the seed of trial `index` from a base seed.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng.next_u64()
}

/// Renders the scene into a measurement tensor.
///
/// Per wavelength, `sigma_j` gives the requested SNR for the brightest pixel's
/// fiber-mean signal. The control frame uses the mean of the `sigma_j`.
/// Standard-normal draws are taken in a fixed order, so the same seed yields
/// the same noise pattern scaled to any SNR.
pub fn synthesize(scene: &Scene, noise: &NoiseSpec) -> Result<MeasurementTensor> {
    let signal = scene.signal()?;
    let analysis = scene.wavelengths.analysis_indices();
    let [nj, nk, ni] = signal.dims();
    let sigmas: Vec<f64> = match noise.snr_db {
        None => vec![0.0; nj],
        Some(snr) if snr.is_finite() => (0..nj)
            .map(|j| {
                let peak = (0..ni)
                    .map(|i| (0..nk).map(|k| signal.get(j, k, i)).sum::<f64>() / nk as f64)
                    .fold(0.0, f64::max);
                noise_sigma_for_snr(peak, snr)
            })
            .collect(),
        Some(snr) => return Err(Error::Config(format!("snr_db must be finite, got {snr}"))),
    };
    if !(noise.offset_sigmas.is_finite() && noise.offset_sigmas >= 0.0) {
        return Err(Error::Config("noise offset must be finite and >= 0".into()));
    }
    let mean_sigma = sigmas.iter().sum::<f64>() / nj as f64;
    let offset = noise.offset_sigmas * mean_sigma;

    let total = scene.wavelengths.len();
    let mut values = Cube::zeros([total, nk, ni]);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    for jj in 0..total {
        let (base, sigma) = match analysis.iter().position(|&a| a == jj) {
            Some(j) => (Some(j), sigmas[j]),
            None => (None, mean_sigma),
        };
        for k in 0..nk {
            for i in 0..ni {
                let z: f64 = StandardNormal.sample(&mut rng);
                let s = base.map_or(0.0, |j| signal.get(j, k, i));
                values.set(jj, k, i, s + offset + sigma * z);
            }
        }
    }
    MeasurementTensor::new(
        scene.wavelengths.wavelengths_nm().to_vec(),
        scene.pixels,
        scene.wavelengths.control_index(),
        values,
    )
}
