//! Photon-transport Monte Carlo reference for pencil-beam illumination of a
//! semi-infinite scattering medium.
//!
//! Photon packets are launched at the fiber tip, travel exponentially
//! distributed free paths, deposit the fraction `mu_a / mu_t` of their weight
//! at every interaction and scatter by Henyey–Greenstein. At the surface
//! `z = 0` they are reflected or transmitted with Fresnel probabilities;
//! transmitted packets leave the simulation (into the ambient medium, or into
//! the absorbing transducer block if they exit under its footprint). Low
//! weights are terminated by Russian roulette.
//!
//! Photons are processed in fixed-size batches, each with its own
//! counter-derived ChaCha stream. Deposits are accumulated into a shared grid
//! of fixed-point integer counters, so the merged field does not depend on how
//! batches are scheduled across threads.

mod compare;
mod field;
pub mod sampling;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use compare::{compare_to_model, AxialLine, ComparisonRow, ComparisonTable};
pub use field::{FluenceField, GridSpec};

use crate::boundary::reflectance;
use crate::error::{Error, Result};
use crate::geometry::{OpticalProperties, Point3};
use sampling::{deflect_cs, sample_azimuth, sample_free_path, sample_hg_cos};

pub const DEFAULT_BATCH_SIZE: u64 = 65_536;
pub const DEFAULT_ROULETTE_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_ROULETTE_SURVIVAL: f64 = 0.1;

/// Optical coefficients as the transport kernel sees them. Unlike
/// [`OpticalProperties`], scattering may be switched off entirely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McMedium {
    /// mm⁻¹
    pub mu_a: f64,
    /// mm⁻¹
    pub mu_s: f64,
    pub g: f64,
    pub n: f64,
}

impl From<OpticalProperties> for McMedium {
    fn from(p: OpticalProperties) -> Self {
        McMedium { mu_a: p.mu_a, mu_s: p.mu_s(), g: p.g, n: p.n }
    }
}

/// Launch point and direction of the pencil beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub tip: Point3,
    /// Beam angle from the surface normal in the incident medium, degrees.
    pub tilt_deg: f64,
    /// Index of the medium the beam arrives from; `None` launches the tilted
    /// direction unrefracted.
    pub n_incident: Option<f64>,
}

/// Optical surroundings of the tissue surface `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    /// Index of the transducer block above `|x| <= half_x, |y| <= half_y`.
    pub n_footprint: f64,
    /// Index of the ambient medium elsewhere.
    pub n_ambient: f64,
    pub footprint_half_x: f64,
    pub footprint_half_y: f64,
    /// Photons transmitted into the footprint are absorbed by the transducer.
    pub absorbing_footprint: bool,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        SurfaceSpec {
            n_footprint: crate::geometry::DEFAULT_N_COUPLING,
            n_ambient: 1.0,
            footprint_half_x: 15.0,
            footprint_half_y: 10.0,
            absorbing_footprint: true,
        }
    }
}

impl SurfaceSpec {
    /// Outer index everywhere equal to `n`, so the surface neither reflects
    /// nor refracts for a medium of the same index.
    pub fn uniform(n: f64) -> Self {
        SurfaceSpec { n_footprint: n, n_ambient: n, ..SurfaceSpec::default() }
    }

    fn outer_index(&self, x: f64, y: f64) -> (f64, bool) {
        if x.abs() <= self.footprint_half_x && y.abs() <= self.footprint_half_y {
            (self.n_footprint, self.absorbing_footprint)
        } else {
            (self.n_ambient, false)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub photons: u64,
    pub medium: McMedium,
    pub source: SourceSpec,
    pub surface: SurfaceSpec,
    pub grid: GridSpec,
    pub seed: u64,
    pub roulette_threshold: f64,
    pub roulette_survival: f64,
    pub batch_size: u64,
}

impl McConfig {
    /// Configuration with the default roulette and batching settings.
    pub fn new(photons: u64, medium: McMedium, source: SourceSpec, grid: GridSpec, seed: u64) -> Self {
        McConfig {
            photons,
            medium,
            source,
            surface: SurfaceSpec::default(),
            grid,
            seed,
            roulette_threshold: DEFAULT_ROULETTE_THRESHOLD,
            roulette_survival: DEFAULT_ROULETTE_SURVIVAL,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.medium;
        if self.photons == 0 {
            return Err(Error::Config("at least one photon is required".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(m.mu_a > 0.0 && m.mu_a.is_finite()) {
            return Err(Error::Config(format!(
                "mu_a = {} leaves the absorbed-energy fluence estimator undefined; it needs mu_a > 0",
                m.mu_a
            )));
        }
        if !(m.mu_s >= 0.0 && m.mu_s.is_finite()) {
            return Err(Error::Config(format!("mu_s must be >= 0, got {}", m.mu_s)));
        }
        if !(m.g > -1.0 && m.g < 1.0) {
            return Err(Error::Config(format!("anisotropy must be in (-1, 1), got {}", m.g)));
        }
        if !(m.n > 0.0 && self.surface.n_ambient > 0.0 && self.surface.n_footprint > 0.0) {
            return Err(Error::Config("refractive indices must be positive".into()));
        }
        if !(self.roulette_survival > 0.0 && self.roulette_survival < 1.0) {
            return Err(Error::Config(format!(
                "roulette survival must be in (0, 1), got {}",
                self.roulette_survival
            )));
        }
        if !(self.roulette_threshold > 0.0 && self.roulette_threshold < 1.0) {
            return Err(Error::Config(format!(
                "roulette threshold must be in (0, 1), got {}",
                self.roulette_threshold
            )));
        }
        if !(0.0..90.0).contains(&self.source.tilt_deg) || self.source.tip.z != 0.0 {
            return Err(Error::Config("source must sit on z = 0 with tilt in [0, 90) degrees".into()));
        }
        self.grid.validate()?;
        self.launch_direction().map(|_| ())
    }

    /// Unit launch direction inside the medium, tilted toward the image plane.
    pub fn launch_direction(&self) -> Result<[f64; 3]> {
        let side = if self.source.tip.y > 0.0 {
            1.0
        } else if self.source.tip.y < 0.0 {
            -1.0
        } else {
            0.0
        };
        let theta = self.source.tilt_deg.to_radians();
        let sin_t = match self.source.n_incident {
            Some(n_in) => n_in / self.medium.n * theta.sin(),
            None => theta.sin(),
        };
        if sin_t >= 1.0 {
            return Err(Error::Config("launch beam is totally internally reflected at entry".into()));
        }
        let cos_t = (1.0 - sin_t * sin_t).sqrt();
        Ok([0.0, -side * sin_t, cos_t])
    }
}

/// Weight bookkeeping over the whole run, in units of launched photons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTally {
    pub launched: f64,
    pub absorbed: f64,
    pub absorbed_in_grid: f64,
    /// Transmitted into the ambient medium.
    pub escaped: f64,
    /// Transmitted into the absorbing transducer footprint.
    pub transducer: f64,
    pub roulette_killed: f64,
    pub roulette_gained: f64,
    pub internal_reflections: u64,
    pub interactions: u64,
}

impl EnergyTally {
    fn merge(&mut self, o: &EnergyTally) {
        self.launched += o.launched;
        self.absorbed += o.absorbed;
        self.absorbed_in_grid += o.absorbed_in_grid;
        self.escaped += o.escaped;
        self.transducer += o.transducer;
        self.roulette_killed += o.roulette_killed;
        self.roulette_gained += o.roulette_gained;
        self.internal_reflections += o.internal_reflections;
        self.interactions += o.interactions;
    }

    /// Launched weight not accounted for by absorption, exit or roulette.
    pub fn imbalance(&self) -> f64 {
        self.launched
            - (self.absorbed + self.escaped + self.transducer + self.roulette_killed - self.roulette_gained)
    }
}

#[derive(Debug, Clone)]
pub struct McOutput {
    pub field: FluenceField,
    pub energy: EnergyTally,
}

/// Fixed-point scale for deposits, leaving headroom above the launched total.
fn fixed_point_scale(photons: u64) -> f64 {
    let bits = 64 - (photons + 1).leading_zeros() as i32;
    let frac_bits = (60 - bits).clamp(8, 52);
    (frac_bits as f64).exp2()
}

/// Runs the simulation. Results are bit-identical for a given configuration
/// regardless of the number of worker threads.
pub fn simulate(cfg: &McConfig) -> Result<McOutput> {
    cfg.validate()?;
    let dir0 = cfg.launch_direction()?;
    let scale = fixed_point_scale(cfg.photons);
    let acc: Vec<AtomicU64> = (0..cfg.grid.len()).map(|_| AtomicU64::new(0)).collect();
    let batches = cfg.photons.div_ceil(cfg.batch_size);

    let tallies: Vec<EnergyTally> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let n = cfg.batch_size.min(cfg.photons - b * cfg.batch_size);
            run_batch(cfg, dir0, b, n, &acc, scale)
        })
        .collect();

    let mut energy = EnergyTally::default();
    for t in &tallies {
        energy.merge(t);
    }
    let norm = 1.0 / (scale * cfg.medium.mu_a * cfg.grid.voxel_volume() * cfg.photons as f64);
    let values = acc.into_iter().map(|a| a.into_inner() as f64 * norm).collect();
    Ok(McOutput { field: FluenceField { grid: cfg.grid, photons: cfg.photons, seed: cfg.seed, values }, energy })
}

fn run_batch(cfg: &McConfig, dir0: [f64; 3], batch: u64, n: u64, acc: &[AtomicU64], scale: f64) -> EnergyTally {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(batch);
    let m = cfg.medium;
    let mu_t = m.mu_a + m.mu_s;
    let albedo_loss = m.mu_a / mu_t;
    let mut t = EnergyTally::default();

    for _ in 0..n {
        t.launched += 1.0;
        let mut pos = cfg.source.tip;
        let mut dir = dir0;
        let mut w = 1.0f64;
        loop {
            let step = sample_free_path(&mut rng, mu_t);
            if dir[2] < 0.0 {
                let to_surface = -pos.z / dir[2];
                if step >= to_surface {
                    pos = Point3::new(pos.x + to_surface * dir[0], pos.y + to_surface * dir[1], 0.0);
                    let (n_out, absorbing) = cfg.surface.outer_index(pos.x, pos.y);
                    let theta = (-dir[2]).clamp(0.0, 1.0).acos();
                    let r = reflectance(theta, m.n / n_out);
                    if r > 0.0 && rng.random::<f64>() < r {
                        dir[2] = -dir[2];
                        t.internal_reflections += 1;
                        continue;
                    }
                    if absorbing {
                        t.transducer += w;
                    } else {
                        t.escaped += w;
                    }
                    break;
                }
            }
            pos = Point3::new(pos.x + step * dir[0], pos.y + step * dir[1], (pos.z + step * dir[2]).max(0.0));
            t.interactions += 1;

            let dw = w * albedo_loss;
            w -= dw;
            t.absorbed += dw;
            if let Some(v) = cfg.grid.voxel_of(pos) {
                acc[v].fetch_add((dw * scale + 0.5) as u64, Ordering::Relaxed);
                t.absorbed_in_grid += dw;
            }
            if w <= 0.0 {
                break;
            }
            if m.mu_s > 0.0 {
                let cos_t = sample_hg_cos(&mut rng, m.g);
                let (cos_p, sin_p) = sample_azimuth(&mut rng);
                dir = deflect_cs(dir, cos_t, cos_p, sin_p);
            }
            if w < cfg.roulette_threshold {
                if rng.random::<f64>() < cfg.roulette_survival {
                    let boosted = w / cfg.roulette_survival;
                    t.roulette_gained += boosted - w;
                    w = boosted;
                } else {
                    t.roulette_killed += w;
                    break;
                }
            }
        }
    }
    t
}
