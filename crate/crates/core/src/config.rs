//! JSON run configuration shared by the command-line tools.
//!
//! Optical coefficients are given in cm⁻¹ and converted to mm⁻¹ when the
//! domain objects are built. Lengths are mm, wavelengths nm, angles degrees.
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::boundary::{reflection_moments, ReflectionMoments};
use crate::error::{Error, Result};
use crate::estimation::{EstimateOptions, SearchConfig, TauPolicy, WeightMode};
use crate::fluence::ModelKind;
use crate::geometry::{
    per_cm_to_per_mm, brain_scattering, OpticalMedium, Point3, ProbeGeometry, WavelengthGrid, DEFAULT_ANISOTROPY,
    DEFAULT_FIBER_HALF_SPAN_MM, DEFAULT_FIBER_Y_MM, DEFAULT_N_COUPLING, DEFAULT_N_MEDIUM, DEFAULT_TILT_DEG,
};
use crate::io::ReferenceSpectrum;
use crate::montecarlo::{GridSpec, McConfig, McMedium, SourceSpec, SurfaceSpec};
use crate::synth::{ChromophoreSpectrum, Footprint, NoiseSpec, Target, TargetSet};
use crate::tensor::PixelGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub medium: MediumConfig,
    #[serde(default)]
    pub targets: Option<TargetsConfig>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub estimation: EstimationConfig,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Explicit `(x, y)` fiber tip positions on the surface; overrides the
    /// uniform layout when present.
    pub fiber_tips_mm: Option<Vec<[f64; 2]>>,
    pub fiber_y_mm: f64,
    pub fiber_half_span_mm: f64,
    pub tilt_deg: f64,
    pub n_medium: f64,
    pub n_coupling: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            fiber_tips_mm: None,
            fiber_y_mm: DEFAULT_FIBER_Y_MM,
            fiber_half_span_mm: DEFAULT_FIBER_HALF_SPAN_MM,
            tilt_deg: DEFAULT_TILT_DEG,
            n_medium: DEFAULT_N_MEDIUM,
            n_coupling: DEFAULT_N_COUPLING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    #[serde(default = "default_wavelengths")]
    pub wavelengths_nm: Vec<f64>,
    /// Index of the zero-power frame, or `null` when there is none. Required.
    #[serde(deserialize_with = "Option::deserialize")]
    pub control_index: Option<usize>,
    #[serde(default = "default_pixel_grid")]
    pub pixel_grid: PixelGrid,
}

fn default_wavelengths() -> Vec<f64> {
    WavelengthGrid::default().wavelengths_nm().to_vec()
}

/// 20 mm wide, 2–30 mm deep, 0.5 mm pixels.
pub fn default_pixel_grid() -> PixelGrid {
    PixelGrid { x0_mm: -10.0, dx_mm: 0.5, nx: 41, z0_mm: 2.0, dz_mm: 0.5, nz: 57 }
}

/// A single value for every wavelength, or one value per analysis wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerWavelength {
    Constant(f64),
    Values(Vec<f64>),
}

impl PerWavelength {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            PerWavelength::Constant(v) => Ok(vec![*v; n]),
            PerWavelength::Values(v) if v.len() == n => Ok(v.clone()),
            PerWavelength::Values(v) => Err(Error::Config(format!(
                "{what} lists {} values but there are {n} analysis wavelengths",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatteringLaw {
    /// Brain tissue power law, 40.8 (λ/500 nm)^-3.089 cm⁻¹.
    Brain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scattering {
    Law { law: ScatteringLaw },
    Given(PerWavelength),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    pub mu_a_per_cm: PerWavelength,
    pub mu_s_reduced_per_cm: Scattering,
    pub g: f64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        MediumConfig {
            mu_a_per_cm: PerWavelength::Constant(0.03),
            mu_s_reduced_per_cm: Scattering::Law { law: ScatteringLaw::Brain },
            g: DEFAULT_ANISOTROPY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChromophoreConfig {
    pub name: String,
    /// Absorption per unit concentration at each analysis wavelength, cm⁻¹.
    #[serde(default)]
    pub alpha_per_cm: Option<Vec<f64>>,
    /// CSV of `(wavelength_nm, alpha)` in cm⁻¹, interpolated to the analysis
    /// wavelengths. Relative paths resolve against the config file.
    #[serde(default)]
    pub reference_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsConfig {
    pub chromophores: Vec<ChromophoreConfig>,
    pub targets: Vec<Target>,
    #[serde(default)]
    pub footprint: Footprint,
    /// Fluence model used to render the targets.
    #[serde(default = "model_one", deserialize_with = "model_number")]
    pub model: ModelKind,
}

fn model_one() -> ModelKind {
    ModelKind::One
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    #[serde(deserialize_with = "model_number")]
    pub model: ModelKind,
    pub mu_eff_bounds_per_cm: (f64, f64),
    pub mu_s_reduced_bounds_per_cm: (f64, f64),
    pub grid_points: usize,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub tau: TauPolicy,
    pub weight_mode: WeightMode,
    pub smoothing: bool,
    /// Per-fiber noise bias; estimated from the control frame when absent.
    pub bias: Option<Vec<f64>>,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        let s = SearchConfig::default();
        EstimationConfig {
            model: ModelKind::One,
            mu_eff_bounds_per_cm: (s.mu_eff_bounds.0 * 10.0, s.mu_eff_bounds.1 * 10.0),
            mu_s_reduced_bounds_per_cm: (s.mu_s_bounds.0 * 10.0, s.mu_s_bounds.1 * 10.0),
            grid_points: s.grid_points,
            rel_tol: s.rel_tol,
            max_iter: s.max_iter,
            tau: TauPolicy::default(),
            weight_mode: WeightMode::default(),
            smoothing: true,
            bias: None,
        }
    }
}

/// Accepts `1`, `2`, `"1"` or `"2"`.
fn model_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ModelKind, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        N(u8),
        S(String),
    }
    let n = match Raw::deserialize(d)? {
        Raw::N(n) => n,
        Raw::S(s) => s.trim().parse().map_err(|_| serde::de::Error::custom(format!("model must be 1 or 2, got {s:?}")))?,
    };
    ModelKind::from_number(n).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McGridConfig {
    pub extent_x_mm: f64,
    pub extent_y_mm: f64,
    pub depth_mm: f64,
    pub spacing_mm: f64,
}

impl Default for McGridConfig {
    fn default() -> Self {
        McGridConfig { extent_x_mm: 40.0, extent_y_mm: 40.0, depth_mm: 40.0, spacing_mm: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub photons: u64,
    pub seed: u64,
    pub mu_a_per_cm: f64,
    pub mu_s_reduced_per_cm: f64,
    /// Elevation of the simulated fiber; the geometry's fiber offset if absent.
    pub fiber_y_mm: Option<f64>,
    pub grid: McGridConfig,
    pub surface: SurfaceSpec,
    /// Refract the tilted beam from the coupling index into the medium.
    pub refract_launch: bool,
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            photons: 2_000_000,
            seed: 1,
            mu_a_per_cm: 0.03,
            mu_s_reduced_per_cm: 10.0,
            fiber_y_mm: None,
            grid: McGridConfig::default(),
            surface: SurfaceSpec::default(),
            refract_launch: true,
        }
    }
}

/// Sweeps for the model validation tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    /// Scattering values for the fixed-elevation profiles.
    pub profile_mu_s_reduced_per_cm: Vec<f64>,
    /// Fiber elevations for the fixed-scattering profiles.
    pub profile_fiber_y_mm: Vec<f64>,
    /// Scattering used for the elevation sweep.
    pub profile_fixed_mu_s_reduced_per_cm: f64,
    /// Depth window of the profiles, mm.
    pub profile_z_mm: (f64, f64),
    pub error_mu_s_reduced_per_cm: Vec<f64>,
    pub error_mu_a_per_cm: Vec<f64>,
    /// Scattering used for the absorption sweep.
    pub error_fixed_mu_s_reduced_per_cm: f64,
    pub error_z_over_lt: (f64, f64),
    pub error_points: usize,
    pub zmax_mu_s_reduced_per_cm: Vec<f64>,
    /// Fiber elevations `(start, stop, step)` for the peak-depth table.
    pub zmax_fiber_y_mm: (f64, f64, f64),
    /// Run Monte Carlo for the profiles; otherwise only the models are tabulated.
    pub monte_carlo: bool,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            profile_mu_s_reduced_per_cm: vec![2.0, 5.0, 10.0],
            profile_fiber_y_mm: vec![2.85, 5.70, 11.40],
            profile_fixed_mu_s_reduced_per_cm: 10.0,
            profile_z_mm: (0.5, 30.0),
            error_mu_s_reduced_per_cm: vec![5.0, 10.0, 20.0, 30.0],
            error_mu_a_per_cm: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            error_fixed_mu_s_reduced_per_cm: 10.0,
            error_z_over_lt: (1.0, 40.0),
            error_points: 79,
            zmax_mu_s_reduced_per_cm: vec![5.0, 10.0, 15.0, 20.0],
            zmax_fiber_y_mm: (1.0, 12.0, 0.5),
            monte_carlo: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Bin,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative paths inside it are
    /// resolved against its directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot read config {}: {e}", path.display()))))?;
        let cfg = RunConfig::parse(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    /// Checks everything that does not need external files.
    pub fn validate(&self) -> Result<()> {
        self.probe()?;
        let grid = self.wavelength_grid()?;
        self.acquisition.pixel_grid.validate()?;
        self.medium(&grid)?;
        self.search()?;
        self.mc_grid()?;
        if let Some(t) = &self.targets {
            for c in &t.chromophores {
                match (&c.alpha_per_cm, &c.reference_csv) {
                    (Some(_), None) | (None, Some(_)) => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "chromophore {:?} needs exactly one of alpha_per_cm and reference_csv",
                            c.name
                        )))
                    }
                }
            }
        }
        let v = &self.validation;
        if v.error_points < 2 || !(v.zmax_fiber_y_mm.2 > 0.0) || v.zmax_fiber_y_mm.1 < v.zmax_fiber_y_mm.0 {
            return Err(Error::Config("validation sweeps need >= 2 points and a positive step".into()));
        }
        Ok(())
    }

    pub fn probe(&self) -> Result<ProbeGeometry> {
        let g = &self.geometry;
        match &g.fiber_tips_mm {
            Some(tips) => ProbeGeometry::new(
                tips.iter().map(|&[x, y]| Point3::new(x, y, 0.0)).collect(),
                g.tilt_deg,
                g.n_medium,
                g.n_coupling,
            ),
            None => ProbeGeometry::uniform(g.fiber_half_span_mm, g.fiber_y_mm, g.tilt_deg, g.n_medium, g.n_coupling),
        }
    }

    pub fn moments(&self) -> Result<ReflectionMoments> {
        reflection_moments(self.probe()?.n_rel())
    }

    pub fn wavelength_grid(&self) -> Result<WavelengthGrid> {
        WavelengthGrid::new(self.acquisition.wavelengths_nm.clone(), self.acquisition.control_index)
    }

    /// Medium at the analysis wavelengths, mm⁻¹.
    pub fn medium(&self, grid: &WavelengthGrid) -> Result<OpticalMedium> {
        let wls = grid.analysis_wavelengths();
        let mu_a = self.medium.mu_a_per_cm.expand(wls.len(), "medium.mu_a_per_cm")?;
        let mu_s = match &self.medium.mu_s_reduced_per_cm {
            Scattering::Law { law: ScatteringLaw::Brain } => {
                wls.iter().map(|&l| brain_scattering(l)).collect::<Result<Vec<_>>>()?
            }
            Scattering::Given(v) => v
                .expand(wls.len(), "medium.mu_s_reduced_per_cm")?
                .into_iter()
                .map(per_cm_to_per_mm)
                .collect(),
        };
        let mu_a = mu_a.into_iter().map(per_cm_to_per_mm).collect();
        OpticalMedium::new(mu_a, mu_s, self.medium.g, self.geometry.n_medium)
    }

    /// Targets with absorption spectra in mm⁻¹, reading reference CSVs
    /// relative to `base`.
    pub fn target_set(&self, grid: &WavelengthGrid, base: &Path) -> Result<TargetSet> {
        let t = self.targets.as_ref().ok_or_else(|| Error::Config("config has no targets section".into()))?;
        let wls = grid.analysis_wavelengths();
        let mut chromophores = Vec::with_capacity(t.chromophores.len());
        for c in &t.chromophores {
            let alpha = match (&c.alpha_per_cm, &c.reference_csv) {
                (Some(a), None) => a.clone(),
                (None, Some(p)) => {
                    let path = base.join(p);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| {
                        Error::Io(std::io::Error::new(e.kind(), format!("cannot read reference {}: {e}", path.display())))
                    })?;
                    ReferenceSpectrum::parse(&text)?.resample(&wls)?
                }
                _ => {
                    return Err(Error::Config(format!(
                        "chromophore {:?} needs exactly one of alpha_per_cm and reference_csv",
                        c.name
                    )))
                }
            };
            chromophores.push(ChromophoreSpectrum {
                name: c.name.clone(),
                alpha: alpha.into_iter().map(per_cm_to_per_mm).collect(),
            });
        }
        let set = TargetSet { chromophores, targets: t.targets.clone(), footprint: t.footprint };
        set.validate(wls.len())?;
        Ok(set)
    }

    pub fn search(&self) -> Result<SearchConfig> {
        let e = &self.estimation;
        let s = SearchConfig {
            mu_eff_bounds: (per_cm_to_per_mm(e.mu_eff_bounds_per_cm.0), per_cm_to_per_mm(e.mu_eff_bounds_per_cm.1)),
            mu_s_bounds: (
                per_cm_to_per_mm(e.mu_s_reduced_bounds_per_cm.0),
                per_cm_to_per_mm(e.mu_s_reduced_bounds_per_cm.1),
            ),
            grid_points: e.grid_points,
            rel_tol: e.rel_tol,
            max_iter: e.max_iter,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn estimate_options(&self) -> Result<EstimateOptions> {
        let e = &self.estimation;
        Ok(EstimateOptions {
            model: e.model,
            bias: e.bias.clone(),
            tau: e.tau,
            weight_mode: e.weight_mode,
            search: self.search()?,
            smooth: e.smoothing,
        })
    }

    fn mc_grid(&self) -> Result<GridSpec> {
        let g = &self.mc.grid;
        GridSpec::centered(g.extent_x_mm, g.extent_y_mm, g.depth_mm, g.spacing_mm)
    }

    /// Monte Carlo run for a fiber at `(0, y', 0)` in a medium with the given
    /// coefficients (cm⁻¹).
    pub fn mc_config_for(&self, mu_a_per_cm: f64, mu_s_reduced_per_cm: f64, fiber_y_mm: f64) -> Result<McConfig> {
        let g = self.medium.g;
        if !(0.0..1.0).contains(&g) {
            return Err(Error::Config(format!("anisotropy must be in [0, 1), got {g}")));
        }
        let medium = McMedium {
            mu_a: per_cm_to_per_mm(mu_a_per_cm),
            mu_s: per_cm_to_per_mm(mu_s_reduced_per_cm) / (1.0 - g),
            g,
            n: self.geometry.n_medium,
        };
        let source = SourceSpec {
            tip: Point3::new(0.0, fiber_y_mm, 0.0),
            tilt_deg: self.geometry.tilt_deg,
            n_incident: self.mc.refract_launch.then_some(self.geometry.n_coupling),
        };
        let mut cfg = McConfig::new(self.mc.photons, medium, source, self.mc_grid()?, self.mc.seed);
        cfg.surface = self.mc.surface;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The `mc` section as a single run.
    pub fn mc_config(&self) -> Result<McConfig> {
        let y = self.mc.fiber_y_mm.unwrap_or(self.geometry.fiber_y_mm);
        self.mc_config_for(self.mc.mu_a_per_cm, self.mc.mu_s_reduced_per_cm, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{ "acquisition": { "control_index": 0 } }"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let grid = cfg.wavelength_grid().unwrap();
        assert_eq!(grid.len(), 10);
        let m = cfg.medium(&grid).unwrap();
        assert_eq!(m.len(), 9);
        assert!((m.mu_a()[0] - 0.003).abs() < 1e-15);
        assert!((m.mu_s_reduced()[0] - brain_scattering(715.0).unwrap()).abs() < 1e-15);
        assert_eq!(cfg.estimation.model, ModelKind::One);
        let s = cfg.search().unwrap();
        assert_eq!(s.mu_eff_bounds, SearchConfig::default().mu_eff_bounds);
    }

    #[test]
    fn control_index_is_required_but_nullable() {
        let err = RunConfig::parse(r#"{ "acquisition": {} }"#).unwrap_err();
        assert!(err.to_string().contains("control_index"), "{err}");
        let cfg = RunConfig::parse(r#"{ "acquisition": { "control_index": null } }"#).unwrap();
        assert_eq!(cfg.acquisition.control_index, None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{ "acquisition": { "control_index": 0 }, "extra": 1 }"#,
            r#"{ "acquisition": { "control_index": 0, "wavelength": [700] } }"#,
            r#"{ "acquisition": { "control_index": 0 }, "geometry": { "tilt": 30 } }"#,
            r#"{ "acquisition": { "control_index": 0 }, "noise": { "seed": 1, "snr": 40 } }"#,
        ] {
            assert!(RunConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn model_accepts_number_or_string() {
        for (m, want) in [("2", ModelKind::Two), ("\"2\"", ModelKind::Two), ("1", ModelKind::One)] {
            let text = format!(r#"{{ "acquisition": {{ "control_index": 0 }}, "estimation": {{ "model": {m} }} }}"#);
            assert_eq!(RunConfig::parse(&text).unwrap().estimation.model, want);
        }
        let bad = r#"{ "acquisition": { "control_index": 0 }, "estimation": { "model": 3 } }"#;
        assert!(RunConfig::parse(bad).is_err());
    }

    #[test]
    fn per_wavelength_arrays_are_length_checked() {
        let ok = r#"{ "acquisition": { "wavelengths_nm": [700, 750, 800], "control_index": 0 },
                      "medium": { "mu_a_per_cm": [0.1, 0.2], "mu_s_reduced_per_cm": 10 } }"#;
        let cfg = RunConfig::parse(ok).unwrap();
        let m = cfg.medium(&cfg.wavelength_grid().unwrap()).unwrap();
        assert_eq!(m.mu_s_reduced(), &[1.0, 1.0]);
        assert_eq!(m.mu_a(), &[0.01, 0.02]);
        let bad = ok.replace("[0.1, 0.2]", "[0.1, 0.2, 0.3]");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn targets_from_csv_resolve_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("ref.csv"), "wavelength_nm,alpha\n700,1\n900,3\n").unwrap();
        let text = r#"{ "acquisition": { "wavelengths_nm": [700, 800], "control_index": 0 },
            "targets": { "chromophores": [ { "name": "dye", "reference_csv": "ref.csv" } ],
                         "targets": [ { "x_mm": 0, "z_mm": 10, "concentrations": [2] } ] } }"#;
        let path = dir.path().join("run.json");
        std::fs::write(&path, text).unwrap();
        let (cfg, base) = RunConfig::load(&path).unwrap();
        let set = cfg.target_set(&cfg.wavelength_grid().unwrap(), &base).unwrap();
        assert!((set.chromophores[0].alpha[0] - 0.2).abs() < 1e-15);
        assert!((set.mu_a(0, 0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn chromophore_needs_one_source() {
        let text = r#"{ "acquisition": { "control_index": 0 },
            "targets": { "chromophores": [ { "name": "x" } ], "targets": [] } }"#;
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn mc_section_converts_units() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let mc = cfg.mc_config().unwrap();
        assert!((mc.medium.mu_a - 0.003).abs() < 1e-15);
        assert!((mc.medium.mu_s - 10.0).abs() < 1e-12);
        assert_eq!(mc.source.tip.y, DEFAULT_FIBER_Y_MM);
        assert_eq!(mc.source.n_incident, Some(DEFAULT_N_COUPLING));
    }

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }
}
