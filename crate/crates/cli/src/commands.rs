use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use fluencelab::boundary::{reflection_moments, ReflectionMoments};
use fluencelab::config::RunConfig;
use fluencelab::correct::{corrected_spectrum, spectrum_similarity, uncorrected_spectrum, Similarity};
use fluencelab::estimation::{
    debias, estimate, estimate_noise_bias, model_fluence_cube, EstimateOptions, EstimationResult,
};
use fluencelab::fluence::{axial_fluence_peak, fractional_model_error, AxialSetup, ForwardModel, ModelKind};
use fluencelab::geometry::{per_cm_to_per_mm, per_mm_to_per_cm, Point3, ProbeGeometry, FIBER_COUNT};
use fluencelab::io::{format_sig9, ReferenceSpectrum};
use fluencelab::montecarlo::{compare_to_model, simulate, AxialLine, McConfig};
use fluencelab::synth::{synthesize, Scene};
use fluencelab::tensor::{MeasurementTensor, DATA_FILE, META_FILE};
use fluencelab::Error;

use crate::output::{label, sha256_hex, OutDir, Provenance};
use crate::{
    Command, CorrectArgs, EstimateArgs, FluenceCommand, FluenceEvalArgs, Format, McArgs, PlotdataArgs, SynthArgs,
    UsageError, ValidateArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Correct(a) => correct(a),
        Command::Validate(a) => validate(a),
        Command::Fluence { command: FluenceCommand::Eval(a) } => fluence_eval(a),
        Command::Mc(a) => mc(a),
        Command::Plotdata(a) => plotdata(a),
    }
}

struct Loaded {
    cfg: RunConfig,
    base: PathBuf,
    sha256: String,
}

fn load_config(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Config("config is not UTF-8".into()))?;
    let cfg = RunConfig::parse(text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { cfg, base, sha256: sha256_hex(&bytes) })
}

fn out_dir(arg: Option<PathBuf>, cfg: Option<&RunConfig>) -> Result<OutDir> {
    let dir = arg
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .ok_or_else(|| UsageError("no output directory: pass --out or set output.dir".into()))?;
    OutDir::create(&dir)
}

fn read_tensor(dir: &Path, prov: &mut Provenance) -> Result<MeasurementTensor> {
    let meta = fs::read(dir.join(META_FILE)).with_context(|| format!("cannot read {}", dir.join(META_FILE).display()))?;
    let data = fs::read(dir.join(DATA_FILE)).with_context(|| format!("cannot read {}", dir.join(DATA_FILE).display()))?;
    prov.input(META_FILE, &meta);
    prov.input(DATA_FILE, &data);
    MeasurementTensor::decode(&meta, &data).with_context(|| format!("invalid tensor in {}", dir.display()))
}

/// Geometry, boundary and estimation settings, from a config or the defaults.
fn estimation_setup(cfg: Option<&RunConfig>) -> Result<(ProbeGeometry, ReflectionMoments, EstimateOptions)> {
    match cfg {
        Some(c) => Ok((c.probe()?, c.moments()?, c.estimate_options()?)),
        None => {
            let probe = ProbeGeometry::default();
            let moments = reflection_moments(probe.n_rel())?;
            Ok((probe, moments, EstimateOptions::default()))
        }
    }
}

#[derive(Serialize)]
struct TargetTruth {
    x_mm: f64,
    z_mm: f64,
    pixels: Vec<usize>,
    mu_a_per_cm: Vec<f64>,
}

#[derive(Serialize)]
struct Truth {
    model: ModelKind,
    wavelengths_nm: Vec<f64>,
    mu_a_per_cm: Vec<f64>,
    mu_s_reduced_per_cm: Vec<f64>,
    mu_eff_per_cm: Vec<f64>,
    targets: Vec<TargetTruth>,
}

fn to_cm(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| per_mm_to_per_cm(x)).collect()
}

fn synth(a: SynthArgs) -> Result<()> {
    let Loaded { cfg, base, sha256 } = load_config(&a.config)?;
    let mut out = out_dir(a.out, Some(&cfg))?;
    let probe = cfg.probe()?;
    let moments = cfg.moments()?;
    let grid = cfg.wavelength_grid()?;
    let medium = cfg.medium(&grid)?;
    let targets = cfg.target_set(&grid, &base)?;
    let model = a.model.or(cfg.targets.as_ref().map(|t| t.model)).unwrap_or(ModelKind::One);
    let mut noise = cfg.noise;
    if let Some(seed) = a.seed {
        noise.seed = seed;
    }
    let scene = Scene {
        geometry: &probe,
        moments: &moments,
        medium: &medium,
        wavelengths: &grid,
        pixels: cfg.acquisition.pixel_grid,
        targets: &targets,
        model,
    };
    let tensor = synthesize(&scene, &noise)?;
    tensor.write_dir(out.path())?;
    out.adopt(META_FILE);
    out.adopt(DATA_FILE);

    let wls = grid.analysis_wavelengths();
    let footprints = targets.footprints(&scene.pixels)?;
    let truth = Truth {
        model,
        wavelengths_nm: wls.clone(),
        mu_a_per_cm: to_cm(medium.mu_a()),
        mu_s_reduced_per_cm: to_cm(medium.mu_s_reduced()),
        mu_eff_per_cm: to_cm(&medium.mu_eff()),
        targets: targets
            .targets
            .iter()
            .zip(footprints)
            .enumerate()
            .map(|(t, (target, pixels))| TargetTruth {
                x_mm: target.x_mm,
                z_mm: target.z_mm,
                pixels,
                mu_a_per_cm: to_cm(&targets.spectrum(t, wls.len())),
            })
            .collect(),
    };
    for (t, target) in truth.targets.iter().enumerate() {
        let rows = wls.iter().zip(&target.mu_a_per_cm).map(|(&w, &m)| vec![w, m]);
        out.csv(&format!("reference_target{t}.csv"), &["wavelength_nm", "alpha_per_cm"], rows)?;
    }
    out.json("truth.json", &truth)?;

    let mut prov = Provenance::new("synth");
    prov.config_sha256 = Some(sha256);
    prov.seed = Some(noise.seed);
    prov.model = Some(model.number());
    out.finish(prov)
}

fn opt_cm(v: Option<f64>) -> f64 {
    v.map(per_mm_to_per_cm).unwrap_or(f64::NAN)
}

fn estimate_cmd(a: EstimateArgs) -> Result<()> {
    let loaded = a.config.as_deref().map(load_config).transpose()?;
    let cfg = loaded.as_ref().map(|l| &l.cfg);
    let mut out = out_dir(a.out, cfg)?;
    let mut prov = Provenance::new("estimate");
    prov.config_sha256 = loaded.as_ref().map(|l| l.sha256.clone());
    let tensor = read_tensor(&a.tensor, &mut prov)?;
    let (probe, moments, mut opts) = estimation_setup(cfg)?;
    if let Some(m) = a.model {
        opts.model = m;
    }
    prov.model = Some(opts.model.number());
    let result = estimate(&tensor, &probe, &moments, &opts)?;

    out.json("result.json", &result)?;
    let smooth_eff = result.smoothed_mu_eff.clone();
    let smooth_s = result.smoothed_mu_s.clone();
    let rows = result.fits.iter().enumerate().map(|(j, f)| {
        vec![
            f.wavelength_nm,
            per_mm_to_per_cm(f.mu_eff),
            opt_cm(f.mu_s_reduced),
            opt_cm(smooth_eff.as_ref().map(|v| v[j])),
            opt_cm(smooth_s.as_ref().map(|v| v[j])),
            f.residual,
            f.pixels_used as f64,
            f.converged as u8 as f64,
            f.at_bound() as u8 as f64,
        ]
    });
    out.csv(
        "estimates.csv",
        &[
            "wavelength_nm",
            "mu_eff_per_cm",
            "mu_s_reduced_per_cm",
            "mu_eff_smoothed_per_cm",
            "mu_s_reduced_smoothed_per_cm",
            "residual",
            "pixels_used",
            "converged",
            "at_bound",
        ],
        rows,
    )?;

    let points: Vec<Point3> = result.support.iter().map(|&(i, _)| tensor.pixels.point(i)).collect();
    if !points.is_empty() {
        let phi = model_fluence_cube(&result, &probe, &points, true)?;
        let rows = (0..result.fits.len()).map(|j| {
            let total: f64 = (0..points.len()).map(|s| (0..FIBER_COUNT).map(|k| phi.get(j, k, s)).sum::<f64>()).sum();
            vec![result.fits[j].wavelength_nm, total / points.len() as f64]
        });
        out.csv("fluence_support.csv", &["wavelength_nm", "fluence_fiber_sum_mean"], rows)?;
    }
    out.finish(prov)?;

    if result.any_at_bound() {
        let at: Vec<String> = result.fits.iter().filter(|f| f.at_bound()).map(|f| format!("{} nm", f.wavelength_nm)).collect();
        return Err(Error::Numeric(format!("estimate reached a search bound at {}", at.join(", "))).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct SimilarityReport {
    pixels: Vec<usize>,
    uncorrected: Similarity,
    corrected: Similarity,
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        bail!(Error::Numeric("spectrum has zero or non-finite norm".into()));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

fn correct(a: CorrectArgs) -> Result<()> {
    let loaded = a.config.as_deref().map(load_config).transpose()?;
    let cfg = loaded.as_ref().map(|l| &l.cfg);
    let mut out = out_dir(a.out, cfg)?;
    let mut prov = Provenance::new("correct");
    prov.config_sha256 = loaded.as_ref().map(|l| l.sha256.clone());

    let ref_bytes =
        fs::read(&a.reference).with_context(|| format!("cannot read reference {}", a.reference.display()))?;
    prov.input("reference", &ref_bytes);
    let reference = ReferenceSpectrum::parse(&String::from_utf8_lossy(&ref_bytes))?;
    let est_bytes =
        fs::read(&a.estimates).with_context(|| format!("cannot read estimates {}", a.estimates.display()))?;
    prov.input("estimates", &est_bytes);
    let result: EstimationResult = serde_json::from_slice(&est_bytes)
        .with_context(|| format!("invalid estimates file {}", a.estimates.display()))?;
    let tensor = read_tensor(&a.tensor, &mut prov)?;

    let (probe, _, opts) = estimation_setup(cfg)?;
    let bias = match opts.bias {
        Some(b) => b,
        None => estimate_noise_bias(&tensor)?,
    };
    let data = debias(&tensor, &bias)?;
    if data.wavelengths_nm != result.wavelengths_nm() {
        bail!(Error::Config("estimates and tensor list different wavelengths".into()));
    }
    let pixels: Vec<usize> = match a.target {
        Some(t) => {
            let c = cfg.ok_or_else(|| UsageError("--target needs --config with a targets section".into()))?;
            let grid = c.wavelength_grid()?;
            let base = loaded.as_ref().map(|l| l.base.clone()).unwrap_or_default();
            let set = c.target_set(&grid, &base)?;
            let fps = set.footprints(&tensor.pixels)?;
            fps.get(t).cloned().ok_or_else(|| Error::Config(format!("no target #{t}; config has {}", fps.len())))?
        }
        None => result.support.iter().map(|&(i, _)| i).collect(),
    };
    let points: Vec<Point3> = pixels.iter().map(|&i| tensor.pixels.point(i)).collect();
    let phi = model_fluence_cube(&result, &probe, &points, !a.unsmoothed)?;
    let d = uncorrected_spectrum(&data, &pixels)?;
    let c = corrected_spectrum(&data, &phi, &pixels)?;
    let wls = data.wavelengths_nm.clone();
    let r = reference.resample(&wls)?;

    let report = SimilarityReport {
        pixels: pixels.clone(),
        uncorrected: spectrum_similarity(&d.values, &r)?,
        corrected: spectrum_similarity(&c.values, &r)?,
    };
    let (ru, du, cu) = (unit(&r)?, unit(&d.values)?, unit(&c.values)?);
    let rows = (0..wls.len()).map(|j| vec![wls[j], ru[j], du[j], cu[j]]);
    out.csv("spectra.csv", &["wavelength_nm", "a_ref", "d_uncorrected", "c_corrected"], rows)?;
    out.json("similarity.json", &report)?;
    out.finish(prov)
}

/// Model I amplitude-matched to Monte Carlo on the axial line, with Model II
/// matched to Model I over the deep tail and scaled alike.
struct Profile {
    rows: Vec<Vec<f64>>,
    mean_dev_model1: f64,
    mean_dev_model2: f64,
}

fn profile(setup: &AxialSetup, mc: Option<&McConfig>, z_window: (f64, f64)) -> Result<Profile> {
    let Some(mc) = mc else {
        let n = ((z_window.1 - z_window.0) / 0.25).round() as usize;
        let rows = (0..=n)
            .map(|i| {
                let z = z_window.0 + 0.25 * i as f64;
                Ok(vec![z, setup.model1_at(z)?, setup.model2_at(z)?])
            })
            .collect::<fluencelab::Result<Vec<_>>>()?;
        return Ok(Profile { rows, mean_dev_model1: f64::NAN, mean_dev_model2: f64::NAN });
    };
    let run = simulate(mc)?;
    let line = AxialLine::on_axis(z_window.0, z_window.1);
    let t1 = compare_to_model(&run.field, setup.model1(), setup.tip, &line)?;
    let mut rows = Vec::with_capacity(t1.rows.len());
    let mut dev2 = 0.0;
    for row in &t1.rows {
        let m2 = t1.amplitude * setup.model2_at(row.z_mm)?;
        dev2 += ((m2 - row.reference) / row.reference).abs();
        rows.push(vec![row.z_mm, row.reference, row.model, m2]);
    }
    let n = t1.rows.len() as f64;
    Ok(Profile { rows, mean_dev_model1: t1.mean_abs_deviation, mean_dev_model2: dev2 / n })
}

fn validate(a: ValidateArgs) -> Result<()> {
    let Loaded { mut cfg, sha256, .. } = load_config(&a.config)?;
    if let Some(p) = a.photons {
        cfg.mc.photons = p;
    }
    if let Some(s) = a.seed {
        cfg.mc.seed = s;
    }
    let mut out = out_dir(a.out, Some(&cfg))?;
    let v = cfg.validation.clone();
    let run_mc = v.monte_carlo && cfg.mc.photons > 0;
    let probe = cfg.probe()?;
    let moments = cfg.moments()?;
    let tilt = probe.tilt_rad();
    let mu_a = per_cm_to_per_mm(cfg.mc.mu_a_per_cm);
    let y0 = cfg.mc.fiber_y_mm.unwrap_or(cfg.geometry.fiber_y_mm);
    let setup_for = |mu_a: f64, mu_s: f64, y: f64| AxialSetup::new(Point3::new(0.0, y, 0.0), tilt, mu_a, mu_s, moments);

    let mut cases: Vec<(String, f64, f64)> = Vec::new();
    for &s in &v.profile_mu_s_reduced_per_cm {
        cases.push((format!("profile_mus_{}.csv", label(s)), s, y0));
    }
    for &y in &v.profile_fiber_y_mm {
        cases.push((format!("profile_y_{}.csv", label(y)), v.profile_fixed_mu_s_reduced_per_cm, y));
    }
    let header: &[&str] = if run_mc {
        &["z_mm", "monte_carlo", "model1", "model2"]
    } else {
        &["z_mm", "model1", "model2"]
    };
    let mut summary = Vec::new();
    for (name, mu_s_cm, y) in cases {
        let setup = setup_for(mu_a, per_cm_to_per_mm(mu_s_cm), y)?;
        let mc = if run_mc { Some(cfg.mc_config_for(cfg.mc.mu_a_per_cm, mu_s_cm, y)?) } else { None };
        let p = profile(&setup, mc.as_ref(), v.profile_z_mm)?;
        out.csv(&name, header, p.rows)?;
        summary.push(vec![mu_s_cm, y, p.mean_dev_model1 * 100.0, p.mean_dev_model2 * 100.0]);
    }
    out.csv(
        "profile_summary.csv",
        &["mu_s_reduced_per_cm", "fiber_y_mm", "mean_abs_dev_model1_pct", "mean_abs_dev_model2_pct"],
        summary,
    )?;

    let (lo, hi) = v.error_z_over_lt;
    let ratios: Vec<f64> =
        (0..v.error_points).map(|i| lo + (hi - lo) * i as f64 / (v.error_points - 1) as f64).collect();
    let error_table = |setups: &[AxialSetup]| -> fluencelab::Result<Vec<Vec<f64>>> {
        ratios
            .iter()
            .map(|&r| {
                let mut row = vec![r];
                for s in setups {
                    row.push(fractional_model_error(r * s.transport_mfp(), s)?);
                }
                Ok(row)
            })
            .collect()
    };
    let mus_setups = v
        .error_mu_s_reduced_per_cm
        .iter()
        .map(|&s| setup_for(mu_a, per_cm_to_per_mm(s), y0))
        .collect::<fluencelab::Result<Vec<_>>>()?;
    let mut h = vec!["z_over_lt".to_string()];
    h.extend(v.error_mu_s_reduced_per_cm.iter().map(|s| format!("error_pct_mus_{}", label(*s))));
    out.csv("fractional_error_mus.csv", &h, error_table(&mus_setups)?)?;
    let fixed_mus = per_cm_to_per_mm(v.error_fixed_mu_s_reduced_per_cm);
    let mua_setups = v
        .error_mu_a_per_cm
        .iter()
        .map(|&m| setup_for(per_cm_to_per_mm(m), fixed_mus, y0))
        .collect::<fluencelab::Result<Vec<_>>>()?;
    let mut h = vec!["z_over_lt".to_string()];
    h.extend(v.error_mu_a_per_cm.iter().map(|m| format!("error_pct_mua_{}", label(*m))));
    out.csv("fractional_error_mua.csv", &h, error_table(&mua_setups)?)?;

    let (start, stop, step) = v.zmax_fiber_y_mm;
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    let zmax_setups = v
        .zmax_mu_s_reduced_per_cm
        .iter()
        .map(|&s| setup_for(mu_a, per_cm_to_per_mm(s), y0))
        .collect::<fluencelab::Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let y = start + step * i as f64;
        let mut row = vec![y];
        for s in &zmax_setups {
            row.push(axial_fluence_peak(y, s)?);
        }
        rows.push(row);
    }
    let mut h = vec!["fiber_y_mm".to_string()];
    h.extend(v.zmax_mu_s_reduced_per_cm.iter().map(|s| format!("z_max_mm_mus_{}", label(*s))));
    out.csv("zmax.csv", &h, rows)?;

    let mut prov = Provenance::new("validate");
    prov.config_sha256 = Some(sha256);
    if run_mc {
        prov.seed = Some(cfg.mc.seed);
        prov.photons = Some(cfg.mc.photons);
    }
    out.finish(prov)
}

fn fluence_eval(a: FluenceEvalArgs) -> Result<()> {
    let Loaded { cfg, sha256, .. } = load_config(&a.config)?;
    let mut out = out_dir(a.out, Some(&cfg))?;
    let mut prov = Provenance::new("fluence eval");
    prov.config_sha256 = Some(sha256);
    let probe = cfg.probe()?;
    let moments = cfg.moments()?;
    let (wls, models): (Vec<f64>, Vec<ForwardModel>) = match &a.estimates {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("cannot read estimates {}", path.display()))?;
            prov.input("estimates", &bytes);
            let result: EstimationResult =
                serde_json::from_slice(&bytes).with_context(|| format!("invalid estimates file {}", path.display()))?;
            let models = (0..result.fits.len())
                .map(|j| result.model_at(j, &probe, true))
                .collect::<fluencelab::Result<Vec<_>>>()?;
            prov.model = Some(result.model.number());
            (result.wavelengths_nm(), models)
        }
        None => {
            let grid = cfg.wavelength_grid()?;
            let medium = cfg.medium(&grid)?;
            let kind = a.model.unwrap_or(cfg.estimation.model);
            prov.model = Some(kind.number());
            let models = (0..medium.len())
                .map(|j| {
                    let p = medium.at(j);
                    ForwardModel::new(kind, p.mu_eff(), p.mu_s_reduced, probe.tilt_rad(), &moments)
                })
                .collect::<fluencelab::Result<Vec<_>>>()?;
            (grid.analysis_wavelengths(), models)
        }
    };
    let fiber_sum = |m: &ForwardModel, p: Point3| -> fluencelab::Result<f64> {
        let mut buf = [0.0; FIBER_COUNT];
        m.eval_fibers(probe.fiber_tips(), p, &mut buf)?;
        Ok(buf.iter().sum())
    };
    let (z0, z1) = cfg.validation.profile_z_mm;
    let n = ((z1 - z0) / 0.25).round() as usize;
    let mut rows = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let z = z0 + 0.25 * i as f64;
        let mut row = vec![z];
        for m in &models {
            row.push(fiber_sum(m, Point3::new(0.0, 0.0, z))?);
        }
        rows.push(row);
    }
    let mut h = vec!["z_mm".to_string()];
    h.extend(wls.iter().map(|w| format!("fluence_{}nm", label(*w))));
    out.csv("fluence_axial.csv", &h, rows)?;
    let p = Point3::new(a.x, 0.0, a.z);
    let rows = wls
        .iter()
        .zip(&models)
        .map(|(&w, m)| Ok(vec![w, fiber_sum(m, p)?]))
        .collect::<fluencelab::Result<Vec<_>>>()?;
    out.csv("fluence_spectrum.csv", &["wavelength_nm", "fluence_fiber_sum"], rows)?;
    out.finish(prov)
}

fn mc(a: McArgs) -> Result<()> {
    let Loaded { mut cfg, sha256, .. } = load_config(&a.config)?;
    if let Some(p) = a.photons {
        cfg.mc.photons = p;
    }
    if let Some(s) = a.seed {
        cfg.mc.seed = s;
    }
    let mut out = out_dir(a.out, Some(&cfg))?;
    let mc = cfg.mc_config()?;
    let run = simulate(&mc)?;
    match a.format {
        Format::Bin => out.write("field.bin", &run.field.to_bytes())?,
        Format::Csv => {
            let mut buf = Vec::new();
            run.field.write_axial_csv(0.0, 0.0, &mut buf)?;
            out.write("axial.csv", &buf)?;
            let mut buf = Vec::new();
            run.field.write_plane_csv(0.0, &mut buf)?;
            out.write("plane_y0.csv", &buf)?;
        }
    }
    out.json("energy.json", &run.energy)?;
    out.json("mc_config.json", &mc)?;
    let mut prov = Provenance::new("mc");
    prov.config_sha256 = Some(sha256);
    prov.seed = Some(mc.seed);
    prov.photons = Some(mc.photons);
    out.finish(prov)
}

/// Wide table `x, s1, s2, ...` to long rows `x, series, value`.
fn plotdata(a: PlotdataArgs) -> Result<()> {
    let mut reader =
        csv::Reader::from_path(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 {
        bail!(Error::Format(format!("{} needs an abscissa and at least one series", a.input.display())));
    }
    let parse = |s: &str, line: u64| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: {s:?} is not a number")).into())
    };
    let mut w = csv::Writer::from_path(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    w.write_record([&headers[0], "series", "value"])?;
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let x = format_sig9(parse(&rec[0], line)?);
        for (name, cell) in headers.iter().zip(rec.iter()).skip(1) {
            w.write_record([x.as_str(), name, &format_sig9(parse(cell, line)?)])?;
        }
    }
    w.flush()?;
    Ok(())
}
