//! Acceptance criteria, run as a plain binary so that every criterion prints
//! its PASS/FAIL line regardless of output capture.
//!
//! `cargo test -p fluencelab-core --test acceptance -- 3 5` runs a subset.

use std::time::Instant;

use fluencelab::boundary::{reflection_moments, ReflectionMoments};
use fluencelab::correct::{corrected_spectrum, spectrum_similarity, uncorrected_spectrum};
use fluencelab::estimation::{
    debias, estimate, estimate_noise_bias, fit_parameters, fluence_correlation, model_fluence_cube, normalize,
    select_support, EstimateOptions, SearchConfig, TauPolicy, WeightMode,
};
use fluencelab::fluence::{axial_fluence_peak, fractional_model_error, AxialSetup, ForwardModel, ModelKind};
use fluencelab::geometry::{
    brain_scattering, mu_eff, per_cm_to_per_mm, per_mm_to_per_cm, OpticalMedium, Point3, ProbeGeometry,
    WavelengthGrid, DEFAULT_FIBER_Y_MM, FIBER_COUNT,
};
use fluencelab::montecarlo::sampling::sample_hg_cos;
use fluencelab::montecarlo::{compare_to_model, simulate, AxialLine, GridSpec, McConfig, McMedium, SourceSpec};
use fluencelab::synth::{synthesize, trial_seed, ChromophoreSpectrum, Footprint, NoiseSpec, Scene, Target, TargetSet};
use fluencelab::tensor::{Cube, MeasurementTensor, PixelGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

/// Tabulated brain-medium parameters at 715..875 nm: (mu_s', mu_eff), cm⁻¹.
const BRAIN_TABLE: [(f64, f64); 9] = [
    (13.53, 1.10),
    (12.42, 1.05),
    (11.43, 1.01),
    (10.55, 0.97),
    (9.75, 0.93),
    (9.03, 0.90),
    (8.38, 0.86),
    (7.79, 0.83),
    (7.25, 0.80),
];
const MU_A_CM: f64 = 0.03;
const TRIALS: u64 = 100;
const FIBER_Y: f64 = DEFAULT_FIBER_Y_MM;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn geometry() -> ProbeGeometry {
    ProbeGeometry::default()
}

fn moments() -> ReflectionMoments {
    reflection_moments(geometry().n_rel()).unwrap()
}

fn axial_setup(mu_a_cm: f64, mu_s_cm: f64) -> AxialSetup {
    let g = geometry();
    AxialSetup::new(
        Point3::new(0.0, FIBER_Y, 0.0),
        g.tilt_rad(),
        per_cm_to_per_mm(mu_a_cm),
        per_cm_to_per_mm(mu_s_cm),
        moments(),
    )
    .unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

fn criterion_1() -> Outcome {
    let wls = WavelengthGrid::default().analysis_wavelengths();
    let (mut worst_s, mut worst_e) = ((0.0, 0.0), (0.0, 0.0));
    for (&wl, &(s_tab, e_tab)) in wls.iter().zip(&BRAIN_TABLE) {
        let s = per_mm_to_per_cm(brain_scattering(wl).unwrap());
        let e = per_mm_to_per_cm(mu_eff(per_cm_to_per_mm(MU_A_CM), per_cm_to_per_mm(s)).unwrap());
        if (s - s_tab).abs() > worst_s.1 {
            worst_s = (wl, (s - s_tab).abs());
        }
        if (e - e_tab).abs() > worst_e.1 {
            worst_e = (wl, (e - e_tab).abs());
        }
    }
    check(
        worst_s.1 <= 0.01 && worst_e.1 <= 0.01,
        format!(
            "max |d mu_s'| = {:.4} cm^-1 at {} nm, max |d mu_eff| = {:.4} cm^-1 at {} nm (tolerance 0.01)",
            worst_s.1, worst_s.0, worst_e.1, worst_e.0
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = (0.0, 0.0, 0.0);
    for mu_s in [5.0, 10.0, 20.0, 30.0] {
        let s = axial_setup(MU_A_CM, mu_s);
        for r in linspace(12.0, 40.0, 281) {
            let e = fractional_model_error(r * s.transport_mfp(), &s).unwrap().abs();
            if e > worst.2 {
                worst = (mu_s, r, e);
            }
        }
    }
    check(
        worst.2 < 10.0,
        format!("max |error| = {:.2}% (mu_s' = {} cm^-1, z/l_t = {:.1}); limit 10%", worst.2, worst.0, worst.1),
    )
}

fn criterion_3() -> Outcome {
    let setups: Vec<AxialSetup> = [0.01, 0.02, 0.03, 0.04, 0.05].iter().map(|&a| axial_setup(a, 10.0)).collect();
    let mut worst = (0.0, 0.0);
    for r in linspace(10.0, 40.0, 301) {
        let errs: Vec<f64> =
            setups.iter().map(|s| fractional_model_error(r * s.transport_mfp(), s).unwrap()).collect();
        let spread = errs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - errs.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread > worst.1 {
            worst = (r, spread);
        }
    }
    check(worst.1 < 2.0, format!("max spread = {:.3} pp at z/l_t = {:.1}; limit 2 pp", worst.1, worst.0))
}

fn criterion_4() -> Outcome {
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut monotone = true;
    for mu_s in linspace(5.0, 20.0, 16) {
        let s = axial_setup(MU_A_CM, mu_s);
        let z = axial_fluence_peak(5.7, &s).unwrap();
        range = (range.0.min(z), range.1.max(z));
        let zs: Vec<f64> = [2.85, 5.70, 11.40].iter().map(|&y| axial_fluence_peak(y, &s).unwrap()).collect();
        monotone &= zs.windows(2).all(|w| w[1] >= w[0]);
    }
    check(
        range.0 >= 2.0 && range.1 <= 4.0 && monotone,
        format!(
            "z_max at y' = 5.7 mm spans [{:.2}, {:.2}] mm (want within 3 +/- 1); nondecreasing in y': {monotone}",
            range.0, range.1
        ),
    )
}

fn mc_deviation(mu_s_cm: f64, photons: u64) -> f64 {
    let g = geometry();
    let mu_a = per_cm_to_per_mm(MU_A_CM);
    let mu_s_red = per_cm_to_per_mm(mu_s_cm);
    let medium = McMedium { mu_a, mu_s: mu_s_red / (1.0 - 0.9), g: 0.9, n: g.n_medium() };
    let tip = Point3::new(0.0, FIBER_Y, 0.0);
    let source = SourceSpec { tip, tilt_deg: g.tilt_deg(), n_incident: Some(g.n_coupling()) };
    let grid = GridSpec::centered(9.0, 15.0, 30.0, 1.0).unwrap();
    let run = simulate(&McConfig::new(photons, medium, source, grid, 2024)).unwrap();
    let model = ForwardModel::model1(mu_eff(mu_a, mu_s_red).unwrap(), mu_s_red, g.tilt_rad(), &moments()).unwrap();
    compare_to_model(&run.field, &model, tip, &AxialLine::on_axis(5.0, 25.0)).unwrap().mean_abs_deviation
}

fn criterion_5() -> Outcome {
    let photons = 2_000_000;
    let d10 = mc_deviation(10.0, photons);
    let d5 = mc_deviation(5.0, photons);
    let d20 = mc_deviation(20.0, photons);
    check(
        d10 < 0.15 && d20 <= d5,
        format!(
            "mean relative deviation over z in [5, 25] mm: {:.2}% at 10 cm^-1 (limit 15%), {:.2}% at 20 vs {:.2}% at 5",
            d10 * 100.0,
            d20 * 100.0,
            d5 * 100.0
        ),
    )
}

/// Brain medium with constant absorption, probed by one point target.
struct PointStudy {
    geometry: ProbeGeometry,
    moments: ReflectionMoments,
    grid: WavelengthGrid,
    medium: OpticalMedium,
    pixels: PixelGrid,
    targets: TargetSet,
}

impl PointStudy {
    fn new(footprint: Footprint) -> Self {
        let grid = WavelengthGrid::default();
        let wls = grid.analysis_wavelengths();
        let g = geometry();
        let medium = OpticalMedium::brain(&wls, per_cm_to_per_mm(MU_A_CM), 0.9, g.n_medium()).unwrap();
        let targets = TargetSet {
            chromophores: vec![ChromophoreSpectrum { name: "absorber".into(), alpha: vec![1.0; wls.len()] }],
            targets: vec![Target { x_mm: 0.0, z_mm: 10.0, concentrations: vec![1.0] }],
            footprint,
        };
        let pixels = PixelGrid { x0_mm: -5.0, dx_mm: 0.5, nx: 21, z0_mm: 5.0, dz_mm: 0.5, nz: 21 };
        PointStudy { moments: moments(), geometry: g, grid, medium, pixels, targets }
    }

    fn scene(&self) -> Scene<'_> {
        Scene {
            geometry: &self.geometry,
            moments: &self.moments,
            medium: &self.medium,
            wavelengths: &self.grid,
            pixels: self.pixels,
            targets: &self.targets,
            model: ModelKind::One,
        }
    }

    fn tensor(&self, snr_db: f64, trial: u64) -> MeasurementTensor {
        let noise = NoiseSpec { snr_db: Some(snr_db), offset_sigmas: 1.0, seed: trial_seed(6060, trial) };
        synthesize(&self.scene(), &noise).unwrap()
    }

    fn options(model: ModelKind) -> EstimateOptions {
        EstimateOptions { model, tau: TauPolicy::FractionOfMax(0.5), smooth: false, ..EstimateOptions::default() }
    }
}

/// Mean relative error of Model I and mean ratio of Model II, per wavelength.
fn mean_estimates(study: &PointStudy) -> (Vec<f64>, Vec<f64>) {
    let truth = study.medium.mu_eff();
    let nj = truth.len();
    let (mut sum1, mut sum2) = (vec![0.0; nj], vec![0.0; nj]);
    for t in 0..TRIALS {
        let tensor = study.tensor(50.0, t);
        for (model, sum) in [(ModelKind::One, &mut sum1), (ModelKind::Two, &mut sum2)] {
            let r = estimate(&tensor, &study.geometry, &study.moments, &PointStudy::options(model)).unwrap();
            for (s, f) in sum.iter_mut().zip(&r.fits) {
                *s += f.mu_eff;
            }
        }
    }
    let n = TRIALS as f64;
    let err1 = sum1.iter().zip(&truth).map(|(s, t)| (s / n - t) / t).collect();
    let ratio = sum2.iter().zip(&truth).map(|(s, t)| s / n / t).collect();
    (err1, ratio)
}

/// The verdict uses single-pixel targets; the default 3x3 rendering is
/// reported alongside for comparison.
fn criterion_6() -> Outcome {
    let (err1, ratio) = mean_estimates(&PointStudy::new(Footprint::Single));
    let worst = |e: &[f64]| e.iter().fold(0.0, |a: f64, e| a.max(e.abs()));
    let worst1 = worst(&err1);
    let (err3, _) = mean_estimates(&PointStudy::new(Footprint::default()));
    let nj = ratio.len();
    let mean = ratio.iter().sum::<f64>() / nj as f64;
    let sd = (ratio.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nj - 1) as f64).sqrt();
    let cv = sd / mean;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{:+.1}", x * 100.0)).collect::<Vec<_>>().join(" ");
    check(
        worst1 <= 0.02 && cv < 0.05,
        format!(
            "Model I mean error per wavelength [{}]% (limit 2%); Model II ratio mean {:.3}, CV {:.2}% (limit 5%); \
             with 3x3 targets Model I worst error {:.2}%",
            fmt(&err1),
            mean,
            cv * 100.0,
            worst(&err3) * 100.0
        ),
    )
}

fn criterion_7() -> Outcome {
    let study = PointStudy::new(Footprint::Single);
    let target = study.targets.footprints(&study.pixels).unwrap()[0].clone();
    let points: Vec<Point3> = target.iter().map(|&i| study.pixels.point(i)).collect();
    let truth = study.scene().fluence_cube(&points).unwrap();
    let mut means = Vec::new();
    for snr in [20.0, 30.0, 40.0, 50.0] {
        let mut acc = [0.0; 2];
        for t in 0..TRIALS {
            let tensor = study.tensor(snr, t);
            for (m, model) in [ModelKind::One, ModelKind::Two].into_iter().enumerate() {
                let r = estimate(&tensor, &study.geometry, &study.moments, &PointStudy::options(model)).unwrap();
                let est = model_fluence_cube(&r, &study.geometry, &points, false).unwrap();
                acc[m] += fluence_correlation(&est, &truth).unwrap();
            }
        }
        means.push((snr, acc[0] / TRIALS as f64, acc[1] / TRIALS as f64));
    }
    let monotone = means.windows(2).all(|w| w[1].1 >= w[0].1);
    let top = means.last().unwrap().1;
    let table =
        means.iter().map(|(s, a, b)| format!("{s} dB: {a:.5}/{b:.5}")).collect::<Vec<_>>().join(", ");
    check(
        monotone && top > 0.99,
        format!("mean rho (Model I/Model II) {table}; Model I nondecreasing: {monotone}, > 0.99 at 50 dB: {}", top > 0.99),
    )
}

/// Peaked nanorod-like and smooth ink-like absorbers seen through a medium
/// whose absorption rises with wavelength.
fn criterion_8() -> Outcome {
    let grid = WavelengthGrid::default();
    let wls = grid.analysis_wavelengths();
    let g = geometry();
    let mu_a: Vec<f64> = wls.iter().map(|&l| per_cm_to_per_mm(0.03 + 0.12 * (l - 715.0) / 160.0)).collect();
    let mu_s: Vec<f64> = wls.iter().map(|&l| brain_scattering(l).unwrap()).collect();
    let medium = OpticalMedium::new(mu_a, mu_s, 0.9, g.n_medium()).unwrap();
    let peaked: Vec<f64> = wls.iter().map(|&l| 0.1 + (-((l - 776.0) / 35.0).powi(2)).exp()).collect();
    let smooth: Vec<f64> = wls.iter().map(|&l| 1.0 - 0.4 * (l - 715.0) / 160.0).collect();
    let targets = TargetSet {
        chromophores: vec![
            ChromophoreSpectrum { name: "nanorod".into(), alpha: peaked.clone() },
            ChromophoreSpectrum { name: "ink".into(), alpha: smooth.clone() },
        ],
        targets: vec![
            Target { x_mm: -3.0, z_mm: 9.0, concentrations: vec![1.0, 0.0] },
            Target { x_mm: 3.0, z_mm: 12.0, concentrations: vec![0.0, 1.0] },
        ],
        footprint: Footprint::default(),
    };
    let pixels = PixelGrid { x0_mm: -8.0, dx_mm: 0.5, nx: 33, z0_mm: 4.0, dz_mm: 0.5, nz: 29 };
    let moments = moments();
    let scene =
        Scene { geometry: &g, moments: &moments, medium: &medium, wavelengths: &grid, pixels, targets: &targets, model: ModelKind::One };
    let footprints = targets.footprints(&pixels).unwrap();
    let points: Vec<Vec<Point3>> = footprints.iter().map(|fp| fp.iter().map(|&i| pixels.point(i)).collect()).collect();
    let reference = [peaked, smooth];
    let opts = EstimateOptions { tau: TauPolicy::FractionOfMax(0.5), ..EstimateOptions::default() };

    let mut wins = [0u32; 2];
    let mut med = [Vec::new(), Vec::new()];
    for t in 0..TRIALS {
        let noise = NoiseSpec { snr_db: Some(40.0), offset_sigmas: 1.0, seed: trial_seed(8080, t) };
        let tensor = synthesize(&scene, &noise).unwrap();
        let r = estimate(&tensor, &g, &moments, &opts).unwrap();
        let data = debias(&tensor, &estimate_noise_bias(&tensor).unwrap()).unwrap();
        for k in 0..2 {
            let phi = model_fluence_cube(&r, &g, &points[k], true).unwrap();
            let d = uncorrected_spectrum(&data, &footprints[k]).unwrap();
            let c = corrected_spectrum(&data, &phi, &footprints[k]).unwrap();
            let dd = spectrum_similarity(&d.values, &reference[k]).unwrap().distance;
            let dc = spectrum_similarity(&c.values, &reference[k]).unwrap().distance;
            wins[k] += (dc < dd) as u32;
            med[k].push((dd, dc));
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let summary: Vec<String> = (0..2)
        .map(|k| {
            let mut d: Vec<f64> = med[k].iter().map(|p| p.0).collect();
            let mut c: Vec<f64> = med[k].iter().map(|p| p.1).collect();
            format!("target {k}: {} wins, median distance {:.4} -> {:.4}", wins[k], median(&mut d), median(&mut c))
        })
        .collect();
    check(wins.iter().all(|&w| w >= 95), format!("{} (need >= 95 each)", summary.join("; ")))
}

fn partition_of_unity() -> Result<String, String> {
    let pixels = PixelGrid { x0_mm: -2.0, dx_mm: 1.0, nx: 5, z0_mm: 6.0, dz_mm: 1.0, nz: 5 };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut values = Cube::zeros([3, FIBER_COUNT, pixels.len()]);
    for v in values.data_mut() {
        *v = rand::Rng::random_range(&mut rng, 0.0..5.0);
    }
    let tensor = MeasurementTensor::new(vec![700.0, 750.0, 800.0], pixels, Some(0), values).unwrap();
    let data = debias(&tensor, &[0.0; FIBER_COUNT]).unwrap();
    let support = select_support(&data, TauPolicy::Percentile(50.0), WeightMode::Summed).unwrap();
    let norm = normalize(&data, &support).unwrap();
    let worst = norm
        .frames
        .iter()
        .flatten()
        .map(|p| (p.values.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    check(worst < 1e-12, format!("partition of unity max error {worst:.1e}"))
}

fn scale_invariance() -> Result<String, String> {
    let g = geometry();
    let m = moments();
    let pixels = PixelGrid { x0_mm: -2.0, dx_mm: 2.0, nx: 3, z0_mm: 8.0, dz_mm: 2.0, nz: 2 };
    let wls = [715.0, 875.0];
    let tensor_for = |scale: f64| {
        let mut v = Cube::zeros([wls.len(), FIBER_COUNT, pixels.len()]);
        for (j, &wl) in wls.iter().enumerate() {
            let mu_s = brain_scattering(wl).unwrap();
            let model = ForwardModel::model1(mu_eff(0.003, mu_s).unwrap(), mu_s, g.tilt_rad(), &m).unwrap();
            for i in 0..pixels.len() {
                for (k, &tip) in g.fiber_tips().iter().enumerate() {
                    v.set(j, k, i, scale * (1.0 + i as f64) * model.eval(tip, pixels.point(i)).unwrap());
                }
            }
        }
        MeasurementTensor::new(wls.to_vec(), pixels, None, v).unwrap()
    };
    let fit = |scale: f64| {
        let data = debias(&tensor_for(scale), &[0.0; FIBER_COUNT]).unwrap();
        let support = select_support(&data, TauPolicy::Absolute(0.0), WeightMode::Summed).unwrap();
        let norm = normalize(&data, &support).unwrap();
        fit_parameters(&norm, &g, &m, ModelKind::One, &SearchConfig::default()).unwrap().mu_eff_hat()
    };
    let (a, b) = (fit(1.0), fit(1234.5));
    let worst = a.iter().zip(&b).map(|(x, y)| ((x - y) / x).abs()).fold(0.0, f64::max);
    check(worst < 1e-9, format!("argmin change under 1234.5x rescale {worst:.1e}"))
}

fn extrapolated_zero() -> Result<String, String> {
    let g = geometry();
    let m = moments();
    let mu_s = 1.0;
    let model = ForwardModel::model1(mu_eff(0.003, mu_s).unwrap(), mu_s, g.tilt_rad(), &m).unwrap();
    let tip = Point3::new(0.0, FIBER_Y, 0.0);
    let z_b = m.extrapolated_distance(1.0 / (3.0 * mu_s)).unwrap();
    let mut worst = 0.0f64;
    for x in linspace(-10.0, 10.0, 11) {
        for y in linspace(-10.0, 10.0, 11) {
            let on = model.eval(tip, Point3::new(x, y, -z_b)).unwrap().abs();
            let inside = model.eval(tip, Point3::new(x, y, 1.0)).unwrap().abs();
            worst = worst.max(on / inside);
        }
    }
    check(worst < 1e-10, format!("|Phi| on z = -z_b relative to interior {worst:.1e}"))
}

fn energy_conservation() -> Result<String, String> {
    let g = geometry();
    let medium = McMedium { mu_a: 0.003, mu_s: 10.0, g: 0.9, n: g.n_medium() };
    let source = SourceSpec { tip: Point3::new(0.0, FIBER_Y, 0.0), tilt_deg: 35.0, n_incident: Some(g.n_coupling()) };
    let grid = GridSpec::centered(20.0, 20.0, 20.0, 1.0).unwrap();
    let e = simulate(&McConfig::new(100_000, medium, source, grid, 77)).unwrap().energy;
    let rel = e.imbalance().abs() / e.launched;
    check(rel < 1e-3, format!("energy balance error {:.2e}", rel))
}

fn hg_mean_cosine() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 1_000_000;
    let mut worst = 0.0f64;
    for g in [0.0, 0.5, 0.9, 0.95] {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let c = sample_hg_cos(&mut rng, g);
            s += c;
            s2 += c * c;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        worst = worst.max((mean - g).abs() / se);
    }
    check(worst < 4.0, format!("HG mean cosine within {worst:.2} standard errors"))
}

fn criterion_9() -> Outcome {
    let parts = [partition_of_unity(), scale_invariance(), extrapolated_zero(), energy_conservation(), hg_mean_cosine()];
    let ok = parts.iter().all(Result::is_ok);
    let detail = parts.iter().map(|p| p.as_ref().unwrap_or_else(|e| e).clone()).collect::<Vec<_>>().join("; ");
    check(ok, detail)
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "brain medium table", criterion_1),
        (2, "Model II discrepancy bound", criterion_2),
        (3, "absorption insensitivity", criterion_3),
        (4, "fluence peak depth", criterion_4),
        (5, "Monte Carlo vs Model I", criterion_5),
        (6, "estimator bias", criterion_6),
        (7, "correlation vs SNR", criterion_7),
        (8, "correction efficacy", criterion_8),
        (9, "invariant suites", criterion_9),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n} ({name}): PASS [{secs:.1} s] {d}"),
            Err(d) => {
                println!("criterion {n} ({name}): FAIL [{secs:.1} s] {d}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
