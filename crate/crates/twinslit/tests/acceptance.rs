//! Acceptance run: one PASS/FAIL line per criterion, driven through the
//! same scenario runner as the CLI. A failing criterion is reported but
//! does not abort `cargo test`, which would skip every later target; set
//! `TWINSLIT_ACCEPTANCE_STRICT=1` to exit nonzero on any FAIL.

use std::f64::consts::PI;
use std::time::Instant;

use twinslit::config::ScenarioConfig;
use twinslit::runs::{VdReport, BOUND};
use twinslit::scenario::Scenario;
use twinslit::{execute, resolve_workers, Command, Report};
use twinslit_core::biphoton::{build_1d_amplitude, phi, singles_map_2d, MomentumMask, PartnerQuadrature};
use twinslit_core::coincidence::{vd_scan, CoincidenceModel, ScanResult, SheetSampling};
use twinslit_core::dispersion::{collinear_phase_match_angle, CrystalSpec, KzMode};
use twinslit_core::grid::{GridSpec, Transform1D};
use twinslit_core::optical_chain::{ApertureShape, ResolvedAperture};
use twinslit_core::pump_modes::PumpMode;
use twinslit_core::{Arm, Complex64, WaveVector};

/// Idler positions probed at the pump-hump images and the mode center, µm.
const PROBES: [f64; 3] = [-117.5, 0.0, 117.5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn line(id: &str, title: &str, o: &Outcome) -> bool {
    println!("criterion {id} {}: {title} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

fn run(command: Command, preset: &str, dir: &tempfile::TempDir, tag: &str) -> (Report, f64) {
    let mut config = ScenarioConfig::preset(preset).expect("preset");
    config.run.out = dir.path().join(tag).to_string_lossy().into_owned();
    let started = Instant::now();
    let outcome = execute(command, config).unwrap_or_else(|e| panic!("{tag}: {e}"));
    (outcome.report, started.elapsed().as_secs_f64())
}

fn vd(report: Report) -> VdReport {
    match report {
        Report::Vd(v) => v,
        other => panic!("expected a vd report, got {other:?}"),
    }
}

fn probe(s: &Scenario, positions: &[f64]) -> ScanResult {
    let cone = s.cone_if_needed().expect("cone");
    let aperture = s.configured_aperture(cone).expect("aperture");
    let chain = s.chain(aperture).expect("chain");
    let grid = s.grid().expect("grid");
    vd_scan(positions, &chain, grid, &s.pump, &s.crystal, s.mode, &s.scan_settings(&aperture)).expect("scan")
}

fn criterion_1(dir: &tempfile::TempDir) -> Outcome {
    let (report, seconds) = run(Command::Vd, "circle-upper", dir, "c1");
    let r = &vd(report).runs[0];
    let s = Scenario::new(ScenarioConfig::preset("circle-upper").unwrap()).unwrap();
    let probes = probe(&s, &PROBES);
    let p = &probes.points;
    let d = |i: usize| p[i].distinguishability.map_or(f64::NAN, f64::abs);
    let v0 = p[1].visibility.unwrap_or(f64::NAN);
    let bound_ok = r.points_above_bound == 0 && r.undefined_points == 0;
    let humps_ok = d(0) > 0.9 && d(2) > 0.9;
    let center_ok = v0 > 0.9 && d(1) < 0.1;
    Outcome {
        pass: bound_ok && r.band_0_95_um.is_some() && humps_ok && center_ok && seconds <= 60.0,
        detail: format!(
            "max V2+D2 = {:.6} (bound {BOUND}), points above = {}, band >= 0.95 = {:?} um, |D|(-117.5) = {:.4}, |D|(117.5) = {:.4}, V(0) = {v0:.4}, |D|(0) = {:.4}, runtime {seconds:.2} s on {} core(s)",
            r.max_v2_plus_d2.unwrap_or(f64::NAN),
            r.points_above_bound,
            r.band_0_95_um,
            d(0),
            d(2),
            d(1),
            resolve_workers(0)
        ),
    }
}

fn criterion_2(dir: &tempfile::TempDir) -> Outcome {
    let r = &vd(run(Command::Vd, "no-aperture", dir, "c2").0).runs[0];
    let max = r.max_v2_plus_d2.unwrap_or(f64::NAN);
    Outcome {
        pass: (max - 1.4).abs() <= 0.2,
        detail: format!("max V2+D2 = {max:.4} at y_i = {:?} um (target 1.4 +- 0.2)", r.max_at_um),
    }
}

fn criterion_3(dir: &tempfile::TempDir) -> Outcome {
    let report = vd(run(Command::Vd, "slit-family", dir, "c3").0);
    let find = |w: f64| report.runs.iter().find(|r| r.size == Some(w)).expect("width in family");
    let (w08, w05, w023) = (find(0.8), find(0.5), find(0.23));
    let v_diff = report.runs.iter().filter_map(|r| r.v_sup_diff_from_open).fold(0.0, f64::max);
    let pass =
        w08.points_above_bound >= 1 && w05.points_above_bound >= 1 && w023.points_above_bound == 0 && v_diff < 0.1;
    Outcome {
        pass,
        detail: format!(
            "points above bound: w0.8 = {} (max {:.4}), w0.5 = {} (max {:.4}), w0.23 = {} (max {:.4}); sup |V - V_open| = {v_diff:.4}",
            w08.points_above_bound,
            w08.max_v2_plus_d2.unwrap_or(f64::NAN),
            w05.points_above_bound,
            w05.max_v2_plus_d2.unwrap_or(f64::NAN),
            w023.points_above_bound,
            w023.max_v2_plus_d2.unwrap_or(f64::NAN),
        ),
    }
}

fn criterion_4(dir: &tempfile::TempDir) -> (Outcome, f64) {
    let (report, seconds) = run(Command::Ring, "default", dir, "c4");
    let Report::Ring(r) = report else { panic!("expected a ring report") };
    let o = Outcome {
        pass: r.upper_cut.count == 2 && r.lower_cut.count == 1 && r.map_n == 128 && seconds <= 600.0,
        detail: format!(
            "upper cut {} peaks at {:?}, lower cut {} peak(s) at {:?}, N = {}, runtime {seconds:.2} s",
            r.upper_cut.count, r.upper_cut.positions, r.lower_cut.count, r.lower_cut.positions, r.map_n
        ),
    };
    (o, r.mirror_residual)
}

fn criterion_5(dir: &tempfile::TempDir) -> Outcome {
    let Report::Nearfield(up) = run(Command::Nearfield, "circle-upper", dir, "c5u").0 else { panic!() };
    let Report::Nearfield(low) = run(Command::Nearfield, "circle-lower", dir, "c5l").0 else { panic!() };
    let c = ScenarioConfig::default().chain;
    let (a, d) = (c.slit_width_um, c.slit_separation_um);
    let aligned = up.near_peaks_um.len() == 2
        && [-0.5 * d, 0.5 * d].iter().all(|s| up.near_peaks_um.iter().any(|p| (p - s).abs() <= 0.5 * a));
    let pass =
        up.parity == "central-minimum" && aligned && low.parity == "central-maximum" && low.near_peaks_um.len() == 1;
    Outcome {
        pass,
        detail: format!(
            "upper: {} with near-field peaks {:?} um; lower: {} with near-field peaks {:?} um",
            up.parity, up.near_peaks_um, low.parity, low.near_peaks_um
        ),
    }
}

fn criterion_6(dir: &tempfile::TempDir) -> Outcome {
    let Report::Curves(curves) = run(Command::Curves, "default", dir, "c6a").0 else { panic!() };
    let Report::Cuts(cuts) = run(Command::Cuts, "default", dir, "c6b").0 else { panic!() };
    let angle = collinear_phase_match_angle(&CrystalSpec::default(), KzMode::Exact).unwrap().to_degrees();
    let ratio = curves.slope_ratio.unwrap_or(0.0);
    let pass = curves.regions.len() == 2
        && ratio >= 3.0
        && cuts.upper.count == 2
        && cuts.lower.count == 1
        && (angle - 41.9).abs() <= 1.5;
    Outcome {
        pass,
        detail: format!(
            "{} intersection regions, slope ratio {ratio:.1}; tomographic cuts {} vs {} peaks; collinear angle {angle:.3} deg",
            curves.regions.len(),
            cuts.upper.count,
            cuts.lower.count
        ),
    }
}

fn max_scan_diff(a: &ScanResult, b: &ScanResult) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for (p, q) in a.points.iter().zip(&b.points) {
        let dv = (p.visibility.unwrap_or(f64::NAN) - q.visibility.unwrap_or(f64::NAN)).abs();
        let dd = (p.distinguishability.unwrap_or(f64::NAN) - q.distinguishability.unwrap_or(f64::NAN)).abs();
        worst = (
            worst.0.max(if dv.is_nan() { f64::INFINITY } else { dv }),
            worst.1.max(if dd.is_nan() { f64::INFINITY } else { dd }),
        );
    }
    worst
}

fn criterion_7(mirror_residual: f64) -> Outcome {
    let mut checks: Vec<(String, bool)> = Vec::new();

    // Parseval and round trip on a chirped, off-center field.
    let g = GridSpec::new(256, 1.2).unwrap();
    let t = Transform1D::new(&g, 0.1).unwrap();
    let field: Vec<Complex64> = (0..g.n)
        .map(|k| {
            let y = g.y(k);
            Complex64::from_polar((-(y / 20.0).powi(2)).exp() * (1.0 + 0.3 * (0.05 * y).cos()), 1e-3 * y * y + 0.2 * y)
        })
        .collect();
    let norm_y: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dy();
    let mut work = field.clone();
    t.to_momentum(&mut work);
    let norm_q: f64 = work.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dq();
    t.to_position(&mut work);
    let round = work.iter().zip(&field).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let parseval = (norm_y - norm_q).abs() / norm_y;
    checks.push((format!("Parseval {parseval:.1e}"), parseval <= 1e-12));
    checks.push((format!("round trip {round:.1e}"), round <= 1e-12));
    checks.push((format!("x-mirror {mirror_residual:.1e}"), mirror_residual <= 1e-10));

    // Same-grid streaming reduction against a dense double loop.
    let crystal = CrystalSpec::default();
    let pump = PumpMode::tem01(75.0).unwrap();
    let g32 = GridSpec::new(32, 1.2).unwrap();
    let signal = ResolvedAperture { shape: ApertureShape::Circle { diameter: 1.4 }, center: WaveVector::new(0.1, 0.3) };
    let idler = signal.point_reflected();
    let map =
        singles_map_2d(Arm::Signal, &signal, &idler, g32, &pump, &crystal, KzMode::Exact, PartnerQuadrature::Grid)
            .unwrap();
    let pts: Vec<WaveVector> = (0..32 * 32).map(|i| WaveVector::new(g32.qx(i % 32), g32.qy(i / 32))).collect();
    let cell = g32.dq() * g32.dq();
    let dense: Vec<f64> = pts
        .iter()
        .map(|&qs| {
            let partners: f64 = pts
                .iter()
                .map(|&qi| phi(qs, qi, &pump, &crystal, KzMode::Exact).unwrap().norm_sqr() * idler.transmission(qi))
                .sum();
            partners * signal.transmission(qs) * cell
        })
        .collect();
    let scale = dense.iter().copied().fold(0.0, f64::max);
    let streaming = map.data.iter().zip(&dense).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max);
    checks.push((format!("streaming vs dense {streaming:.1e}"), scale > 0.0 && streaming <= 1e-12));

    let amplitude = build_1d_amplitude(GridSpec::new(512, 1.6).unwrap(), &pump, &crystal, KzMode::Exact).unwrap();
    let norm = (amplitude.norm_sqr() - 1.0).abs();
    checks.push((format!("normalization {norm:.1e}"), norm <= 1e-12));

    // Bounds, refinement and the line/sheet cross-check on the circle scan.
    let base = ScenarioConfig::preset("circle-upper").unwrap();
    let s512 = Scenario::new(base.clone()).unwrap();
    let positions = base.scan_positions();
    let coarse = probe(&s512, &positions);
    let bounds = coarse.points.iter().all(|p| {
        p.visibility.is_some_and(|v| (0.0..=1.0).contains(&v)) && p.distinguishability.is_some_and(|d| d.abs() <= 1.0)
    });
    checks.push(("0 <= V <= 1, |D| <= 1".to_string(), bounds));
    let mut fine_cfg = base.clone();
    fine_cfg.grid.n = 1024;
    let fine = probe(&Scenario::new(fine_cfg).unwrap(), &positions);
    let (dv, dd) = max_scan_diff(&coarse, &fine);
    checks.push((format!("N 512 -> 1024: max dV {dv:.4}, max dD {dd:.4}"), dv <= 0.01 && dd <= 0.01));
    let mut sheet_cfg = base;
    sheet_cfg.detection.model = twinslit::config::Model::Sheet;
    let sheet_scenario = Scenario::new(sheet_cfg).unwrap();
    assert!(matches!(
        sheet_scenario.scan_settings(&ResolvedAperture::open()).model,
        CoincidenceModel::Sheet(SheetSampling { .. })
    ));
    let (lv, ld) = max_scan_diff(&probe(&s512, &PROBES), &probe(&sheet_scenario, &PROBES));
    checks.push((format!("line vs sheet at {PROBES:?} um: dV {lv:.4}, dD {ld:.4}"), lv <= 0.05 && ld <= 0.05));

    Outcome {
        pass: checks.iter().all(|c| c.1),
        detail: checks
            .iter()
            .map(|(d, ok)| format!("{d} [{}]", if *ok { "ok" } else { "FAIL" }))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

/// Weight of `|Φ|²` with `|Δk_z| L / 2 <= 2π`, against the 0.99 target.
fn weight_concentration() -> Outcome {
    let crystal = CrystalSpec::default();
    let pump = PumpMode::tem01(75.0).unwrap();
    let g = GridSpec::new(512, 1.6).unwrap();
    let a = build_1d_amplitude(g, &pump, &crystal, KzMode::Exact).unwrap();
    let photons = crystal.photons().unwrap();
    let mut inside = 0.0;
    for j in 0..g.n {
        for k in 0..g.n {
            let dk =
                photons.delta_kz(WaveVector::new(0.0, g.qy(j)), WaveVector::new(0.0, g.qy(k)), KzMode::Exact).unwrap();
            if (dk * photons.half_length).abs() <= 2.0 * PI {
                inside += a.at(j, k).norm_sqr() * g.dq() * g.dq();
            }
        }
    }
    Outcome {
        pass: inside >= 0.99,
        detail: format!("fraction {inside:.4} (target >= 0.99; a sinc^2 band caps it near 2 Si(4 pi) / pi = 0.9499)"),
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    println!("acceptance: {} worker thread(s)", resolve_workers(0));
    let mut results = Vec::new();
    results.push(line("1", "complementarity bound with a circular aperture", &criterion_1(&dir)));
    results.push(line("2", "unfair-sampling violation without aperture", &criterion_2(&dir)));
    results.push(line("3", "slit-aperture family", &criterion_3(&dir)));
    let (c4, mirror) = criterion_4(&dir);
    results.push(line("4", "ring asymmetry", &c4));
    results.push(line("5", "fringe parity and near field", &criterion_5(&dir)));
    results.push(line("6", "phase-matching geometry", &criterion_6(&dir)));
    results.push(line("7", "property suite", &criterion_7(mirror)));
    results.push(line("invariant", "phase-matching weight concentration", &weight_concentration()));
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} PASS, {failed} FAIL", results.len() - failed);
    if failed > 0 && std::env::var("TWINSLIT_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
