use std::collections::BTreeMap;
use std::path::Path;

use twinslit::config::{Model, ScenarioConfig};
use twinslit::output::sha256_hex;
use twinslit::{execute, Command, Report};

fn run_in(dir: &Path, tag: &str, command: Command, mut config: ScenarioConfig) -> (Report, BTreeMap<String, Vec<u8>>) {
    let out = dir.join(tag);
    config.run.out = out.to_string_lossy().into_owned();
    let outcome = execute(command, config).unwrap();
    let manifest = outcome.manifest.expect("manifest");
    let mut files = BTreeMap::new();
    for record in &manifest.outputs {
        let bytes = std::fs::read(out.join(&record.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), record.sha256, "{}", record.path);
        assert_eq!(bytes.len() as u64, record.bytes);
        files.insert(record.path.clone(), bytes);
    }
    assert!(out.join("manifest.json").exists());
    assert!(!std::fs::read_dir(&out).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "partial")));
    (outcome.report, files)
}

fn small_ring() -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.ring.map_n = 32;
    c.ring.cut_samples = 256;
    c
}

fn small_sheet() -> ScenarioConfig {
    let mut c = ScenarioConfig::preset("slit-family").unwrap();
    c.detection.model = Model::Sheet;
    c.detection.sheet_qx_half_extent = 0.06;
    c.scan.y_min_um = -120.0;
    c.scan.y_max_um = 120.0;
    c.scan.y_step_um = 120.0;
    c.scan.widths = vec![0.5];
    c
}

/// Everything but `#` comment lines; binary files unchanged.
fn data(bytes: &[u8]) -> Vec<u8> {
    if bytes.starts_with(b"P5") {
        return bytes.to_vec();
    }
    let text = std::str::from_utf8(bytes).unwrap();
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n").into_bytes()
}

#[test]
fn outputs_are_bit_identical_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    for (command, config) in [
        (Command::Ring, small_ring()),
        (Command::Vd, ScenarioConfig::preset("circle-upper").unwrap()),
        (Command::Vd, small_sheet()),
        (Command::Cuts, ScenarioConfig::default()),
    ] {
        let mut one = config.clone();
        one.run.workers = 1;
        let mut two = config;
        two.run.workers = 2;
        let name = command.name();
        let (_, a) = run_in(dir.path(), &format!("{name}-1"), command, one);
        let (_, b) = run_in(dir.path(), &format!("{name}-2"), command, two);
        // Reports carry wall-clock timings and headers carry the config
        // hash, which includes the worker count; the data must match exactly.
        for (path, bytes) in &a {
            if !path.ends_with(".json") && path != "config.txt" {
                assert!(data(bytes) == data(&b[path]), "{name}: {path} differs between 1 and 2 workers");
            }
        }
    }
}

#[test]
fn rerunning_a_config_reproduces_every_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = ScenarioConfig::preset("circle-lower").unwrap();
    let (_, a) = run_in(dir.path(), "same", Command::Nearfield, config.clone());
    let (_, b) = run_in(dir.path(), "same", Command::Nearfield, config.clone());
    assert_eq!(a, b);
    let mut echoed = config;
    echoed.run.out = dir.path().join("same").to_string_lossy().into_owned();
    assert_eq!(a["config.txt"], echoed.serialize().into_bytes());
}

#[test]
fn gaussian_pump_gives_single_peaked_cuts() {
    let dir = tempfile::tempdir().unwrap();
    let (Report::Ring(r), _) = run_in(dir.path(), "ring", Command::Ring, ScenarioConfig::preset("tem00").unwrap())
    else {
        panic!()
    };
    assert_eq!((r.upper_cut.count, r.lower_cut.count), (1, 1), "{r:?}");
    let (Report::Cuts(c), _) = run_in(dir.path(), "cuts", Command::Cuts, ScenarioConfig::preset("tem00").unwrap())
    else {
        panic!()
    };
    assert_eq!((c.upper.count, c.lower.count), (1, 1));
}

#[test]
fn structured_pump_ring_is_asymmetric_and_mirror_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let (Report::Ring(r), files) = run_in(dir.path(), "ring", Command::Ring, ScenarioConfig::default()) else {
        panic!()
    };
    assert_eq!((r.upper_cut.count, r.lower_cut.count), (2, 1));
    assert!(r.mirror_residual < 1e-10, "{}", r.mirror_residual);
    // The measured cone matches the analytic ring extent within 2%.
    let extent = r.ring_extent.1 - r.ring_extent.0;
    assert!((r.cone_diameter_signal / extent - 1.0).abs() < 0.02);
    let pgm = &files["signal_map.pgm"];
    assert!(pgm.starts_with(b"P5\n# "));
    let header_end = pgm.windows(6).position(|w| w == b"65535\n").unwrap() + 6;
    assert_eq!(pgm.len() - header_end, 128 * 128 * 2);
}

#[test]
fn tomographic_peaks_are_stable_under_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let coarse = ScenarioConfig::default();
    let mut fine = coarse.clone();
    fine.grid.n = 1024;
    let (Report::Cuts(a), _) = run_in(dir.path(), "a", Command::Cuts, coarse.clone()) else { panic!() };
    let (Report::Cuts(b), _) = run_in(dir.path(), "b", Command::Cuts, fine) else { panic!() };
    let cell = 2.0 * coarse.grid.q_max / coarse.grid.n as f64;
    for (x, y) in [(&a.upper, &b.upper), (&a.lower, &b.lower)] {
        assert_eq!(x.count, y.count);
        for (p, q) in x.positions.iter().zip(&y.positions) {
            assert!((p - q).abs() <= cell, "{p} vs {q}");
        }
    }
    assert!(a.full_band_residual < 1e-12);
}

#[test]
fn pump_lines_have_unit_negative_slope_and_meet_the_amplitude_maxima() {
    let dir = tempfile::tempdir().unwrap();
    let (Report::Curves(r), files) = run_in(dir.path(), "curves", Command::Curves, ScenarioConfig::default()) else {
        panic!()
    };
    assert_eq!(r.regions.len(), 2);
    assert!(r.slope_ratio.unwrap() >= 3.0);
    assert!(r.amplitude_maximum_offset_cells <= 1);
    let text = String::from_utf8(files["pump_lines.csv"].clone()).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("offset"))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    for pair in rows.chunks(2) {
        let slope = (pair[1][2] - pair[0][2]) / (pair[1][1] - pair[0][1]);
        assert!((slope + 1.0).abs() < 1e-12);
    }
}

#[test]
fn vd_csv_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (Report::Vd(r), files) = run_in(dir.path(), "vd", Command::Vd, ScenarioConfig::preset("circle-upper").unwrap())
    else {
        panic!()
    };
    let text = String::from_utf8(files[&r.runs[0].file].clone()).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "y_i,V,D_signed,D_abs,V2_plus_D2,C_S1,C_S2");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 101);
    assert_eq!(r.runs[0].points_above_bound, 0);
}

#[test]
fn validate_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ScenarioConfig::default();
    c.run.out = dir.path().join("none").to_string_lossy().into_owned();
    let outcome = execute(Command::Validate, c).unwrap();
    assert!(outcome.manifest.is_none());
    assert!(!dir.path().join("none").exists());
}
