//! One function per CLI subcommand. Each writes its files into an
//! [`OutputDir`] and returns a typed report that is also saved as JSON.

use serde::Serialize;
use twinslit_core::biphoton::{build_1d_amplitude, pump_line_offsets, singles_at, Open, RealMap2D};
use twinslit_core::coincidence::{signal_singles_line, vd_scan, ScanResult};
use twinslit_core::detection::{fringe_parity, tomographic_cut, visibility, FringeParity, FringePattern, FringeWindow};
use twinslit_core::dispersion::{phase_match_curves, pump_line_crossings, CurveWindow};
use twinslit_core::peaks::prominent_peaks;
use twinslit_core::{Arm, WaveVector};

use crate::config::ApertureKind;
use crate::error::RunError;
use crate::output::OutputDir;
use crate::scenario::Scenario;

/// Upper bound on `V² + D²` counted as a violation of complementarity.
pub const BOUND: f64 = 1.0 + 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct CutPeaks {
    pub count: usize,
    pub positions: Vec<f64>,
    /// Prominence as a fraction of the profile maximum.
    pub relative_prominence: Vec<f64>,
}

impl CutPeaks {
    pub fn find(coords: &[f64], profile: &[f64], fraction: f64) -> Self {
        let max = profile.iter().copied().fold(0.0, f64::max);
        let peaks = prominent_peaks(profile, fraction);
        Self {
            count: peaks.len(),
            positions: peaks.iter().map(|p| coords[p.index]).collect(),
            relative_prominence: peaks.iter().map(|p| if max > 0.0 { p.prominence / max } else { 0.0 }).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RingReport {
    pub ring_extent: (f64, f64),
    pub cone_diameter_signal: f64,
    pub cone_diameter_idler: f64,
    /// Fine-sampled cut along `q_x = 0` above the ring center.
    pub upper_cut: CutPeaks,
    pub lower_cut: CutPeaks,
    /// The same cuts read off the map's `q_x = 0` column.
    pub map_column_upper: CutPeaks,
    pub map_column_lower: CutPeaks,
    /// Largest `|R(q_x, q_y) − R(−q_x, q_y)| / max R` over both maps.
    pub mirror_residual: f64,
    pub map_n: usize,
    pub map_seconds: f64,
}

pub fn run_ring(s: &Scenario, out: &mut OutputDir) -> Result<RingReport, RunError> {
    let r = &s.config.ring;
    let started = std::time::Instant::now();
    let signal = s.singles_map(Arm::Signal)?;
    let idler = s.singles_map(Arm::Idler)?;
    let map_seconds = started.elapsed().as_secs_f64();
    let cone_signal = twinslit_core::optical_chain::measure_cone_diameter(&signal)?;
    let cone_idler = twinslit_core::optical_chain::measure_cone_diameter(&idler)?;
    let mirror_residual = mirror_residual(&signal).max(mirror_residual(&idler));

    let rc = s.ring_center();
    let h = r.map_half_extent;
    let m = r.cut_samples;
    let upper_q: Vec<f64> = (0..m).map(|i| rc + h * i as f64 / (m - 1) as f64).collect();
    let lower_q: Vec<f64> = (0..m).map(|i| rc - h + h * i as f64 / (m - 1) as f64).collect();
    let eval = |qs: &[f64]| -> Result<Vec<f64>, RunError> {
        let points: Vec<WaveVector> = qs.iter().map(|&q| WaveVector::new(0.0, q)).collect();
        Ok(singles_at(
            Arm::Signal,
            &Open,
            &Open,
            &points,
            &s.pump,
            &s.crystal,
            s.mode,
            r.pump_samples,
            r.pump_half_width_waists,
        )?)
    };
    let upper = eval(&upper_q)?;
    let lower = eval(&lower_q)?;

    let g = signal.grid;
    let column = signal.column(g.n / 2);
    let split = (0..g.n).find(|&iy| g.qy(iy) >= rc).unwrap_or(g.n);
    let axis = g.qy_axis();

    let report = RingReport {
        ring_extent: s.ring,
        cone_diameter_signal: cone_signal,
        cone_diameter_idler: cone_idler,
        upper_cut: CutPeaks::find(&upper_q, &upper, r.prominence),
        lower_cut: CutPeaks::find(&lower_q, &lower, r.prominence),
        map_column_upper: CutPeaks::find(&axis[split..], &column[split..], r.prominence),
        map_column_lower: CutPeaks::find(&axis[..split], &column[..split], r.prominence),
        mirror_residual,
        map_n: g.n,
        map_seconds,
    };

    out.pgm("signal_map.pgm", &signal)?;
    out.pgm("idler_map.pgm", &idler)?;
    out.map_csv("signal_map.csv", &signal)?;
    out.map_csv("idler_map.csv", &idler)?;
    let rows: Vec<Vec<f64>> = upper_q.iter().zip(&upper).map(|(q, v)| vec![*q, *v]).collect();
    out.csv("vertical_cut_upper.csv", &[("cut", "q_x = 0, signal arm".into())], &["q_y", "rate"], &rows)?;
    let rows: Vec<Vec<f64>> = lower_q.iter().zip(&lower).map(|(q, v)| vec![*q, *v]).collect();
    out.csv("vertical_cut_lower.csv", &[("cut", "q_x = 0, signal arm".into())], &["q_y", "rate"], &rows)?;
    let rows: Vec<Vec<f64>> = axis.iter().zip(&column).map(|(q, v)| vec![*q, *v]).collect();
    out.csv("vertical_cut_map.csv", &[("cut", "map column q_x = 0".into())], &["q_y", "rate"], &rows)?;
    let rows = radial_profile(&signal, WaveVector::new(0.0, rc));
    out.csv("radial_signal.csv", &[("center", format!("(0, {rc})"))], &["r", "mean_rate"], &rows)?;
    out.json("ring.json", &report)?;
    Ok(report)
}

fn mirror_residual(map: &RealMap2D) -> f64 {
    let n = map.grid.n;
    let max = map.max();
    let mut worst = 0.0f64;
    for iy in 0..n {
        for ix in 1..n {
            worst = worst.max((map.at(ix, iy) - map.at(n - ix, iy)).abs());
        }
    }
    if max > 0.0 {
        worst / max
    } else {
        0.0
    }
}

fn radial_profile(map: &RealMap2D, center: WaveVector) -> Vec<Vec<f64>> {
    let g = map.grid;
    let dq = g.dq();
    let bins = (g.q_max / dq) as usize;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for iy in 0..g.n {
        for ix in 0..g.n {
            let d = WaveVector::new(g.qx(ix), g.qy(iy)) - center;
            let b = (d.norm_sqr().sqrt() / dq) as usize;
            if b < bins {
                sum[b] += map.at(ix, iy);
                count[b] += 1;
            }
        }
    }
    (0..bins).filter(|&b| count[b] > 0).map(|b| vec![(b as f64 + 0.5) * dq, sum[b] / count[b] as f64]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    pub q_sy: f64,
    pub q_iy: f64,
    pub offset: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Region {
    pub q_sy: f64,
    pub q_iy: f64,
    pub mean_abs_slope: f64,
    pub crossings: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvesReport {
    pub polylines: usize,
    pub vertices: usize,
    pub pump_line_offsets: [f64; 2],
    pub crossings: Vec<Crossing>,
    pub regions: Vec<Region>,
    /// Largest over smallest region slope magnitude.
    pub slope_ratio: Option<f64>,
    /// Largest distance, in grid cells, between a crossing and the nearby
    /// maximum of `|Φ|²` on the `(q_sy, q_iy)` grid.
    pub amplitude_maximum_offset_cells: usize,
}

pub fn run_curves(s: &Scenario, out: &mut OutputDir) -> Result<CurvesReport, RunError> {
    let c = &s.config.curves;
    let window = CurveWindow { q_sy: (c.q_min, c.q_max), q_iy: (c.q_min, c.q_max), samples: c.samples };
    let curves = phase_match_curves(window, &s.crystal, s.mode)?;
    let offsets = pump_line_offsets(&s.pump);
    let crossings: Vec<Crossing> = pump_line_crossings(&curves, &offsets)
        .into_iter()
        .map(|x| Crossing { q_sy: x.q_sy, q_iy: x.q_iy, offset: x.offset, slope: x.slope })
        .collect();
    let regions = regions(&crossings);
    let slopes: Vec<f64> = regions.iter().map(|r| r.mean_abs_slope).collect();
    let slope_ratio = (slopes.len() >= 2)
        .then(|| slopes.iter().copied().fold(0.0, f64::max) / slopes.iter().copied().fold(f64::INFINITY, f64::min));

    let grid = s.grid()?;
    let amplitude = build_1d_amplitude(grid, &s.pump, &s.crystal, s.mode)?;
    let mut worst = 0usize;
    for x in &crossings {
        let (Some(j0), Some(k0)) = (grid.qy_index(x.q_sy), grid.qy_index(x.q_iy)) else { continue };
        let reach = 3usize;
        let mut best = (j0, k0, 0.0);
        for j in j0.saturating_sub(reach)..=(j0 + reach).min(grid.n - 1) {
            for k in k0.saturating_sub(reach)..=(k0 + reach).min(grid.n - 1) {
                let w = amplitude.at(j, k).norm_sqr();
                if w > best.2 {
                    best = (j, k, w);
                }
            }
        }
        worst = worst.max(best.0.abs_diff(j0).max(best.1.abs_diff(k0)));
    }

    let report = CurvesReport {
        polylines: curves.len(),
        vertices: curves.iter().map(Vec::len).sum(),
        pump_line_offsets: offsets,
        crossings,
        regions,
        slope_ratio,
        amplitude_maximum_offset_cells: worst,
    };

    let rows: Vec<Vec<f64>> =
        curves.iter().enumerate().flat_map(|(i, line)| line.iter().map(move |&(a, b)| vec![i as f64, a, b])).collect();
    out.csv(
        "phase_matching_curves.csv",
        &[("curve", "Δk_z = 0 at q_sx = q_ix = 0".into())],
        &["curve", "q_sy", "q_iy"],
        &rows,
    )?;
    let rows: Vec<Vec<f64>> = offsets.iter().flat_map(|&o| [c.q_min, c.q_max].map(|q| vec![o, q, o - q])).collect();
    out.csv("pump_lines.csv", &[("line", "q_sy + q_iy = offset".into())], &["offset", "q_sy", "q_iy"], &rows)?;
    let rows: Vec<Vec<f64>> = report.crossings.iter().map(|x| vec![x.offset, x.q_sy, x.q_iy, x.slope]).collect();
    out.csv("crossings.csv", &[], &["offset", "q_sy", "q_iy", "curve_slope"], &rows)?;
    out.json("curves.json", &report)?;
    Ok(report)
}

/// Groups crossings whose `q_sy` lie within 0.1 rad/µm of each other.
fn regions(crossings: &[Crossing]) -> Vec<Region> {
    let mut sorted: Vec<&Crossing> = crossings.iter().collect();
    sorted.sort_by(|a, b| a.q_sy.total_cmp(&b.q_sy));
    let mut groups: Vec<Vec<&Crossing>> = Vec::new();
    for x in sorted {
        match groups.last_mut() {
            Some(g) if x.q_sy - g.last().map_or(f64::NEG_INFINITY, |l| l.q_sy) < 0.1 => g.push(x),
            _ => groups.push(vec![x]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let n = g.len() as f64;
            Region {
                q_sy: g.iter().map(|x| x.q_sy).sum::<f64>() / n,
                q_iy: g.iter().map(|x| x.q_iy).sum::<f64>() / n,
                mean_abs_slope: g.iter().map(|x| x.slope.abs()).sum::<f64>() / n,
                crossings: g.len(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CutsReport {
    /// Idler bands around the upper and lower intersections.
    pub upper_band: (f64, f64),
    pub lower_band: (f64, f64),
    pub upper: CutPeaks,
    pub lower: CutPeaks,
    /// Largest `|cut(full band) − signal marginal| / max marginal`.
    pub full_band_residual: f64,
    pub grid_n: usize,
}

pub fn run_cuts(s: &Scenario, out: &mut OutputDir) -> Result<CutsReport, RunError> {
    let grid = s.grid()?;
    let amplitude = build_1d_amplitude(grid, &s.pump, &s.crystal, s.mode)?;
    let bw = s.config.cuts.band_half_width;
    let (lo, hi) = s.ring;
    // The idler partner of the signal at the ring top sits at −hi.
    let upper_band = (-hi - bw, -hi + bw);
    let lower_band = (-lo - bw, -lo + bw);
    let upper = tomographic_cut(upper_band, &amplitude)?;
    let lower = tomographic_cut(lower_band, &amplitude)?;
    let full = tomographic_cut((grid.qy(0), grid.qy(grid.n - 1)), &amplitude)?;
    let marginal = amplitude.singles(Arm::Signal);
    let scale = marginal.iter().copied().fold(0.0, f64::max);
    let full_band_residual = full.iter().zip(&marginal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    let axis = grid.qy_axis();
    let p = s.config.ring.prominence;
    let report = CutsReport {
        upper_band,
        lower_band,
        upper: CutPeaks::find(&axis, &upper, p),
        lower: CutPeaks::find(&axis, &lower, p),
        full_band_residual,
        grid_n: grid.n,
    };
    let rows: Vec<Vec<f64>> = (0..grid.n).map(|j| vec![axis[j], upper[j], lower[j], full[j]]).collect();
    let extra = [
        ("upper_band_q_iy", format!("[{}, {}]", upper_band.0, upper_band.1)),
        ("lower_band_q_iy", format!("[{}, {}]", lower_band.0, lower_band.1)),
    ];
    out.csv("tomographic_cuts.csv", &extra, &["q_sy", "upper", "lower", "full"], &rows)?;
    out.json("cuts.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct VdRun {
    pub label: String,
    pub aperture: String,
    pub size: Option<f64>,
    pub file: String,
    pub max_v2_plus_d2: Option<f64>,
    pub max_at_um: Option<f64>,
    /// Longest contiguous run of idler positions with `V² + D² ≥ 0.95`.
    pub band_0_95_um: Option<(f64, f64)>,
    pub points: usize,
    pub points_above_bound: usize,
    pub undefined_points: usize,
    /// `sup |V − V_open|` over positions where both are defined.
    pub v_sup_diff_from_open: Option<f64>,
    #[serde(skip)]
    pub result: ScanResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct VdReport {
    pub magnification: f64,
    pub cone_diameter: Option<f64>,
    pub model: String,
    pub runs: Vec<VdRun>,
}

fn aperture_name(kind: ApertureKind) -> &'static str {
    match kind {
        ApertureKind::None => "none",
        ApertureKind::VerticalSlit => "vertical-slit",
        ApertureKind::InverseSlit => "inverse-slit",
        ApertureKind::Circle => "circle",
    }
}

pub fn run_vd(s: &Scenario, out: &mut OutputDir) -> Result<VdReport, RunError> {
    let grid = s.grid()?;
    let cone = s.cone_if_needed()?;
    let positions = s.config.scan_positions();
    let chain_cfg = &s.config.chain;
    let mut plan: Vec<(ApertureKind, f64)> = Vec::new();
    if s.config.scan.widths.is_empty() {
        plan.push((chain_cfg.aperture, chain_cfg.aperture_size));
    } else {
        let family = match chain_cfg.aperture {
            ApertureKind::InverseSlit => ApertureKind::InverseSlit,
            _ => ApertureKind::VerticalSlit,
        };
        plan.push((ApertureKind::None, 0.0));
        plan.extend(s.config.scan.widths.iter().map(|&w| (family, w)));
    }
    let mut runs: Vec<VdRun> = Vec::new();
    for (kind, size) in plan {
        let aperture = s.aperture(kind, size, cone)?;
        let chain = s.chain(aperture)?;
        let settings = s.scan_settings(&aperture);
        let result = vd_scan(&positions, &chain, grid, &s.pump, &s.crystal, s.mode, &settings)?;
        let label = match kind {
            ApertureKind::None => "open".to_string(),
            ApertureKind::Circle => "circle".to_string(),
            k => format!("{}-{size}", aperture_name(k)),
        };
        let file = format!("vd_{label}.csv");
        let rows: Vec<Vec<f64>> = result
            .points
            .iter()
            .map(|p| {
                let nan = f64::NAN;
                let v = p.visibility.unwrap_or(nan);
                let d = p.distinguishability.unwrap_or(nan);
                vec![p.y_i, v, d, d.abs(), p.v2_plus_d2().unwrap_or(nan), p.c_s1, p.c_s2]
            })
            .collect();
        let extra = [
            ("aperture", format!("{} size {size}", aperture_name(kind))),
            ("resolved_aperture", format!("{:?}", aperture)),
            ("magnification", format!("{}", s.magnification())),
            ("fringe_window", format!("{:?}", settings.window)),
        ];
        out.csv(&file, &extra, &["y_i", "V", "D_signed", "D_abs", "V2_plus_D2", "C_S1", "C_S2"], &rows)?;
        for p in result.points.iter().filter(|p| p.issue.is_some()) {
            tracing_note(&label, p.y_i, p.issue.as_deref().unwrap_or(""));
        }
        let max = result.max_v2_plus_d2();
        runs.push(VdRun {
            label,
            aperture: aperture_name(kind).into(),
            size: (kind != ApertureKind::None).then_some(size),
            file,
            max_v2_plus_d2: max.map(|m| m.1),
            max_at_um: max.map(|m| m.0),
            band_0_95_um: result.band_at_least(0.95),
            points: result.points.len(),
            points_above_bound: result.count_above(BOUND),
            undefined_points: result.points.iter().filter(|p| p.v2_plus_d2().is_none()).count(),
            v_sup_diff_from_open: None,
            result,
        });
    }
    if let Some(open) = runs.iter().position(|r| r.aperture == "none") {
        let base = runs[open].result.visibilities();
        for r in runs.iter_mut() {
            let diffs: Vec<f64> = r
                .result
                .visibilities()
                .iter()
                .zip(&base)
                .filter_map(|(a, b)| Some((a.as_ref()? - b.as_ref()?).abs()))
                .collect();
            r.v_sup_diff_from_open = (!diffs.is_empty()).then(|| diffs.iter().copied().fold(0.0, f64::max));
        }
    }
    let report = VdReport {
        magnification: s.magnification(),
        cone_diameter: cone,
        model: format!("{:?}", s.config.detection.model).to_lowercase(),
        runs,
    };
    out.json("vd.json", &report)?;
    Ok(report)
}

fn tracing_note(label: &str, y: f64, issue: &str) {
    eprintln!("vd[{label}] y_i = {y} um: {issue}");
}

#[derive(Debug, Clone, Serialize)]
pub struct NearfieldReport {
    /// Near-field maxima within the double-slit span, slit-plane µm.
    pub near_peaks_um: Vec<f64>,
    pub near_span_um: f64,
    pub parity: String,
    pub fringe_phase: f64,
    pub fringe_visibility: Option<f64>,
    pub window_center: f64,
}

pub fn run_nearfield(s: &Scenario, out: &mut OutputDir) -> Result<NearfieldReport, RunError> {
    let grid = s.grid()?;
    let cone = s.cone_if_needed()?;
    let aperture = s.configured_aperture(cone)?;
    let chain = s.chain(aperture)?;
    let amplitude = build_1d_amplitude(grid, &s.pump, &s.crystal, s.mode)?;
    let singles = signal_singles_line(&amplitude, &chain)?;
    let slit = s.slit();
    let span = slit.outer_half_span();
    let inside: Vec<usize> =
        (0..singles.near.len()).filter(|&k| (singles.near_coords[k] - slit.offset_um).abs() <= span).collect();
    let profile: Vec<f64> = inside.iter().map(|&k| singles.near[k]).collect();
    let coords: Vec<f64> = inside.iter().map(|&k| singles.near_coords[k]).collect();
    let peaks = CutPeaks::find(&coords, &profile, s.config.ring.prominence);
    let settings = s.scan_settings(&aperture);
    let window = FringeWindow { ..settings.window };
    let fringe = FringePattern::new(singles.far_coords.clone(), singles.far.clone(), window)?;
    let (parity, fit) = fringe_parity(&fringe)?;
    let report = NearfieldReport {
        near_peaks_um: peaks.positions,
        near_span_um: span,
        parity: match parity {
            FringeParity::CentralMaximum => "central-maximum",
            FringeParity::CentralMinimum => "central-minimum",
        }
        .into(),
        fringe_phase: fit.phase,
        fringe_visibility: visibility(&fringe, settings.convention).ok(),
        window_center: window.center,
    };
    let rows: Vec<Vec<f64>> = singles.near_coords.iter().zip(&singles.near).map(|(y, v)| vec![*y, *v]).collect();
    out.csv("nearfield.csv", &[("plane", "slit plane, before the slit".into())], &["y_um", "intensity"], &rows)?;
    let rows: Vec<Vec<f64>> = singles.far_coords.iter().zip(&singles.far).map(|(q, v)| vec![*q, *v]).collect();
    out.csv("farfield.csv", &[("plane", "far field behind the slit".into())], &["q_y", "rate"], &rows)?;
    out.json("nearfield.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub ring_extent: (f64, f64),
    pub grid_ok: bool,
    pub magnification: f64,
    pub config: String,
}

/// Setup checks that need no heavy computation.
pub fn validate(s: &Scenario) -> Result<ValidateReport, RunError> {
    let grid = s.grid()?;
    s.map_grid(Arm::Signal)?;
    s.map_grid(Arm::Idler)?;
    s.slit().scaled(s.magnification()).check_resolution(&grid)?;
    let positions = s.config.scan_positions();
    let limit = grid.position_extent() * s.magnification();
    if let Some(y) = positions.iter().find(|y| y.abs() > limit) {
        return Err(
            twinslit_core::Error::Range(format!("scan position {y} um outside the grid (|y| <= {limit})")).into()
        );
    }
    Ok(ValidateReport {
        ring_extent: s.ring,
        grid_ok: true,
        magnification: s.magnification(),
        config: s.config.serialize(),
    })
}
