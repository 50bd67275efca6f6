//! Coincidence scans: the signal photon's fringe and slit rates conditioned
//! on the idler being detected at `y_i` in its near field.
//!
//! Two reductions of the transverse problem are available. `Line` keeps only
//! `q_sx = q_ix = 0`. `Sheet` sums `(q_sy, q_iy)` slices over `q_sx` and the
//! pump's `Q_x = q_sx + q_ix`: the idler integrates over `x_i`, slit rates
//! integrate over `x_s`, and the far-field fringe detector sits at one `q_sx`
//! column (`0` by default).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::biphoton::{BiphotonAmplitude1D, MomentumMask, SliceBuilder};
use crate::detection::{
    distinguishability, integrate_pixel, visibility, FringePattern, FringeWindow, VisibilityConvention,
};
use crate::dispersion::{CrystalSpec, KzMode};
use crate::grid::{GridSpec, Transform1D};
use crate::optical_chain::{DoubleSlitSpec, OpticalChain};
use crate::pump_modes::PumpMode;
use crate::{par, Error, Result, WaveVector};

/// Sampling of the x-resolved reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetSampling {
    pub qx_step: f64,
    pub qx_half_extent: f64,
    pub pump_samples: usize,
    pub pump_half_width_waists: f64,
    /// `q_sx` of the far-field fringe detector, rounded to the nearest
    /// sampled column.
    pub detector_qx: f64,
}

impl Default for SheetSampling {
    fn default() -> Self {
        Self { qx_step: 0.02, qx_half_extent: 0.56, pump_samples: 9, pump_half_width_waists: 4.0, detector_qx: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoincidenceModel {
    Line,
    Sheet(SheetSampling),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub window: FringeWindow,
    pub convention: VisibilityConvention,
    /// Far-field pixel width in grid cells (odd); 1 is a point detector.
    pub pixel_cells: usize,
    pub model: CoincidenceModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    /// Idler detector position in its detection plane, µm.
    pub y_i: f64,
    pub visibility: Option<f64>,
    pub distinguishability: Option<f64>,
    pub c_s1: f64,
    pub c_s2: f64,
    pub fringe: FringePattern,
    /// Why a value is missing, if one is.
    pub issue: Option<String>,
}

impl ScanPoint {
    pub fn v2_plus_d2(&self) -> Option<f64> {
        match (self.visibility, self.distinguishability) {
            (Some(v), Some(d)) => Some(v * v + d * d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
}

impl ScanResult {
    /// Position and value of the largest `V² + D²`.
    pub fn max_v2_plus_d2(&self) -> Option<(f64, f64)> {
        self.points.iter().filter_map(|p| p.v2_plus_d2().map(|s| (p.y_i, s))).fold(
            None,
            |best: Option<(f64, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            },
        )
    }

    /// Longest contiguous run of points with `V² + D² ≥ threshold`, as the
    /// first and last idler positions.
    pub fn band_at_least(&self, threshold: f64) -> Option<(f64, f64)> {
        let mut best: Option<(usize, usize)> = None;
        let mut start: Option<usize> = None;
        for (i, p) in self.points.iter().enumerate() {
            let inside = p.v2_plus_d2().is_some_and(|s| s >= threshold);
            match (inside, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    if best.is_none_or(|(a, b)| i - 1 - s > b - a) {
                        best = Some((s, i - 1));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            let e = self.points.len() - 1;
            if best.is_none_or(|(a, b)| e - s > b - a) {
                best = Some((s, e));
            }
        }
        best.map(|(a, b)| (self.points[a].y_i, self.points[b].y_i))
    }

    pub fn count_above(&self, bound: f64) -> usize {
        self.points.iter().filter(|p| p.v2_plus_d2().is_some_and(|s| s > bound)).count()
    }

    pub fn visibilities(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.visibility).collect()
    }
}

/// Per-position sums collected over slices.
#[derive(Debug, Clone)]
struct Accumulator {
    c1: Vec<f64>,
    c2: Vec<f64>,
    far: Vec<Vec<f64>>,
}

impl Accumulator {
    fn new(positions: usize, n: usize) -> Self {
        Self { c1: vec![0.0; positions], c2: vec![0.0; positions], far: vec![vec![0.0; n]; positions] }
    }

    fn add(&mut self, other: &Accumulator) {
        for (a, b) in self.c1.iter_mut().zip(&other.c1) {
            *a += b;
        }
        for (a, b) in self.c2.iter_mut().zip(&other.c2) {
            *a += b;
        }
        for (fa, fb) in self.far.iter_mut().zip(&other.far) {
            for (a, b) in fa.iter_mut().zip(fb) {
                *a += b;
            }
        }
    }
}

/// Shared per-scan data for pushing slices through the chain.
struct Propagator {
    grid: GridSpec,
    transform: Transform1D,
    /// `exp(i q_iy,k y_p) Δq`, k-major.
    phases: Vec<Complex64>,
    positions: usize,
    opening: Vec<Option<u8>>,
}

impl Propagator {
    fn new(grid: GridSpec, crystal_positions: &[f64], slit: DoubleSlitSpec) -> Result<Self> {
        slit.check_resolution(&grid)?;
        for &y in crystal_positions {
            if !(y.abs() <= grid.position_extent()) {
                return Err(Error::Range(format!(
                    "idler position {y} um (crystal plane) outside the grid (|y| <= {})",
                    grid.position_extent()
                )));
            }
        }
        let n = grid.n;
        let p = crystal_positions.len();
        let dq = grid.dq();
        let mut phases = Vec::with_capacity(n * p);
        for k in 0..n {
            for &y in crystal_positions {
                let t = grid.qy(k) * y;
                phases.push(Complex64::new(libm::cos(t), libm::sin(t)) * dq);
            }
        }
        let opening = (0..n).map(|k| slit.opening(grid.y(k))).collect();
        Ok(Self { grid, transform: Transform1D::new(&grid, grid.center.qy)?, phases, positions: p, opening })
    }

    fn accumulate(
        &self,
        phi: &[Complex64],
        signal: &[f64],
        idler: &[f64],
        weight: f64,
        far: bool,
        acc: &mut Accumulator,
    ) {
        let n = self.grid.n;
        let p = self.positions;
        let dy = self.grid.dy();
        let mut conditional = vec![Complex64::new(0.0, 0.0); n * p];
        let mut row = vec![Complex64::new(0.0, 0.0); p];
        for j in 0..n {
            if signal[j] == 0.0 {
                continue;
            }
            row.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for k in 0..n {
                let a = phi[j * n + k] * idler[k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (r, e) in row.iter_mut().zip(&self.phases[k * p..(k + 1) * p]) {
                    *r += a * e;
                }
            }
            for (pos, r) in row.iter().enumerate() {
                conditional[pos * n + j] = r * signal[j];
            }
        }
        for (pos, column) in conditional.chunks_mut(n).enumerate() {
            self.transform.to_position(column);
            let (mut c1, mut c2) = (0.0, 0.0);
            for (v, o) in column.iter_mut().zip(&self.opening) {
                match o {
                    Some(1) => c1 += v.norm_sqr(),
                    Some(_) => c2 += v.norm_sqr(),
                    None => *v = Complex64::new(0.0, 0.0),
                }
            }
            acc.c1[pos] += c1 * dy * weight;
            acc.c2[pos] += c2 * dy * weight;
            if far {
                self.transform.to_momentum(column);
                for (f, v) in acc.far[pos].iter_mut().zip(column.iter()) {
                    *f += v.norm_sqr() * weight;
                }
            }
        }
    }

    fn finish(&self, detector_positions: &[f64], acc: Accumulator, settings: &ScanSettings) -> Result<ScanResult> {
        let coords = self.grid.qy_axis();
        let mut points = Vec::with_capacity(detector_positions.len());
        for (pos, &y_i) in detector_positions.iter().enumerate() {
            let rates = integrate_pixel(&acc.far[pos], settings.pixel_cells)?;
            let fringe = FringePattern::new(coords.clone(), rates, settings.window)?;
            let mut issues = Vec::new();
            let v = visibility(&fringe, settings.convention).map_err(|e| issues.push(format!("{e}"))).ok();
            let d = distinguishability(acc.c1[pos], acc.c2[pos]).map_err(|e| issues.push(format!("{e}"))).ok();
            points.push(ScanPoint {
                y_i,
                visibility: v,
                distinguishability: d,
                c_s1: acc.c1[pos],
                c_s2: acc.c2[pos],
                fringe,
                issue: if issues.is_empty() { None } else { Some(issues.join("; ")) },
            });
        }
        Ok(ScanResult { points })
    }
}

fn crystal_positions(positions: &[f64], magnification: f64) -> Vec<f64> {
    positions.iter().map(|y| y / magnification).collect()
}

/// Scan on a prebuilt y-only amplitude. Masks apply at `q_x = 0`.
pub fn vd_scan_line(
    positions: &[f64],
    chain: &OpticalChain,
    amplitude: &BiphotonAmplitude1D,
    settings: &ScanSettings,
) -> Result<ScanResult> {
    let grid = amplitude.grid;
    let prop = Propagator::new(grid, &crystal_positions(positions, chain.magnification), chain.crystal_slit())?;
    let signal = chain.signal_aperture.row(&grid, 0.0);
    let idler = chain.idler_aperture.row(&grid, 0.0);
    let mut acc = Accumulator::new(positions.len(), grid.n);
    prop.accumulate(&amplitude.data, &signal, &idler, 1.0, true, &mut acc);
    prop.finish(positions, acc, settings)
}

/// V, D and rates at each idler position (detection-plane µm).
#[allow(clippy::too_many_arguments)]
pub fn vd_scan(
    positions: &[f64],
    chain: &OpticalChain,
    grid: GridSpec,
    pump: &PumpMode,
    crystal: &CrystalSpec,
    mode: KzMode,
    settings: &ScanSettings,
) -> Result<ScanResult> {
    match settings.model {
        CoincidenceModel::Line => {
            let amplitude = crate::biphoton::build_1d_amplitude(grid, pump, crystal, mode)?;
            vd_scan_line(positions, chain, &amplitude, settings)
        }
        CoincidenceModel::Sheet(sampling) => {
            vd_scan_sheet(positions, chain, grid, pump, crystal, mode, settings, sampling)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn vd_scan_sheet(
    positions: &[f64],
    chain: &OpticalChain,
    grid: GridSpec,
    pump: &PumpMode,
    crystal: &CrystalSpec,
    mode: KzMode,
    settings: &ScanSettings,
    sampling: SheetSampling,
) -> Result<ScanResult> {
    if !(sampling.qx_step > 0.0 && sampling.qx_half_extent >= 0.0 && sampling.pump_half_width_waists > 0.0) {
        return Err(Error::Config("sheet sampling needs positive step and extents".into()));
    }
    if sampling.pump_samples == 0 {
        return Err(Error::Config("sheet sampling needs at least one pump sample".into()));
    }
    let builder = SliceBuilder::new(grid, pump, crystal, mode)?;
    let prop = Propagator::new(grid, &crystal_positions(positions, chain.magnification), chain.crystal_slit())?;
    let half = libm::floor(sampling.qx_half_extent / sampling.qx_step + 1e-9) as i64;
    let signal_qx: Vec<f64> = (-half..=half).map(|k| k as f64 * sampling.qx_step).collect();
    let detector = libm::round(sampling.detector_qx / sampling.qx_step) as i64;
    if detector.abs() > half {
        return Err(Error::Config(format!(
            "detector q_x {} outside the sampled range |q_sx| <= {}",
            sampling.detector_qx, sampling.qx_half_extent
        )));
    }
    let pump_qx: Vec<f64> = if sampling.pump_samples == 1 {
        vec![0.0]
    } else {
        let span = sampling.pump_half_width_waists / pump.waist_um;
        let step = 2.0 * span / (sampling.pump_samples - 1) as f64;
        (0..sampling.pump_samples).map(|i| -span + i as f64 * step).collect()
    };
    let pump_step = if pump_qx.len() > 1 { pump_qx[1] - pump_qx[0] } else { 1.0 };
    let weight = sampling.qx_step * pump_step;
    let n = grid.n;
    let partial = par::map_range(signal_qx.len(), |s| -> Result<Option<Accumulator>> {
        let q_sx = signal_qx[s];
        let signal = chain.signal_aperture.row(&grid, q_sx);
        if signal.iter().all(|t| *t == 0.0) {
            return Ok(None);
        }
        let mut acc = Accumulator::new(positions.len(), n);
        let far = s as i64 == half + detector;
        let mut touched = false;
        for &q_px in &pump_qx {
            let q_ix = q_px - q_sx;
            let idler: Vec<f64> =
                (0..n).map(|k| chain.idler_aperture.transmission(WaveVector::new(q_ix, grid.qy(k)))).collect();
            if idler.iter().all(|t| *t == 0.0) {
                continue;
            }
            let phi = builder.slice(q_sx, q_ix)?;
            prop.accumulate(&phi, &signal, &idler, weight, far, &mut acc);
            touched = true;
        }
        Ok(touched.then_some(acc))
    });
    let mut total = Accumulator::new(positions.len(), n);
    for part in partial {
        if let Some(acc) = part? {
            total.add(&acc);
        }
    }
    prop.finish(positions, total, settings)
}

/// Far-field fringe of the signal conditioned on one idler position.
#[allow(clippy::too_many_arguments)]
pub fn coincidence_fringe(
    y_i: f64,
    chain: &OpticalChain,
    grid: GridSpec,
    pump: &PumpMode,
    crystal: &CrystalSpec,
    mode: KzMode,
    settings: &ScanSettings,
) -> Result<FringePattern> {
    let scan = vd_scan(&[y_i], chain, grid, pump, crystal, mode, settings)?;
    Ok(scan.points.into_iter().next().map(|p| p.fringe).expect("one position in, one point out"))
}

/// `(C_S1, C_S2)` for one idler position.
#[allow(clippy::too_many_arguments)]
pub fn slit_coincidences(
    y_i: f64,
    chain: &OpticalChain,
    grid: GridSpec,
    pump: &PumpMode,
    crystal: &CrystalSpec,
    mode: KzMode,
    settings: &ScanSettings,
) -> Result<(f64, f64)> {
    let scan = vd_scan(&[y_i], chain, grid, pump, crystal, mode, settings)?;
    let p = &scan.points[0];
    Ok((p.c_s1, p.c_s2))
}

/// Signal singles (idler traced out) on the slit plane and in the far
/// field behind the double slit, y-only model.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSingles {
    /// Slit-plane coordinates, µm.
    pub near_coords: Vec<f64>,
    /// Intensity arriving at the slit plane, before the slit.
    pub near: Vec<f64>,
    pub far_coords: Vec<f64>,
    pub far: Vec<f64>,
}

pub fn signal_singles_line(amplitude: &BiphotonAmplitude1D, chain: &OpticalChain) -> Result<ChainSingles> {
    let grid = amplitude.grid;
    let n = grid.n;
    let slit = chain.crystal_slit();
    slit.check_resolution(&grid)?;
    let transform = Transform1D::new(&grid, grid.center.qy)?;
    let signal = chain.signal_aperture.row(&grid, 0.0);
    let idler = chain.idler_aperture.row(&grid, 0.0);
    let transmission: Vec<f64> = (0..n).map(|k| slit.transmission(grid.y(k))).collect();
    let mut near = vec![0.0; n];
    let mut far = vec![0.0; n];
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    let dq = grid.dq();
    for k in 0..n {
        if idler[k] == 0.0 {
            continue;
        }
        for j in 0..n {
            column[j] = amplitude.at(j, k) * (signal[j] * idler[k]);
        }
        transform.to_position(&mut column);
        for ((acc, v), t) in near.iter_mut().zip(column.iter_mut()).zip(&transmission) {
            *acc += v.norm_sqr() * dq;
            *v *= *t;
        }
        transform.to_momentum(&mut column);
        for (acc, v) in far.iter_mut().zip(&column) {
            *acc += v.norm_sqr() * dq;
        }
    }
    Ok(ChainSingles {
        near_coords: (0..n).map(|k| grid.y(k) * chain.magnification).collect(),
        near,
        far_coords: grid.qy_axis(),
        far,
    })
}
