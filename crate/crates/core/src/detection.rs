//! Fringe patterns, visibility and distinguishability.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::biphoton::BiphotonAmplitude1D;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorPlane {
    Near,
    Far,
}

/// How `R_max` and `R_min` are read off a fringe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VisibilityConvention {
    /// Least-squares fit of one fringe harmonic over the window; `R_max` and
    /// `R_min` are the fitted sinusoid's extrema (`R_min` floored at zero).
    #[default]
    Harmonic,
    /// Global maximum in the window and the lower of its two adjacent local
    /// minima.
    AdjacentExtrema,
}

/// Region of the far-field pattern used for visibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeWindow {
    pub center: f64,
    pub half_width: f64,
    /// Fringe period, `2π / d` for slit separation `d` on the same plane.
    pub period: f64,
}

impl FringeWindow {
    /// Window of `periods` fringe periods either side of `center`.
    pub fn around(center: f64, separation: f64, periods: f64) -> Self {
        let period = 2.0 * PI / separation;
        Self { center, half_width: periods * period, period }
    }

    pub fn contains(&self, q: f64) -> bool {
        (q - self.center).abs() <= self.half_width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringePattern {
    pub coords: Vec<f64>,
    pub rates: Vec<f64>,
    pub window: FringeWindow,
}

impl FringePattern {
    pub fn new(coords: Vec<f64>, rates: Vec<f64>, window: FringeWindow) -> Result<Self> {
        if coords.len() != rates.len() {
            return Err(Error::Config("fringe coordinates and rates differ in length".into()));
        }
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Detection("fringe rates must be finite and non-negative".into()));
        }
        Ok(Self { coords, rates, window })
    }

    fn windowed(&self) -> (Vec<f64>, Vec<f64>) {
        self.coords.iter().zip(&self.rates).filter(|(q, _)| self.window.contains(**q)).map(|(q, r)| (*q, *r)).unzip()
    }

    fn check_resolution(&self, qs: &[f64]) -> Result<()> {
        let span = match (qs.first(), qs.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        };
        if span < self.window.period {
            return Err(Error::FringeResolution(format!(
                "window spans {span} rad/um, less than one fringe period {}",
                self.window.period
            )));
        }
        let per_period = qs.len() as f64 * self.window.period / span.max(f64::MIN_POSITIVE);
        if per_period < 4.0 {
            return Err(Error::FringeResolution(format!("{per_period:.1} samples per fringe period")));
        }
        Ok(())
    }
}

/// `c0 + amplitude · cos(ω (q − origin) + phase)` fitted by least squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicFit {
    pub mean: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub origin: f64,
}

fn fit_harmonic(qs: &[f64], rates: &[f64], omega: f64, origin: f64) -> Result<HarmonicFit> {
    let mut m = [[0.0f64; 3]; 3];
    let mut v = [0.0f64; 3];
    for (q, r) in qs.iter().zip(rates) {
        let t = omega * (q - origin);
        let basis = [1.0, libm::cos(t), libm::sin(t)];
        for a in 0..3 {
            v[a] += basis[a] * r;
            for b in 0..3 {
                m[a][b] += basis[a] * basis[b];
            }
        }
    }
    let [c0, c1, s1] = solve3(m, v).ok_or_else(|| Error::FringeResolution("singular harmonic fit".into()))?;
    Ok(HarmonicFit { mean: c0, amplitude: libm::sqrt(c1 * c1 + s1 * s1), phase: libm::atan2(-s1, c1), origin })
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - tail) / m[row][row];
    }
    Some(x)
}

/// Harmonic fit about the rate-weighted centroid of the window.
pub fn fit_fringe(f: &FringePattern) -> Result<HarmonicFit> {
    let (qs, rs) = f.windowed();
    f.check_resolution(&qs)?;
    let total: f64 = rs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::FringeResolution("no counts inside the window".into()));
    }
    let centroid = qs.iter().zip(&rs).map(|(q, r)| q * r).sum::<f64>() / total;
    fit_harmonic(&qs, &rs, 2.0 * PI / f.window.period, centroid)
}

/// `V = (R_max − R_min) / (R_max + R_min)`.
pub fn visibility(f: &FringePattern, convention: VisibilityConvention) -> Result<f64> {
    let (qs, rs) = f.windowed();
    f.check_resolution(&qs)?;
    let (r_max, r_min) = match convention {
        VisibilityConvention::Harmonic => {
            let fit = fit_harmonic(&qs, &rs, 2.0 * PI / f.window.period, f.window.center)?;
            if !(fit.mean > 0.0) {
                return Err(Error::FringeResolution("fitted mean rate is not positive".into()));
            }
            (fit.mean + fit.amplitude, (fit.mean - fit.amplitude).max(0.0))
        }
        VisibilityConvention::AdjacentExtrema => adjacent_extrema(&rs)?,
    };
    if r_max + r_min <= 0.0 {
        return Err(Error::FringeResolution("no counts inside the window".into()));
    }
    Ok((r_max - r_min) / (r_max + r_min))
}

fn adjacent_extrema(rs: &[f64]) -> Result<(f64, f64)> {
    let (imax, rmax) =
        rs.iter().copied().enumerate().fold((0, f64::MIN), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    if rs.iter().all(|r| *r == rmax) {
        return Ok((rmax, rmax));
    }
    let mut left = imax;
    while left > 0 && rs[left - 1] <= rs[left] {
        left -= 1;
    }
    let mut right = imax;
    while right + 1 < rs.len() && rs[right + 1] <= rs[right] {
        right += 1;
    }
    let left_ok = left > 0;
    let right_ok = right + 1 < rs.len();
    let r_min = match (left_ok, right_ok) {
        (true, true) => rs[left].min(rs[right]),
        (true, false) => rs[left],
        (false, true) => rs[right],
        (false, false) => {
            return Err(Error::FringeResolution("no interior minimum next to the fringe maximum".into()));
        }
    };
    Ok((rmax, r_min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FringeParity {
    /// Bright fringe at the envelope center.
    CentralMaximum,
    /// Dark fringe at the envelope center.
    CentralMinimum,
}

pub fn fringe_parity(f: &FringePattern) -> Result<(FringeParity, HarmonicFit)> {
    let fit = fit_fringe(f)?;
    let parity = if libm::cos(fit.phase) >= 0.0 { FringeParity::CentralMaximum } else { FringeParity::CentralMinimum };
    Ok((parity, fit))
}

/// `D = (C_S1 − C_S2) / (C_S1 + C_S2)`.
pub fn distinguishability(c_s1: f64, c_s2: f64) -> Result<f64> {
    if !(c_s1 >= 0.0 && c_s2 >= 0.0) {
        return Err(Error::Detection(format!("negative or invalid coincidence rates ({c_s1}, {c_s2})")));
    }
    let total = c_s1 + c_s2;
    if !(total > 0.0) {
        return Err(Error::UndefinedDistinguishability);
    }
    Ok((c_s1 - c_s2) / total)
}

/// Signal distribution over `q_sy` with the idler restricted to `band`.
pub fn tomographic_cut(band: (f64, f64), amplitude: &BiphotonAmplitude1D) -> Result<Vec<f64>> {
    let g = &amplitude.grid;
    let n = g.n;
    let members: Vec<usize> = (0..n).filter(|&k| g.qy(k) >= band.0 && g.qy(k) <= band.1).collect();
    if members.is_empty() {
        return Err(Error::Range(format!("band [{}, {}] contains no grid samples", band.0, band.1)));
    }
    let dq = g.dq();
    Ok((0..n).map(|j| members.iter().map(|&k| amplitude.at(j, k).norm_sqr()).sum::<f64>() * dq).collect())
}

/// Box-integrate a sampled pattern over a pixel `width_cells` samples wide.
pub fn integrate_pixel(rates: &[f64], width_cells: usize) -> Result<Vec<f64>> {
    if width_cells == 0 || width_cells.is_multiple_of(2) {
        return Err(Error::Config(format!("pixel width must be an odd number of cells, got {width_cells}")));
    }
    let h = width_cells / 2;
    let n = rates.len();
    Ok((0..n).map(|j| rates[j.saturating_sub(h)..(j + h + 1).min(n)].iter().sum()).collect())
}
