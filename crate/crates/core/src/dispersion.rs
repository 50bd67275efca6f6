//! Uniaxial-crystal dispersion and the longitudinal phase mismatch of
//! type-II down-conversion.
//!
//! Geometry: the optical axis lies in the y-z plane, tilted by `θ_axis`
//! from z towards -y, i.e. along `(0, -sin θ_axis, cos θ_axis)`. The pump is
//! extraordinary; signal and idler take one polarization each.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result, WaveVector};

/// Literature source of the built-in BBO coefficients.
pub const BBO_SOURCE: &str = "BBO, Eimerl et al., J. Appl. Phys. 62, 1968 (1987)";

const KZ_MAX_ITERATIONS: usize = 50;
const KZ_REL_TOLERANCE: f64 = 1e-12;

/// `n²(λ) = A + B / (λ² − C) − D λ²`, λ in µm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellmeierSet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub min_um: f64,
    pub max_um: f64,
}

impl SellmeierSet {
    pub fn new(coefficients: [f64; 4], range_um: (f64, f64)) -> Result<Self> {
        let [a, b, c, d] = coefficients;
        let (min_um, max_um) = range_um;
        if !(min_um > 0.0 && max_um > min_um) || coefficients.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "Sellmeier set needs finite coefficients and 0 < min < max, got {coefficients:?} on [{min_um}, {max_um}]"
            )));
        }
        if c >= min_um * min_um && c <= max_um * max_um {
            return Err(Error::Config(format!("Sellmeier pole at λ² = {c} lies inside the validity range")));
        }
        let set = Self { a, b, c, d, min_um, max_um };
        let samples = 512;
        for i in 0..=samples {
            let l = min_um + (max_um - min_um) * i as f64 / samples as f64;
            if set.eval(l) <= 1.0 {
                return Err(Error::Config(format!("Sellmeier set gives n² <= 1 at λ = {l} um")));
            }
        }
        Ok(set)
    }

    pub fn bbo_ordinary() -> Self {
        Self { a: 2.7359, b: 0.01878, c: 0.01822, d: 0.01354, min_um: 0.22, max_um: 1.06 }
    }

    pub fn bbo_extraordinary() -> Self {
        Self { a: 2.3753, b: 0.01224, c: 0.01667, d: 0.01516, min_um: 0.22, max_um: 1.06 }
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn n_squared(&self, wavelength_um: f64) -> Result<f64> {
        if !(wavelength_um >= self.min_um && wavelength_um <= self.max_um) {
            return Err(Error::WavelengthOutOfRange { wavelength_um, min_um: self.min_um, max_um: self.max_um });
        }
        Ok(self.eval(wavelength_um))
    }

    fn eval(&self, l: f64) -> f64 {
        let l2 = l * l;
        self.a + self.b / (l2 - self.c) - self.d * l2
    }
}

pub fn index_ordinary(set: &SellmeierSet, wavelength_um: f64) -> Result<f64> {
    Ok(libm::sqrt(set.n_squared(wavelength_um)?))
}

/// Index of an extraordinary wave travelling at angle `theta` to the optical axis.
pub fn index_extraordinary(set_o: &SellmeierSet, set_e: &SellmeierSet, wavelength_um: f64, theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Range(format!("angle {theta} rad outside [0, pi]")));
    }
    let no2 = set_o.n_squared(wavelength_um)?;
    let ne2 = set_e.n_squared(wavelength_um)?;
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    Ok(1.0 / libm::sqrt(c * c / no2 + s * s / ne2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    Ordinary,
    Extraordinary,
}

impl Polarization {
    pub fn orthogonal(self) -> Self {
        match self {
            Polarization::Ordinary => Polarization::Extraordinary,
            Polarization::Extraordinary => Polarization::Ordinary,
        }
    }
}

/// How extraordinary `k_z` is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KzMode {
    /// Fixed-point iteration on the angle-dependent index.
    #[default]
    Exact,
    /// Walk-off-linear, diffraction-quadratic expansion about the z axis.
    Paraxial,
}

/// One of the three fields of the down-conversion process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Pump,
    Signal,
    Idler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    pub length_um: f64,
    pub axis_angle: f64,
    pub pump_wavelength_um: f64,
    pub signal_wavelength_um: f64,
    pub idler_wavelength_um: f64,
    pub ordinary: SellmeierSet,
    pub extraordinary: SellmeierSet,
    pub signal_polarization: Polarization,
}

impl Default for CrystalSpec {
    fn default() -> Self {
        Self {
            length_um: 2000.0,
            axis_angle: 41.9f64.to_radians(),
            pump_wavelength_um: 0.405,
            signal_wavelength_um: 0.810,
            idler_wavelength_um: 0.810,
            ordinary: SellmeierSet::bbo_ordinary(),
            extraordinary: SellmeierSet::bbo_extraordinary(),
            signal_polarization: Polarization::Ordinary,
        }
    }
}

impl CrystalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_um > 0.0) {
            return Err(Error::Config(format!("crystal length must be > 0, got {}", self.length_um)));
        }
        let (p, s, i) = (self.pump_wavelength_um, self.signal_wavelength_um, self.idler_wavelength_um);
        if !(p > 0.0 && s > 0.0 && i > 0.0) {
            return Err(Error::Config("wavelengths must be > 0".into()));
        }
        let mismatch = (1.0 / p - 1.0 / s - 1.0 / i).abs() * p;
        if mismatch > 1e-12 {
            return Err(Error::Config(format!(
                "energy conservation violated: 1/λp - 1/λs - 1/λi = {} (relative)",
                mismatch
            )));
        }
        if !(0.0..=PI).contains(&self.axis_angle) {
            return Err(Error::Config(format!("axis angle {} rad outside [0, pi]", self.axis_angle)));
        }
        for l in [p, s, i] {
            self.ordinary.n_squared(l)?;
            self.extraordinary.n_squared(l)?;
        }
        Ok(())
    }

    pub fn with_axis_angle(&self, axis_angle: f64) -> Self {
        Self { axis_angle, ..self.clone() }
    }

    pub fn polarization(&self, wave: Wave) -> Polarization {
        match wave {
            Wave::Pump => Polarization::Extraordinary,
            Wave::Signal => self.signal_polarization,
            Wave::Idler => self.signal_polarization.orthogonal(),
        }
    }

    pub fn wavelength(&self, wave: Wave) -> f64 {
        match wave {
            Wave::Pump => self.pump_wavelength_um,
            Wave::Signal => self.signal_wavelength_um,
            Wave::Idler => self.idler_wavelength_um,
        }
    }

    /// Precomputed dispersion data for repeated `k_z` evaluation.
    pub fn photon(&self, wave: Wave) -> Result<Photon> {
        Photon::new(self, self.wavelength(wave), self.polarization(wave))
    }

    pub fn photons(&self) -> Result<Photons> {
        Ok(Photons {
            pump: self.photon(Wave::Pump)?,
            signal: self.photon(Wave::Signal)?,
            idler: self.photon(Wave::Idler)?,
            half_length: 0.5 * self.length_um,
        })
    }
}

/// Vacuum wavenumber, principal inverse squared indices and axis direction
/// for one wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Photon {
    pub k0: f64,
    pub inv_no2: f64,
    pub inv_ne2: f64,
    pub polarization: Polarization,
    axis_y: f64,
    axis_z: f64,
}

impl Photon {
    pub fn new(crystal: &CrystalSpec, wavelength_um: f64, polarization: Polarization) -> Result<Self> {
        let no2 = crystal.ordinary.n_squared(wavelength_um)?;
        let ne2 = crystal.extraordinary.n_squared(wavelength_um)?;
        Ok(Self {
            k0: 2.0 * PI / wavelength_um,
            inv_no2: 1.0 / no2,
            inv_ne2: 1.0 / ne2,
            polarization,
            axis_y: -libm::sin(crystal.axis_angle),
            axis_z: libm::cos(crystal.axis_angle),
        })
    }

    fn k_ordinary(&self) -> f64 {
        self.k0 / libm::sqrt(self.inv_no2)
    }

    /// Wavenumber of an extraordinary wave along direction `(q, k_z)`.
    pub fn k_extraordinary(&self, q: WaveVector, kz: f64) -> f64 {
        let k2 = q.norm_sqr() + kz * kz;
        let proj = q.qy * self.axis_y + kz * self.axis_z;
        let cos2 = proj * proj / k2;
        self.k0 / libm::sqrt(cos2 * self.inv_no2 + (1.0 - cos2) * self.inv_ne2)
    }

    pub fn kz(&self, q: WaveVector, mode: KzMode) -> Result<f64> {
        let q2 = q.norm_sqr();
        let ko = self.k_ordinary();
        match self.polarization {
            Polarization::Ordinary => {
                if q2 >= ko * ko {
                    return Err(Error::Evanescent { q: libm::sqrt(q2), k: ko });
                }
                Ok(libm::sqrt(ko * ko - q2))
            }
            Polarization::Extraordinary => match mode {
                KzMode::Exact => self.kz_fixed_point(q, q2, ko),
                KzMode::Paraxial => self.kz_paraxial(q, q2),
            },
        }
    }

    fn kz_fixed_point(&self, q: WaveVector, q2: f64, ko: f64) -> Result<f64> {
        if q2 >= ko * ko {
            return Err(Error::Evanescent { q: libm::sqrt(q2), k: ko });
        }
        let mut kz = libm::sqrt(ko * ko - q2);
        for _ in 0..KZ_MAX_ITERATIONS {
            let k = self.k_extraordinary(q, kz);
            if q2 >= k * k {
                return Err(Error::Evanescent { q: libm::sqrt(q2), k });
            }
            let next = libm::sqrt(k * k - q2);
            let done = (next - kz).abs() <= KZ_REL_TOLERANCE * next;
            kz = next;
            if done {
                return Ok(kz);
            }
        }
        Err(Error::NoConvergence { iterations: KZ_MAX_ITERATIONS })
    }

    fn kz_paraxial(&self, q: WaveVector, q2: f64) -> Result<f64> {
        let (a, b) = (self.inv_no2, self.inv_ne2);
        let (cy, cz) = (self.axis_y, self.axis_z);
        let denom = (a - b) * cz * cz + b;
        let k_axis = self.k0 / libm::sqrt(denom);
        if q2 >= k_axis * k_axis {
            return Err(Error::Evanescent { q: libm::sqrt(q2), k: k_axis });
        }
        let walkoff = -(a - b) * cy * cz / denom;
        Ok(k_axis + walkoff * q.qy - q2 / (2.0 * k_axis))
    }
}

/// The three waves of one crystal, ready for phase-mismatch evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Photons {
    pub pump: Photon,
    pub signal: Photon,
    pub idler: Photon,
    pub half_length: f64,
}

impl Photons {
    pub fn delta_kz(&self, qs: WaveVector, qi: WaveVector, mode: KzMode) -> Result<f64> {
        Ok(self.pump.kz(qs + qi, mode)? - self.signal.kz(qs, mode)? - self.idler.kz(qi, mode)?)
    }

    pub fn amplitude(&self, qs: WaveVector, qi: WaveVector, mode: KzMode) -> Result<f64> {
        Ok(sinc(self.delta_kz(qs, qi, mode)? * self.half_length))
    }
}

/// `k_z` of a single wave, rad/µm.
pub fn kz(
    q: WaveVector,
    wavelength_um: f64,
    polarization: Polarization,
    crystal: &CrystalSpec,
    mode: KzMode,
) -> Result<f64> {
    Photon::new(crystal, wavelength_um, polarization)?.kz(q, mode)
}

/// `Δk_z = k_z,p(q_s + q_i) − k_z,s(q_s) − k_z,i(q_i)`.
pub fn delta_kz(qs: WaveVector, qi: WaveVector, crystal: &CrystalSpec, mode: KzMode) -> Result<f64> {
    crystal.photons()?.delta_kz(qs, qi, mode)
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        libm::sin(x) / x
    }
}

/// `sinc(Δk_z L / 2)`.
pub fn phase_match_amplitude(qs: WaveVector, qi: WaveVector, crystal: &CrystalSpec, mode: KzMode) -> Result<f64> {
    crystal.photons()?.amplitude(qs, qi, mode)
}

/// Axis tilt at which collinear (`q_s = q_i = 0`) emission is phase matched.
pub fn collinear_phase_match_angle(crystal: &CrystalSpec, mode: KzMode) -> Result<f64> {
    let f = |theta: f64| delta_kz(WaveVector::ZERO, WaveVector::ZERO, &crystal.with_axis_angle(theta), mode);
    let (mut lo, mut hi) = (0.0, 0.5 * PI);
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::NoPhaseMatching);
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sampling window for [`phase_match_curves`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveWindow {
    pub q_sy: (f64, f64),
    pub q_iy: (f64, f64),
    pub samples: usize,
}

/// Ordered `(q_sy, q_iy)` vertices of one branch of the zero set.
pub type Polyline = Vec<(f64, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeKey {
    /// Between `(i, j)` and `(i + 1, j)`.
    AlongS(usize, usize),
    /// Between `(i, j)` and `(i, j + 1)`.
    AlongI(usize, usize),
}

/// Zero set of `Δk_z` in the `(q_sy, q_iy)` plane at `q_sx = q_ix = 0`.
///
/// Sign changes are located on a dense grid, linked cell by cell into
/// polylines, and every vertex is refined by bisection along its grid edge.
/// Saddle cells emit both branch pairings' segments so touching branches are
/// not merged silently.
pub fn phase_match_curves(window: CurveWindow, crystal: &CrystalSpec, mode: KzMode) -> Result<Vec<Polyline>> {
    let m = window.samples;
    if m < 3 {
        return Err(Error::Config("curve window needs at least 3 samples per axis".into()));
    }
    let photons = crystal.photons()?;
    let s_at = |i: usize| window.q_sy.0 + (window.q_sy.1 - window.q_sy.0) * i as f64 / (m - 1) as f64;
    let i_at = |j: usize| window.q_iy.0 + (window.q_iy.1 - window.q_iy.0) * j as f64 / (m - 1) as f64;
    let eval = |s: f64, i: f64| photons.delta_kz(WaveVector::new(0.0, s), WaveVector::new(0.0, i), mode);

    let mut f = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            f.push(eval(s_at(i), i_at(j))?);
        }
    }
    let pos = |i: usize, j: usize| f[i * m + j] >= 0.0;

    let mut links: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
    let mut connect = |a: EdgeKey, b: EdgeKey| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };
    for i in 0..m - 1 {
        for j in 0..m - 1 {
            let (p00, p10, p11, p01) = (pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1));
            let bottom = EdgeKey::AlongS(i, j);
            let right = EdgeKey::AlongI(i + 1, j);
            let top = EdgeKey::AlongS(i, j + 1);
            let left = EdgeKey::AlongI(i, j);
            let mut crossed = Vec::with_capacity(4);
            if p00 != p10 {
                crossed.push(bottom);
            }
            if p10 != p11 {
                crossed.push(right);
            }
            if p11 != p01 {
                crossed.push(top);
            }
            if p01 != p00 {
                crossed.push(left);
            }
            match crossed.len() {
                2 => connect(crossed[0], crossed[1]),
                4 => {
                    let centre = 0.25 * (f[i * m + j] + f[(i + 1) * m + j] + f[(i + 1) * m + j + 1] + f[i * m + j + 1]);
                    if (centre >= 0.0) == p00 {
                        connect(bottom, right);
                        connect(top, left);
                    } else {
                        connect(bottom, left);
                        connect(top, right);
                    }
                }
                _ => {}
            }
        }
    }
    if links.is_empty() {
        return Err(Error::NoPhaseMatching);
    }

    let refine = |edge: EdgeKey| -> Result<(f64, f64)> {
        let (a, b) = match edge {
            EdgeKey::AlongS(i, j) => ((s_at(i), i_at(j)), (s_at(i + 1), i_at(j))),
            EdgeKey::AlongI(i, j) => ((s_at(i), i_at(j)), (s_at(i), i_at(j + 1))),
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let point = |t: f64| (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
        let flo_sign = eval(a.0, a.1)? >= 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (s, i) = point(mid);
            if (eval(s, i)? >= 0.0) == flo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(point(0.5 * (lo + hi)))
    };

    let mut visited: BTreeMap<EdgeKey, ()> = BTreeMap::new();
    let mut chains: Vec<Vec<EdgeKey>> = Vec::new();
    let mut starts: Vec<EdgeKey> = links.iter().filter(|(_, n)| n.len() == 1).map(|(k, _)| *k).collect();
    starts.extend(links.keys().copied());
    for start in starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut chain = alloc::vec![start];
        visited.insert(start, ());
        let mut current = start;
        loop {
            let next = links[&current].iter().copied().find(|n| !visited.contains_key(n));
            match next {
                Some(n) => {
                    visited.insert(n, ());
                    chain.push(n);
                    current = n;
                }
                None => break,
            }
        }
        if links[&start].len() == 2 && chain.len() > 2 && links[&current].contains(&start) {
            chain.push(start);
        }
        chains.push(chain);
    }

    chains.into_iter().map(|chain| chain.into_iter().map(refine).collect::<Result<Polyline>>()).collect()
}

/// Crossing of a phase-matching polyline with a pump line `q_sy + q_iy = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineCrossing {
    pub q_sy: f64,
    pub q_iy: f64,
    pub offset: f64,
    /// `dq_iy / dq_sy` of the polyline segment at the crossing.
    pub slope: f64,
}

pub fn pump_line_crossings(curves: &[Polyline], offsets: &[f64]) -> Vec<LineCrossing> {
    let mut out = Vec::new();
    for curve in curves {
        for pair in curve.windows(2) {
            let ((s0, i0), (s1, i1)) = (pair[0], pair[1]);
            for &offset in offsets {
                let g0 = s0 + i0 - offset;
                let g1 = s1 + i1 - offset;
                if g0 == 0.0 || g0.signum() != g1.signum() {
                    let t = if g0 == g1 { 0.0 } else { g0 / (g0 - g1) };
                    out.push(LineCrossing {
                        q_sy: s0 + (s1 - s0) * t,
                        q_iy: i0 + (i1 - i0) * t,
                        offset,
                        slope: (i1 - i0) / (s1 - s0),
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| a.q_sy.total_cmp(&b.q_sy));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_limits() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-12);
        assert!((sinc(1e-5) - libm::sin(1e-5) / 1e-5).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_wavelength_is_an_error() {
        let set = SellmeierSet::bbo_ordinary();
        assert!(matches!(index_ordinary(&set, 1.5), Err(Error::WavelengthOutOfRange { .. })));
    }

    #[test]
    fn bad_energy_balance_rejected() {
        let c = CrystalSpec { idler_wavelength_um: 0.8, ..CrystalSpec::default() };
        assert!(c.validate().is_err());
        assert!(CrystalSpec::default().validate().is_ok());
    }

    #[test]
    fn evanescent_input_rejected() {
        let c = CrystalSpec::default();
        let q = WaveVector::new(0.0, 20.0);
        assert!(matches!(kz(q, 0.81, Polarization::Extraordinary, &c, KzMode::Exact), Err(Error::Evanescent { .. })));
        assert!(matches!(kz(q, 0.81, Polarization::Ordinary, &c, KzMode::Exact), Err(Error::Evanescent { .. })));
    }
}
