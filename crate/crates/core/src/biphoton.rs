//! Joint two-photon amplitude `Φ(q_s, q_i) = ũ(q_s + q_i) · sinc(Δk_z L/2)`
//! and its reductions: singles maps, conditional amplitudes, y-y slices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::dispersion::{sinc, CrystalSpec, KzMode, Photon, Photons};
use crate::grid::{ComplexField2D, Domain, Field1D, GridSpec};
use crate::pump_modes::{mode_momentum, PumpMode};
use crate::{par, Arm, Error, Result, WaveVector};

/// Transmission of a far-field (momentum-plane) element.
pub trait MomentumMask: Sync {
    fn transmission(&self, q: WaveVector) -> f64;
}

/// Fully open aperture.
#[derive(Debug, Clone, Copy, Default)]
pub struct Open;

impl MomentumMask for Open {
    fn transmission(&self, _q: WaveVector) -> f64 {
        1.0
    }
}

/// Adapter for ad-hoc masks.
pub struct MaskFn<F>(pub F);

impl<F: Fn(WaveVector) -> f64 + Sync> MomentumMask for MaskFn<F> {
    fn transmission(&self, q: WaveVector) -> f64 {
        (self.0)(q)
    }
}

pub fn phi(qs: WaveVector, qi: WaveVector, pump: &PumpMode, crystal: &CrystalSpec, mode: KzMode) -> Result<Complex64> {
    let amplitude = crystal.photons()?.amplitude(qs, qi, mode)?;
    Ok(mode_momentum(pump, qs + qi) * amplitude)
}

/// Evaluates `Φ` on `(q_sy, q_iy)` slices of the grid at fixed x components.
///
/// Only `O(N)` k_z evaluations are needed per slice: the pump's `q_sy + q_iy`
/// takes `2N − 1` distinct lattice values.
#[derive(Debug, Clone)]
pub struct SliceBuilder {
    grid: GridSpec,
    photons: Photons,
    pump: PumpMode,
    mode: KzMode,
}

impl SliceBuilder {
    pub fn new(grid: GridSpec, pump: &PumpMode, crystal: &CrystalSpec, mode: KzMode) -> Result<Self> {
        crystal.validate()?;
        Ok(Self { grid, photons: crystal.photons()?, pump: *pump, mode })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Row-major `N × N` matrix `Φ[j][k]` at `q_s = (q_sx, q_sy_j)`, `q_i = (q_ix, q_iy_k)`.
    pub fn slice(&self, q_sx: f64, q_ix: f64) -> Result<Vec<Complex64>> {
        let g = &self.grid;
        let n = g.n;
        let ks = (0..n)
            .map(|j| self.photons.signal.kz(WaveVector::new(q_sx, g.qy(j)), self.mode))
            .collect::<Result<Vec<_>>>()?;
        let ki = (0..n)
            .map(|k| self.photons.idler.kz(WaveVector::new(q_ix, g.qy(k)), self.mode))
            .collect::<Result<Vec<_>>>()?;
        let qx_sum = q_sx + q_ix;
        let origin = 2.0 * (g.center.qy - g.q_max);
        let mut kp = Vec::with_capacity(2 * n - 1);
        let mut u = Vec::with_capacity(2 * n - 1);
        for m in 0..2 * n - 1 {
            let q = WaveVector::new(qx_sum, origin + m as f64 * g.dq());
            kp.push(self.photons.pump.kz(q, self.mode)?);
            u.push(mode_momentum(&self.pump, q));
        }
        let half = self.photons.half_length;
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let dk = kp[j + k] - ks[j] - ki[k];
                out.push(u[j + k] * sinc(dk * half));
            }
        }
        Ok(out)
    }
}

/// Dense `Φ` over `(q_sy, q_iy)` at `q_sx = q_ix = 0`, unit total norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonAmplitude1D {
    pub grid: GridSpec,
    /// Row-major, rows indexed by the signal momentum.
    pub data: Vec<Complex64>,
    /// Factor that was applied to reach unit norm.
    pub normalization: f64,
}

impl BiphotonAmplitude1D {
    /// Normalizes an arbitrary matrix; used for surrogate amplitudes too.
    pub fn from_matrix(grid: GridSpec, mut data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.n * grid.n {
            return Err(Error::Config(format!(
                "amplitude matrix has {} entries, expected {}",
                data.len(),
                grid.n * grid.n
            )));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Detection("non-finite amplitude entry".into()));
        }
        let dq = grid.dq();
        let total = data.iter().map(|v| v.norm_sqr()).sum::<f64>() * dq * dq;
        if total <= 0.0 {
            return Err(Error::Detection("amplitude vanishes on the grid".into()));
        }
        let normalization = 1.0 / libm::sqrt(total);
        for v in &mut data {
            *v *= normalization;
        }
        Ok(Self { grid, data, normalization })
    }

    pub fn at(&self, j: usize, k: usize) -> Complex64 {
        self.data[j * self.grid.n + k]
    }

    pub fn norm_sqr(&self) -> f64 {
        let dq = self.grid.dq();
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * dq * dq
    }

    /// Marginal rate of one photon, partner summed out.
    pub fn singles(&self, arm: Arm) -> Vec<f64> {
        let n = self.grid.n;
        let dq = self.grid.dq();
        let mut out = vec![0.0; n];
        for j in 0..n {
            for k in 0..n {
                let w = self.data[j * n + k].norm_sqr() * dq;
                match arm {
                    Arm::Signal => out[j] += w,
                    Arm::Idler => out[k] += w,
                }
            }
        }
        out
    }
}

pub fn build_1d_amplitude(
    grid: GridSpec,
    pump: &PumpMode,
    crystal: &CrystalSpec,
    mode: KzMode,
) -> Result<BiphotonAmplitude1D> {
    let (lo, hi) = ring_extent(crystal, mode)?;
    for q in [lo, hi, -lo, -hi] {
        if grid.qy_index(q).is_none() {
            return Err(Error::Config(format!(
                "grid y range [{}, {}] does not contain the phase-matching locus at q_y = {}",
                grid.qy(0),
                grid.qy(grid.n - 1),
                q
            )));
        }
    }
    let slice = SliceBuilder::new(grid, pump, crystal, mode)?.slice(0.0, 0.0)?;
    BiphotonAmplitude1D::from_matrix(grid, slice)
}

/// Lowest and highest signal `q_y` on the emission ring at zero pump
/// momentum and `q_x = 0`; the idler ring is the point reflection.
pub fn ring_extent(crystal: &CrystalSpec, mode: KzMode) -> Result<(f64, f64)> {
    let photons = crystal.photons()?;
    let g = |q: f64| photons.delta_kz(WaveVector::new(0.0, q), WaveVector::new(0.0, -q), mode);
    let limit = 0.25 * photons.signal.k0.min(photons.idler.k0);
    let steps = 4000;
    let h = 2.0 * limit / steps as f64;
    let mut roots = Vec::new();
    let mut prev = (-limit, g(-limit)?);
    for s in 1..=steps {
        let q = -limit + s as f64 * h;
        let v = g(q)?;
        if prev.1.signum() != v.signum() {
            let (mut a, mut b, fa) = (prev.0, q, prev.1);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if g(m)?.signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = (q, v);
    }
    match (roots.first(), roots.last()) {
        (Some(&lo), Some(&hi)) if roots.len() >= 2 => Ok((lo, hi)),
        _ => Err(Error::NoPhaseMatching),
    }
}

/// Partner integration rule for singles maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartnerQuadrature {
    /// Partner runs over the same grid as the output map.
    Grid,
    /// Partner is `Q − q` with the pump momentum `Q` on a square grid of
    /// `samples` points per axis spanning `±half_width_waists / w0`.
    PumpAdapted { samples: usize, half_width_waists: f64 },
}

impl Default for PartnerQuadrature {
    fn default() -> Self {
        PartnerQuadrature::PumpAdapted { samples: 33, half_width_waists: 4.0 }
    }
}

/// Real `N × N` map, row-major with rows along y.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap2D {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

impl RealMap2D {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.data[iy * self.grid.n + ix]
    }

    pub fn column(&self, ix: usize) -> Vec<f64> {
        (0..self.grid.n).map(|iy| self.at(ix, iy)).collect()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Singles rate of one arm over the 2-D momentum grid:
/// `R(q_a) = Σ_partner |Φ|² |M_s|² |M_i|²`.
///
/// Rows are computed independently and each pixel sums its partners in a
/// fixed order, so the map is bit-identical for any worker count.
#[allow(clippy::too_many_arguments)]
pub fn singles_map_2d(
    arm: Arm,
    signal_mask: &dyn MomentumMask,
    idler_mask: &dyn MomentumMask,
    grid: GridSpec,
    pump: &PumpMode,
    crystal: &CrystalSpec,
    mode: KzMode,
    quadrature: PartnerQuadrature,
) -> Result<RealMap2D> {
    crystal.validate()?;
    let photons = crystal.photons()?;
    let (own, partner, own_mask, partner_mask) = match arm {
        Arm::Signal => (photons.signal, photons.idler, signal_mask, idler_mask),
        Arm::Idler => (photons.idler, photons.signal, idler_mask, signal_mask),
    };
    let n = grid.n;
    let pixel = |p: usize| WaveVector::new(grid.qx(p % n), grid.qy(p / n));
    let own_kz = (0..n * n).map(|p| own.kz(pixel(p), mode)).collect::<Result<Vec<_>>>()?;
    let own_m2 = (0..n * n)
        .map(|p| {
            let t = own_mask.transmission(pixel(p));
            t * t
        })
        .collect::<Vec<_>>();
    let half = photons.half_length;

    let rows = match quadrature {
        PartnerQuadrature::Grid => {
            let partner_kz = (0..n * n).map(|p| partner.kz(pixel(p), mode)).collect::<Result<Vec<_>>>()?;
            let partner_m2 = (0..n * n)
                .map(|p| {
                    let t = partner_mask.transmission(pixel(p));
                    t * t
                })
                .collect::<Vec<_>>();
            let lattice = 2 * n - 1;
            let origin = WaveVector::new(2.0 * (grid.center.qx - grid.q_max), 2.0 * (grid.center.qy - grid.q_max));
            let mut pump_kz = Vec::with_capacity(lattice * lattice);
            let mut pump_u2 = Vec::with_capacity(lattice * lattice);
            for my in 0..lattice {
                for mx in 0..lattice {
                    let q = WaveVector::new(origin.qx + mx as f64 * grid.dq(), origin.qy + my as f64 * grid.dq());
                    pump_kz.push(photons.pump.kz(q, mode)?);
                    pump_u2.push(mode_momentum(pump, q).norm_sqr());
                }
            }
            let cell = grid.dq() * grid.dq();
            par::map_range(n, |iy| -> Result<Vec<f64>> {
                let mut row = vec![0.0; n];
                for (ix, out) in row.iter_mut().enumerate() {
                    let p = iy * n + ix;
                    if own_m2[p] == 0.0 {
                        continue;
                    }
                    let mut acc = 0.0;
                    for jy in 0..n {
                        for jx in 0..n {
                            let pp = jy * n + jx;
                            if partner_m2[pp] == 0.0 {
                                continue;
                            }
                            let m = (iy + jy) * lattice + ix + jx;
                            let s = sinc((pump_kz[m] - own_kz[p] - partner_kz[pp]) * half);
                            acc += pump_u2[m] * s * s * partner_m2[pp];
                        }
                    }
                    *out = own_m2[p] * acc * cell;
                }
                Ok(row)
            })
        }
        PartnerQuadrature::PumpAdapted { samples, half_width_waists } => {
            let rule = PumpGrid::new(samples, half_width_waists, pump, &photons, mode)?;
            par::map_range(n, |iy| -> Result<Vec<f64>> {
                let mut row = vec![0.0; n];
                for (ix, out) in row.iter_mut().enumerate() {
                    let p = iy * n + ix;
                    if own_m2[p] == 0.0 {
                        continue;
                    }
                    *out = own_m2[p] * rule.partner_sum(pixel(p), own_kz[p], &partner, partner_mask, half, mode)?;
                }
                Ok(row)
            })
        }
    };
    let mut data = Vec::with_capacity(n * n);
    for row in rows {
        data.extend(row?);
    }
    Ok(RealMap2D { grid, data })
}

/// Pump momenta `Q` on a square grid with their `k_z` and `|ũ(Q)|²`.
struct PumpGrid {
    points: Vec<(WaveVector, f64, f64)>,
    cell: f64,
}

impl PumpGrid {
    fn new(samples: usize, half_width_waists: f64, pump: &PumpMode, photons: &Photons, mode: KzMode) -> Result<Self> {
        if samples < 2 || !(half_width_waists > 0.0) {
            return Err(Error::Config("pump-adapted quadrature needs >= 2 samples and a positive half-width".into()));
        }
        let span = half_width_waists / pump.waist_um;
        let step = 2.0 * span / (samples - 1) as f64;
        let mut points = Vec::with_capacity(samples * samples);
        for a in 0..samples {
            for b in 0..samples {
                let q = WaveVector::new(-span + b as f64 * step, -span + a as f64 * step);
                points.push((q, photons.pump.kz(q, mode)?, mode_momentum(pump, q).norm_sqr()));
            }
        }
        Ok(Self { points, cell: step * step })
    }

    /// `Σ_Q |ũ(Q)|² sinc²(Δk_z L/2) |M(Q − q)|² ΔQ²` for one photon at `q_own`.
    fn partner_sum(
        &self,
        q_own: WaveVector,
        own_kz: f64,
        partner: &Photon,
        partner_mask: &dyn MomentumMask,
        half_length: f64,
        mode: KzMode,
    ) -> Result<f64> {
        let mut acc = 0.0;
        for &(q_pump, kp, u2) in &self.points {
            let q_partner = q_pump - q_own;
            let t = partner_mask.transmission(q_partner);
            if t == 0.0 || u2 == 0.0 {
                continue;
            }
            let s = sinc((kp - own_kz - partner.kz(q_partner, mode)?) * half_length);
            acc += u2 * s * s * t * t;
        }
        Ok(acc * self.cell)
    }
}

/// Singles rate of one arm at arbitrary points, with the pump-adapted
/// partner rule. Used for cut profiles finer than a map's pixels.
#[allow(clippy::too_many_arguments)]
pub fn singles_at(
    arm: Arm,
    signal_mask: &dyn MomentumMask,
    idler_mask: &dyn MomentumMask,
    points: &[WaveVector],
    pump: &PumpMode,
    crystal: &CrystalSpec,
    mode: KzMode,
    samples: usize,
    half_width_waists: f64,
) -> Result<Vec<f64>> {
    crystal.validate()?;
    let photons = crystal.photons()?;
    let (own, partner, own_mask, partner_mask) = match arm {
        Arm::Signal => (photons.signal, photons.idler, signal_mask, idler_mask),
        Arm::Idler => (photons.idler, photons.signal, idler_mask, signal_mask),
    };
    let rule = PumpGrid::new(samples, half_width_waists, pump, &photons, mode)?;
    par::map_range(points.len(), |i| -> Result<f64> {
        let q = points[i];
        let t = own_mask.transmission(q);
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(t * t * rule.partner_sum(q, own.kz(q, mode)?, &partner, partner_mask, photons.half_length, mode)?)
    })
    .into_iter()
    .collect()
}

fn phase(t: f64) -> Complex64 {
    Complex64::new(libm::cos(t), libm::sin(t))
}

fn check_idler_position(grid: &GridSpec, y_i: f64) -> Result<()> {
    if !(y_i.abs() <= grid.position_extent()) {
        return Err(Error::Range(format!(
            "idler position {y_i} um outside the conjugate grid (|y| <= {})",
            grid.position_extent()
        )));
    }
    Ok(())
}

/// `A(q_sy | y_i) = Σ_k Φ[j][k] M_i[k] exp(i q_iy,k y_i) Δq` on the y-only slice.
pub fn conditional_signal_amplitude_1d(
    y_i: f64,
    idler_mask: &[f64],
    amplitude: &BiphotonAmplitude1D,
) -> Result<Field1D> {
    let grid = amplitude.grid;
    let n = grid.n;
    check_idler_position(&grid, y_i)?;
    if idler_mask.len() != n {
        return Err(Error::Config(format!("idler mask has {} samples, grid needs {n}", idler_mask.len())));
    }
    let dq = grid.dq();
    let weights: Vec<Complex64> = (0..n).map(|k| phase(grid.qy(k) * y_i) * (idler_mask[k] * dq)).collect();
    let data = (0..n)
        .map(|j| {
            let row = &amplitude.data[j * n..(j + 1) * n];
            row.iter().zip(&weights).map(|(a, w)| a * w).sum()
        })
        .collect();
    Field1D::new(grid, Domain::Momentum, data)
}

/// Conditional signal amplitude over the full `(q_sx, q_sy)` grid for the
/// idler slice `q_ix`. Costs `N` slices; intended for `N <= 64`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_signal_amplitude_2d(
    y_i: f64,
    q_ix: f64,
    idler_mask: &dyn MomentumMask,
    grid: GridSpec,
    pump: &PumpMode,
    crystal: &CrystalSpec,
    mode: KzMode,
) -> Result<ComplexField2D> {
    check_idler_position(&grid, y_i)?;
    let n = grid.n;
    let builder = SliceBuilder::new(grid, pump, crystal, mode)?;
    let dq = grid.dq();
    let weights: Vec<Complex64> = (0..n)
        .map(|k| phase(grid.qy(k) * y_i) * (idler_mask.transmission(WaveVector::new(q_ix, grid.qy(k))) * dq))
        .collect();
    let columns = par::map_range(n, |ix| -> Result<Vec<Complex64>> {
        let slice = builder.slice(grid.qx(ix), q_ix)?;
        Ok((0..n).map(|j| slice[j * n..(j + 1) * n].iter().zip(&weights).map(|(a, w)| a * w).sum()).collect())
    });
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for (ix, column) in columns.into_iter().enumerate() {
        for (iy, v) in column?.into_iter().enumerate() {
            data[iy * n + ix] = v;
        }
    }
    ComplexField2D::new(grid, Domain::Momentum, data)
}

/// Momentum of `|ũ|²`'s hump lines in the `(q_sy, q_iy)` plane:
/// `q_sy + q_iy = ±hump`.
pub fn pump_line_offsets(pump: &PumpMode) -> [f64; 2] {
    let h = pump.hump_momentum();
    [h, -h]
}
