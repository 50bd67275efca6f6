//! Sampling grids, sampled fields and the centered unitary transforms
//! between momentum and position.
//!
//! Momentum samples sit at `q_j = c − Q_max + j Δq` (`c` is the grid center,
//! zero unless set), position samples at `y_k = (k − N/2) Δy` with
//! `Δq Δy = 2π / N`. Field norms are `Σ |f|² · cell`, which the transforms
//! preserve.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::fft::Fft;
use crate::{Error, Result, WaveVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub q_max: f64,
    pub center: WaveVector,
}

impl GridSpec {
    pub fn new(n: usize, q_max: f64) -> Result<Self> {
        if n < 32 || !n.is_power_of_two() {
            return Err(Error::Config(format!("grid size must be a power of two >= 32, got {n}")));
        }
        if !(q_max > 0.0 && q_max.is_finite()) {
            return Err(Error::Config(format!("grid half-extent must be > 0, got {q_max}")));
        }
        Ok(Self { n, q_max, center: WaveVector::ZERO })
    }

    pub fn with_center(self, center: WaveVector) -> Self {
        Self { center, ..self }
    }

    pub fn dq(&self) -> f64 {
        2.0 * self.q_max / self.n as f64
    }

    pub fn dy(&self) -> f64 {
        PI / self.q_max
    }

    pub fn qx(&self, j: usize) -> f64 {
        self.center.qx - self.q_max + j as f64 * self.dq()
    }

    pub fn qy(&self, j: usize) -> f64 {
        self.center.qy - self.q_max + j as f64 * self.dq()
    }

    pub fn y(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dy()
    }

    pub fn qx_axis(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.qx(j)).collect()
    }

    pub fn qy_axis(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.qy(j)).collect()
    }

    pub fn position_axis(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.y(k)).collect()
    }

    /// Largest `|y|` on the position grid.
    pub fn position_extent(&self) -> f64 {
        (self.n / 2) as f64 * self.dy()
    }

    /// Error unless a centered disc of `radius` fits inside with the given
    /// fractional margin.
    pub fn check_coverage(&self, center: WaveVector, radius: f64, margin: f64) -> Result<()> {
        let need = radius * (1.0 + margin);
        let fits = |c: f64, gc: f64| c - need >= gc - self.q_max && c + need <= gc + self.q_max - self.dq();
        if fits(center.qx, self.center.qx) && fits(center.qy, self.center.qy) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "grid (center ({}, {}), half-extent {}) does not cover the emission ring of radius {} about ({}, {}) with {}% margin",
                self.center.qx,
                self.center.qy,
                self.q_max,
                radius,
                center.qx,
                center.qy,
                margin * 100.0
            )))
        }
    }

    /// Index of the momentum sample nearest `q` along y, if on the grid.
    pub fn qy_index(&self, q: f64) -> Option<usize> {
        let j = libm::round((q - self.qy(0)) / self.dq());
        (j >= 0.0 && j < self.n as f64).then_some(j as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Position,
    Momentum,
}

impl Domain {
    pub fn label(self) -> &'static str {
        match self {
            Domain::Position => "position",
            Domain::Momentum => "momentum",
        }
    }

    pub(crate) fn expect(self, expected: Domain) -> Result<()> {
        if self == expected {
            Ok(())
        } else {
            Err(Error::Domain { expected: expected.label(), found: self.label() })
        }
    }
}

/// One-dimensional centered unitary transform pair along an axis whose
/// momentum samples are offset by `center`.
#[derive(Debug, Clone)]
pub struct Transform1D {
    fft: Fft,
    pre: Vec<f64>,
    near_post: Vec<Complex64>,
    far_pre: Vec<Complex64>,
    far_post: Vec<f64>,
}

impl Transform1D {
    pub fn new(grid: &GridSpec, center: f64) -> Result<Self> {
        let n = grid.n;
        let fft = Fft::new(n)?;
        let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let root = libm::sqrt(2.0 * PI);
        let pre = (0..n).map(sign).collect();
        let near_post = (0..n)
            .map(|k| {
                let t = center * grid.y(k);
                Complex64::new(libm::cos(t), libm::sin(t)) * (sign(k) * grid.dq() / root)
            })
            .collect();
        let far_pre = (0..n)
            .map(|k| {
                let t = -center * grid.y(k);
                Complex64::new(libm::cos(t), libm::sin(t)) * sign(k)
            })
            .collect();
        let far_post = (0..n).map(|j| sign(j) * grid.dy() / root).collect();
        Ok(Self { fft, pre, near_post, far_pre, far_post })
    }

    pub fn len(&self) -> usize {
        self.pre.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pre.is_empty()
    }

    /// Momentum samples to position samples, in place.
    pub fn to_position(&self, data: &mut [Complex64]) {
        for (v, s) in data.iter_mut().zip(&self.pre) {
            *v *= *s;
        }
        self.fft.inverse(data);
        for (v, p) in data.iter_mut().zip(&self.near_post) {
            *v *= *p;
        }
    }

    /// Position samples to momentum samples, in place.
    pub fn to_momentum(&self, data: &mut [Complex64]) {
        for (v, p) in data.iter_mut().zip(&self.far_pre) {
            *v *= *p;
        }
        self.fft.forward(data);
        for (v, s) in data.iter_mut().zip(&self.far_post) {
            *v *= *s;
        }
    }
}

/// Samples along y only.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    pub grid: GridSpec,
    pub domain: Domain,
    pub data: Vec<Complex64>,
}

impl Field1D {
    pub fn new(grid: GridSpec, domain: Domain, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.n {
            return Err(Error::Config(format!("1-D field has {} samples, grid needs {}", data.len(), grid.n)));
        }
        Ok(Self { grid, domain, data })
    }

    pub fn coordinates(&self) -> Vec<f64> {
        match self.domain {
            Domain::Momentum => self.grid.qy_axis(),
            Domain::Position => self.grid.position_axis(),
        }
    }

    pub fn cell(&self) -> f64 {
        match self.domain {
            Domain::Momentum => self.grid.dq(),
            Domain::Position => self.grid.dy(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// `N × N` samples, row-major with rows along y: `data[iy * N + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    pub grid: GridSpec,
    pub domain: Domain,
    pub data: Vec<Complex64>,
}

impl ComplexField2D {
    pub fn new(grid: GridSpec, domain: Domain, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.n * grid.n {
            return Err(Error::Config(format!("2-D field has {} samples, grid needs {}", data.len(), grid.n * grid.n)));
        }
        Ok(Self { grid, domain, data })
    }

    /// Fill from `f(x, y)` evaluated at the domain's sample coordinates.
    pub fn from_fn(grid: GridSpec, domain: Domain, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let (xs, ys) = Self::axes_for(&grid, domain);
        let mut data = Vec::with_capacity(grid.n * grid.n);
        for y in &ys {
            for x in &xs {
                data.push(f(*x, *y));
            }
        }
        Self { grid, domain, data }
    }

    fn axes_for(grid: &GridSpec, domain: Domain) -> (Vec<f64>, Vec<f64>) {
        match domain {
            Domain::Momentum => (grid.qx_axis(), grid.qy_axis()),
            Domain::Position => (grid.position_axis(), grid.position_axis()),
        }
    }

    /// `(x axis, y axis)` sample coordinates in µm or rad/µm.
    pub fn axes(&self) -> (Vec<f64>, Vec<f64>) {
        Self::axes_for(&self.grid, self.domain)
    }

    pub fn axis_units(&self) -> &'static str {
        match self.domain {
            Domain::Momentum => "rad/um",
            Domain::Position => "um",
        }
    }

    pub fn cell_area(&self) -> f64 {
        let c = match self.domain {
            Domain::Momentum => self.grid.dq(),
            Domain::Position => self.grid.dy(),
        };
        c * c
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_area()
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.data[iy * self.grid.n + ix]
    }

    /// Apply a 1-D transform along x (each row) and along y (each column).
    pub(crate) fn transform(&mut self, tx: &Transform1D, ty: &Transform1D, to_position: bool) {
        let n = self.grid.n;
        let run = |t: &Transform1D, buf: &mut [Complex64]| {
            if to_position {
                t.to_position(buf)
            } else {
                t.to_momentum(buf)
            }
        };
        for row in self.data.chunks_mut(n) {
            run(tx, row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for ix in 0..n {
            for iy in 0..n {
                column[iy] = self.data[iy * n + ix];
            }
            run(ty, &mut column);
            for iy in 0..n {
                self.data[iy * n + ix] = column[iy];
            }
        }
    }
}
