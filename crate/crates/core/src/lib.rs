//! Numerical core for two-photon double-slit complementarity experiments.
//!
//! The crate evaluates the transverse biphoton amplitude of type-II
//! down-conversion pumped by a Hermite-Gauss beam, pushes it through
//! aperture and double-slit optical chains, and extracts visibility,
//! distinguishability and singles maps.
//!
//! Everything here is `no_std` with `alloc`. The `std` feature only switches
//! the error and complex types to their std-backed impls; `parallel` spreads
//! pixel and slice loops across a rayon pool without changing results.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod biphoton;
pub mod coincidence;
pub mod detection;
pub mod dispersion;
pub mod error;
pub mod fft;
pub mod grid;
pub mod optical_chain;
pub mod peaks;
pub mod pump_modes;

mod par;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Transverse wave vector of one photon, rad/µm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WaveVector {
    pub qx: f64,
    pub qy: f64,
}

impl WaveVector {
    pub const ZERO: WaveVector = WaveVector { qx: 0.0, qy: 0.0 };

    pub const fn new(qx: f64, qy: f64) -> Self {
        Self { qx, qy }
    }

    pub fn norm_sqr(self) -> f64 {
        self.qx * self.qx + self.qy * self.qy
    }

    pub fn mirror_x(self) -> Self {
        Self::new(-self.qx, self.qy)
    }
}

impl core::ops::Add for WaveVector {
    type Output = WaveVector;
    fn add(self, rhs: WaveVector) -> WaveVector {
        WaveVector::new(self.qx + rhs.qx, self.qy + rhs.qy)
    }
}

impl core::ops::Sub for WaveVector {
    type Output = WaveVector;
    fn sub(self, rhs: WaveVector) -> WaveVector {
        WaveVector::new(self.qx - rhs.qx, self.qy - rhs.qy)
    }
}

impl core::ops::Neg for WaveVector {
    type Output = WaveVector;
    fn neg(self) -> WaveVector {
        WaveVector::new(-self.qx, -self.qy)
    }
}

/// Which photon of the pair an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Signal,
    Idler,
}

impl Arm {
    pub fn partner(self) -> Arm {
        match self {
            Arm::Signal => Arm::Idler,
            Arm::Idler => Arm::Signal,
        }
    }
}
