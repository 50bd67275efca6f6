//! Hermite-Gauss pump modes at the waist plane.
//!
//! Fourier convention: `ũ(q) = (1/2π) ∫ u(r) exp(−i q·r) d²r`, under which
//! both representations carry unit norm.

use alloc::format;
use core::f64::consts::{PI, SQRT_2};
use num_complex::Complex64;

use crate::{Error, Result, WaveVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpMode {
    /// Hermite order along x.
    pub order_x: u32,
    /// Hermite order along y; the double-hump axis of TEM01.
    pub order_y: u32,
    pub waist_um: f64,
    pub offset_um: (f64, f64),
}

impl PumpMode {
    pub fn new(order_x: u32, order_y: u32, waist_um: f64) -> Result<Self> {
        if !(waist_um > 0.0 && waist_um.is_finite()) {
            return Err(Error::Config(format!("pump waist must be > 0, got {waist_um}")));
        }
        if order_x > 20 || order_y > 20 {
            return Err(Error::Config("Hermite orders above 20 are not supported".into()));
        }
        Ok(Self { order_x, order_y, waist_um, offset_um: (0.0, 0.0) })
    }

    pub fn tem00(waist_um: f64) -> Result<Self> {
        Self::new(0, 0, waist_um)
    }

    pub fn tem01(waist_um: f64) -> Result<Self> {
        Self::new(0, 1, waist_um)
    }

    pub fn with_offset(self, x0: f64, y0: f64) -> Self {
        Self { offset_um: (x0, y0), ..self }
    }

    /// `|q_y|` of the outermost intensity maxima of `|ũ(0, q_y)|²`; zero for
    /// a single-lobed profile.
    pub fn hump_momentum(&self) -> f64 {
        let w = self.waist_um;
        let profile = |q: f64| {
            let t = w * q / SQRT_2;
            let h = hermite(self.order_y, t);
            h * h * libm::exp(-t * t)
        };
        let span = 6.0 / w;
        let steps = 6000;
        let h = span / steps as f64;
        let mut best = (0.0, profile(0.0));
        for i in 1..=steps {
            let q = i as f64 * h;
            let v = profile(q);
            if v > best.1 {
                best = (q, v);
            }
        }
        if best.0 == 0.0 {
            return 0.0;
        }
        let (q, v) = best;
        let (vm, vp) = (profile(q - h), profile(q + h));
        let curvature = vm - 2.0 * v + vp;
        if curvature < 0.0 {
            q + 0.5 * h * (vm - vp) / curvature
        } else {
            q
        }
    }
}

/// Physicists' Hermite polynomial by upward recurrence.
pub fn hermite(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Unit-norm 1-D Hermite-Gauss factor `N_n H_n(√2 x/w) exp(−x²/w²)`.
fn hg_position(n: u32, w: f64, x: f64) -> f64 {
    let norm = libm::pow(2.0 / PI, 0.25) / libm::sqrt(w * libm::pow(2.0, n as f64) * factorial(n));
    let t = SQRT_2 * x / w;
    norm * hermite(n, t) * libm::exp(-x * x / (w * w))
}

/// Magnitude part of the 1-D transform, `N'_n H_n(w q/√2) exp(−w² q²/4)`.
fn hg_momentum(n: u32, w: f64, q: f64) -> f64 {
    let norm = libm::sqrt(0.5 * w) * libm::pow(2.0 / PI, 0.25) / libm::sqrt(libm::pow(2.0, n as f64) * factorial(n));
    let t = w * q / SQRT_2;
    norm * hermite(n, t) * libm::exp(-0.25 * w * w * q * q)
}

fn minus_i_pow(n: u32) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

pub fn mode_position(mode: &PumpMode, x: f64, y: f64) -> Complex64 {
    let (x0, y0) = mode.offset_um;
    let w = mode.waist_um;
    Complex64::new(hg_position(mode.order_x, w, x - x0) * hg_position(mode.order_y, w, y - y0), 0.0)
}

pub fn mode_momentum(mode: &PumpMode, q: WaveVector) -> Complex64 {
    let (x0, y0) = mode.offset_um;
    let w = mode.waist_um;
    let magnitude = hg_momentum(mode.order_x, w, q.qx) * hg_momentum(mode.order_y, w, q.qy);
    let shift = -(q.qx * x0 + q.qy * y0);
    minus_i_pow(mode.order_x + mode.order_y) * Complex64::new(libm::cos(shift), libm::sin(shift)) * magnitude
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_low_orders() {
        let x = 0.37;
        assert_eq!(hermite(0, x), 1.0);
        assert!((hermite(1, x) - 2.0 * x).abs() < 1e-15);
        assert!((hermite(2, x) - (4.0 * x * x - 2.0)).abs() < 1e-15);
        assert!((hermite(3, x) - (8.0 * x * x * x - 12.0 * x)).abs() < 1e-14);
    }

    #[test]
    fn waist_must_be_positive() {
        assert!(PumpMode::tem01(0.0).is_err());
        assert!(PumpMode::tem01(-3.0).is_err());
    }
}
