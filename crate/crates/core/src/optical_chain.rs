//! Far-field apertures, the double slit, and the unitary transforms between
//! conjugate planes.
//!
//! Apertures act on the momentum grid. Relative sizes are fractions of the
//! measured cone diameter; absolute sizes (mm) go through a plane scale in
//! mm per rad/µm. The slit plane images the crystal exit face with
//! magnification `M`, so slit-plane lengths divide by `M` on the crystal grid.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use crate::biphoton::{MomentumMask, RealMap2D};
use crate::grid::{ComplexField2D, Domain, Field1D, GridSpec, Transform1D};
use crate::pump_modes::PumpMode;
use crate::{Error, Result, WaveVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApertureShape {
    None,
    /// Passes `|q_x − c_x| ≤ width / 2`.
    VerticalSlit {
        width: f64,
    },
    /// Blocks what the vertical slit of the same width passes.
    InverseSlit {
        width: f64,
    },
    Circle {
        diameter: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApertureUnits {
    /// Fractions of the measured cone diameter.
    Relative,
    /// Millimetres in the aperture plane.
    Absolute { plane_scale_mm_per_rad_um: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureSpec {
    pub shape: ApertureShape,
    pub units: ApertureUnits,
    /// Center offset in the same units as the size.
    pub center: (f64, f64),
}

impl ApertureSpec {
    pub fn none() -> Self {
        Self { shape: ApertureShape::None, units: ApertureUnits::Relative, center: (0.0, 0.0) }
    }

    pub fn relative(shape: ApertureShape, center: (f64, f64)) -> Self {
        Self { shape, units: ApertureUnits::Relative, center }
    }

    pub fn validate(&self) -> Result<()> {
        let size = match self.shape {
            ApertureShape::None => return Ok(()),
            ApertureShape::VerticalSlit { width } | ApertureShape::InverseSlit { width } => width,
            ApertureShape::Circle { diameter } => diameter,
        };
        if !(size > 0.0) {
            return Err(Error::Config(format!("aperture size must be > 0, got {size}")));
        }
        match self.units {
            ApertureUnits::Relative if size > 1.5 => {
                Err(Error::Config(format!("relative aperture size {size} outside (0, 1.5]")))
            }
            ApertureUnits::Absolute { plane_scale_mm_per_rad_um } if !(plane_scale_mm_per_rad_um > 0.0) => {
                Err(Error::Config("aperture plane scale must be > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Convert to momentum units. `cone_diameter` is in rad/µm.
    pub fn resolve(&self, cone_diameter: Option<f64>) -> Result<ResolvedAperture> {
        self.validate()?;
        if matches!(self.shape, ApertureShape::None) {
            return Ok(ResolvedAperture::open());
        }
        let scale = match self.units {
            ApertureUnits::Relative => cone_diameter.ok_or(Error::ConeUnmeasured)?,
            ApertureUnits::Absolute { plane_scale_mm_per_rad_um } => 1.0 / plane_scale_mm_per_rad_um,
        };
        let shape = match self.shape {
            ApertureShape::None => ApertureShape::None,
            ApertureShape::VerticalSlit { width } => ApertureShape::VerticalSlit { width: width * scale },
            ApertureShape::InverseSlit { width } => ApertureShape::InverseSlit { width: width * scale },
            ApertureShape::Circle { diameter } => ApertureShape::Circle { diameter: diameter * scale },
        };
        Ok(ResolvedAperture { shape, center: WaveVector::new(self.center.0 * scale, self.center.1 * scale) })
    }
}

/// Aperture with sizes in rad/µm on the crystal momentum grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedAperture {
    pub shape: ApertureShape,
    pub center: WaveVector,
}

impl ResolvedAperture {
    pub fn open() -> Self {
        Self { shape: ApertureShape::None, center: WaveVector::ZERO }
    }

    /// The same physical aperture seen by the partner photon, whose momentum
    /// is close to the point reflection `−q`.
    pub fn point_reflected(&self) -> Self {
        Self { shape: self.shape, center: -self.center }
    }

    /// 1-D profile along `q_y` at fixed `q_x`.
    pub fn row(&self, grid: &GridSpec, q_x: f64) -> Vec<f64> {
        (0..grid.n).map(|j| self.transmission(WaveVector::new(q_x, grid.qy(j)))).collect()
    }
}

impl MomentumMask for ResolvedAperture {
    fn transmission(&self, q: WaveVector) -> f64 {
        let d = q - self.center;
        let pass = match self.shape {
            ApertureShape::None => true,
            ApertureShape::VerticalSlit { width } => d.qx.abs() <= 0.5 * width,
            ApertureShape::InverseSlit { width } => d.qx.abs() > 0.5 * width,
            ApertureShape::Circle { diameter } => d.norm_sqr() <= 0.25 * diameter * diameter,
        };
        if pass {
            1.0
        } else {
            0.0
        }
    }
}

/// Binary mask on the momentum grid, row-major with rows along `q_y`.
pub fn aperture_mask(spec: &ApertureSpec, grid: &GridSpec, cone_diameter: Option<f64>) -> Result<Vec<f64>> {
    let resolved = spec.resolve(cone_diameter)?;
    let n = grid.n;
    let mut out = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            out.push(resolved.transmission(WaveVector::new(grid.qx(ix), grid.qy(iy))));
        }
    }
    Ok(out)
}

/// Planes of the detection setup, in propagation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneTag {
    CrystalMomentum,
    AperturePlane,
    SlitPlane,
    DetectionNearField,
    DetectionFarField,
}

impl PlaneTag {
    pub fn domain(self) -> Domain {
        match self {
            PlaneTag::CrystalMomentum | PlaneTag::AperturePlane | PlaneTag::DetectionFarField => Domain::Momentum,
            PlaneTag::SlitPlane | PlaneTag::DetectionNearField => Domain::Position,
        }
    }
}

/// Two openings of width `a`, centers `offset ± d/2`; opening 1 is at +y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleSlitSpec {
    pub width_um: f64,
    pub separation_um: f64,
    pub offset_um: f64,
}

impl Default for DoubleSlitSpec {
    fn default() -> Self {
        Self { width_um: 65.0, separation_um: 235.0, offset_um: 0.0 }
    }
}

impl DoubleSlitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width_um > 0.0 && self.width_um < self.separation_um) {
            return Err(Error::Config(format!(
                "double slit needs 0 < width < separation, got width {} and separation {}",
                self.width_um, self.separation_um
            )));
        }
        Ok(())
    }

    /// Geometry on a plane demagnified by `magnification`.
    pub fn scaled(&self, magnification: f64) -> Self {
        Self {
            width_um: self.width_um / magnification,
            separation_um: self.separation_um / magnification,
            offset_um: self.offset_um / magnification,
        }
    }

    /// 1 or 2 if `y` lies in that opening.
    pub fn opening(&self, y: f64) -> Option<u8> {
        let half = 0.5 * self.width_um;
        if (y - (self.offset_um + 0.5 * self.separation_um)).abs() <= half {
            Some(1)
        } else if (y - (self.offset_um - 0.5 * self.separation_um)).abs() <= half {
            Some(2)
        } else {
            None
        }
    }

    pub fn transmission(&self, y: f64) -> f64 {
        if self.opening(y).is_some() {
            1.0
        } else {
            0.0
        }
    }

    /// Half-extent of the region spanned by both openings.
    pub fn outer_half_span(&self) -> f64 {
        0.5 * (self.separation_um + self.width_um)
    }

    /// Error unless each opening covers at least four position samples.
    pub fn check_resolution(&self, grid: &GridSpec) -> Result<()> {
        self.validate()?;
        let mut counts = [0usize; 2];
        for k in 0..grid.n {
            if let Some(o) = self.opening(grid.y(k)) {
                counts[o as usize - 1] += 1;
            }
        }
        if counts.iter().any(|&c| c < 4) {
            return Err(Error::Config(format!(
                "slit openings cover {:?} samples (spacing {} um); at least 4 each are required",
                counts,
                grid.dy()
            )));
        }
        Ok(())
    }
}

/// Crystal-to-slit magnification that puts the TEM01 intensity humps
/// (`y = ±w0/√2`) on the slit centers.
pub fn matched_magnification(slit: &DoubleSlitSpec, pump: &PumpMode) -> f64 {
    slit.separation_um / (SQRT_2 * pump.waist_um)
}

pub fn apply_double_slit(field: &ComplexField2D, slit: &DoubleSlitSpec) -> Result<ComplexField2D> {
    field.domain.expect(Domain::Position)?;
    slit.check_resolution(&field.grid)?;
    let n = field.grid.n;
    let mut out = field.clone();
    for iy in 0..n {
        let t = slit.transmission(field.grid.y(iy));
        for v in &mut out.data[iy * n..(iy + 1) * n] {
            *v *= t;
        }
    }
    Ok(out)
}

pub fn apply_double_slit_1d(field: &Field1D, slit: &DoubleSlitSpec) -> Result<Field1D> {
    field.domain.expect(Domain::Position)?;
    slit.check_resolution(&field.grid)?;
    let mut out = field.clone();
    for (k, v) in out.data.iter_mut().enumerate() {
        *v *= slit.transmission(field.grid.y(k));
    }
    Ok(out)
}

pub fn to_near_field(field: &ComplexField2D) -> Result<ComplexField2D> {
    field.domain.expect(Domain::Momentum)?;
    let tx = Transform1D::new(&field.grid, field.grid.center.qx)?;
    let ty = Transform1D::new(&field.grid, field.grid.center.qy)?;
    let mut out = field.clone();
    out.transform(&tx, &ty, true);
    out.domain = Domain::Position;
    Ok(out)
}

pub fn to_far_field(field: &ComplexField2D) -> Result<ComplexField2D> {
    field.domain.expect(Domain::Position)?;
    let tx = Transform1D::new(&field.grid, field.grid.center.qx)?;
    let ty = Transform1D::new(&field.grid, field.grid.center.qy)?;
    let mut out = field.clone();
    out.transform(&tx, &ty, false);
    out.domain = Domain::Momentum;
    Ok(out)
}

pub fn to_near_field_1d(field: &Field1D) -> Result<Field1D> {
    field.domain.expect(Domain::Momentum)?;
    let mut out = field.clone();
    Transform1D::new(&field.grid, field.grid.center.qy)?.to_position(&mut out.data);
    out.domain = Domain::Position;
    Ok(out)
}

pub fn to_far_field_1d(field: &Field1D) -> Result<Field1D> {
    field.domain.expect(Domain::Position)?;
    let mut out = field.clone();
    Transform1D::new(&field.grid, field.grid.center.qy)?.to_momentum(&mut out.data);
    out.domain = Domain::Momentum;
    Ok(out)
}

/// Diameter (rad/µm) of the circle through the radial intensity maxima of
/// a ring-shaped singles map, taken about the intensity centroid.
pub fn measure_cone_diameter(map: &RealMap2D) -> Result<f64> {
    let g = &map.grid;
    let n = g.n;
    let total: f64 = map.data.iter().sum();
    if !(total > 0.0) || map.data.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Detection("singles map is empty or has invalid samples".into()));
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for iy in 0..n {
        for ix in 0..n {
            let w = map.at(ix, iy);
            cx += w * g.qx(ix);
            cy += w * g.qy(iy);
        }
    }
    cx /= total;
    cy /= total;
    let dq = g.dq();
    let bins = n;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for iy in 0..n {
        for ix in 0..n {
            let (dx, dy) = (g.qx(ix) - cx, g.qy(iy) - cy);
            let b = libm::round(libm::sqrt(dx * dx + dy * dy) / dq) as usize;
            if b < bins {
                sum[b] += map.at(ix, iy);
                count[b] += 1;
            }
        }
    }
    let reach = {
        let inside_x = (g.center.qx + g.q_max - cx).min(cx - (g.center.qx - g.q_max));
        let inside_y = (g.center.qy + g.q_max - cy).min(cy - (g.center.qy - g.q_max));
        ((inside_x.min(inside_y) / dq) as usize).min(bins - 1)
    };
    let profile: Vec<f64> = (0..=reach).map(|b| if count[b] > 0 { sum[b] / count[b] as f64 } else { 0.0 }).collect();
    if profile.len() < 5 {
        return Err(Error::Detection("ring centroid too close to the grid edge".into()));
    }
    let (peak, peak_value) =
        profile.iter().copied().enumerate().fold((0, f64::MIN), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let inner_min = profile[..=peak].iter().copied().fold(f64::MAX, f64::min);
    let outer_min = profile[peak..].iter().copied().fold(f64::MAX, f64::min);
    if peak == 0 || peak + 1 >= profile.len() || peak_value < 1.2 * inner_min.max(outer_min) {
        return Err(Error::Detection("no ring found: radial profile has no interior maximum".into()));
    }
    let (a, b, c) = (profile[peak - 1], profile[peak], profile[peak + 1]);
    let curvature = a - 2.0 * b + c;
    let shift = if curvature < 0.0 { 0.5 * (a - c) / curvature } else { 0.0 };
    Ok(2.0 * (peak as f64 + shift) * dq)
}

/// Resolved per-arm elements of one experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalChain {
    pub signal_aperture: ResolvedAperture,
    pub idler_aperture: ResolvedAperture,
    /// Slit geometry in the slit plane, µm.
    pub slit: DoubleSlitSpec,
    pub magnification: f64,
}

impl OpticalChain {
    /// The same aperture placed in front of the polarizing beam splitter
    /// acts on both photons.
    pub fn with_shared_aperture(aperture: ResolvedAperture, slit: DoubleSlitSpec, magnification: f64) -> Result<Self> {
        slit.validate()?;
        if !(magnification > 0.0) {
            return Err(Error::Config(format!("magnification must be > 0, got {magnification}")));
        }
        Ok(Self { signal_aperture: aperture, idler_aperture: aperture.point_reflected(), slit, magnification })
    }

    /// Slit geometry on the crystal-plane position grid.
    pub fn crystal_slit(&self) -> DoubleSlitSpec {
        self.slit.scaled(self.magnification)
    }
}
