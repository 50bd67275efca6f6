//! Turns a [`ScenarioConfig`] into the core crate's physical objects.

use twinslit_core::biphoton::{ring_extent, singles_map_2d, Open, PartnerQuadrature, RealMap2D};
use twinslit_core::coincidence::{CoincidenceModel, ScanSettings, SheetSampling};
use twinslit_core::detection::{FringeWindow, VisibilityConvention};
use twinslit_core::dispersion::{CrystalSpec, KzMode, Polarization, SellmeierSet};
use twinslit_core::grid::GridSpec;
use twinslit_core::optical_chain::{
    matched_magnification, measure_cone_diameter, ApertureShape, ApertureSpec, ApertureUnits, DoubleSlitSpec,
    OpticalChain, ResolvedAperture,
};
use twinslit_core::pump_modes::PumpMode;
use twinslit_core::{Arm, Error, WaveVector};

use crate::config::{
    ApertureKind, Auto, CenterY, Fidelity, Model, Quadrature, ScenarioConfig, SignalPolarization, Units, VisibilityKind,
};
use crate::error::RunError;

/// Fraction by which the momentum grid must extend past the ring.
pub const RING_MARGIN: f64 = 0.15;

/// Aperture-plane diameter of the emission cone used when the plane scale
/// is `auto`, mm.
pub const AUTO_CONE_MM: f64 = 10.0;

/// Clearance between an inverse slit's blocked strip and the automatic
/// far-field detector column, rad/µm.
pub const DETECTOR_CLEARANCE: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub crystal: CrystalSpec,
    pub pump: PumpMode,
    pub mode: KzMode,
    /// Lowest and highest signal `q_y` on the ring at `q_x = 0`.
    pub ring: (f64, f64),
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self, RunError> {
        let c = &config.crystal;
        let (lo, hi) = c.sellmeier_range_um;
        let crystal = CrystalSpec {
            length_um: c.length_um,
            axis_angle: c.axis_angle_deg.to_radians(),
            pump_wavelength_um: c.pump_wavelength_um,
            signal_wavelength_um: c.signal_wavelength_um,
            idler_wavelength_um: c.idler_wavelength_um,
            ordinary: SellmeierSet::new(c.sellmeier_ordinary, (lo, hi))?,
            extraordinary: SellmeierSet::new(c.sellmeier_extraordinary, (lo, hi))?,
            signal_polarization: match c.signal_polarization {
                SignalPolarization::Ordinary => Polarization::Ordinary,
                SignalPolarization::Extraordinary => Polarization::Extraordinary,
            },
        };
        crystal.validate()?;
        let p = &config.pump;
        let pump = PumpMode::new(p.order_x, p.order_y, p.waist_um)?.with_offset(p.offset_x_um, p.offset_y_um);
        let mode = match config.run.mode {
            Fidelity::Exact => KzMode::Exact,
            Fidelity::Fast => KzMode::Paraxial,
        };
        let ring = ring_extent(&crystal, mode)?;
        Ok(Self { config, crystal, pump, mode, ring })
    }

    /// Center of the signal ring on the `q_y` axis.
    pub fn ring_center(&self) -> f64 {
        0.5 * (self.ring.0 + self.ring.1)
    }

    /// The `(q_sy, q_iy)` grid, checked to hold both rings with margin.
    pub fn grid(&self) -> Result<GridSpec, RunError> {
        let g = GridSpec::new(self.config.grid.n, self.config.grid.q_max)?;
        let reach = self.ring.0.abs().max(self.ring.1.abs());
        if reach * (1.0 + RING_MARGIN) > g.q_max {
            return Err(Error::Config(format!(
                "grid.q_max = {} does not cover the ring (|q_y| up to {reach:.4}) with {:.0}% margin",
                g.q_max,
                RING_MARGIN * 100.0
            ))
            .into());
        }
        Ok(g)
    }

    /// 2-D map grid centered on one arm's ring.
    pub fn map_grid(&self, arm: Arm) -> Result<GridSpec, RunError> {
        let r = &self.config.ring;
        let center = match arm {
            Arm::Signal => self.ring_center(),
            Arm::Idler => -self.ring_center(),
        };
        let g = GridSpec::new(r.map_n, r.map_half_extent)?.with_center(WaveVector::new(0.0, center));
        g.check_coverage(g.center, 0.5 * (self.ring.1 - self.ring.0), RING_MARGIN)?;
        Ok(g)
    }

    pub fn quadrature(&self) -> PartnerQuadrature {
        match self.config.ring.quadrature {
            Quadrature::Grid => PartnerQuadrature::Grid,
            Quadrature::PumpAdapted => PartnerQuadrature::PumpAdapted {
                samples: self.config.ring.pump_samples,
                half_width_waists: self.config.ring.pump_half_width_waists,
            },
        }
    }

    /// Unapertured singles map of one arm.
    pub fn singles_map(&self, arm: Arm) -> Result<RealMap2D, RunError> {
        let g = self.map_grid(arm)?;
        Ok(singles_map_2d(arm, &Open, &Open, g, &self.pump, &self.crystal, self.mode, self.quadrature())?)
    }

    /// Cone diameter in rad/µm: configured, or measured on the signal map.
    pub fn cone_diameter(&self) -> Result<f64, RunError> {
        match self.config.chain.cone_diameter {
            Auto::Value(v) => Ok(v),
            Auto::Auto => Ok(measure_cone_diameter(&self.singles_map(Arm::Signal)?)?),
        }
    }

    fn needs_cone(&self, kind: ApertureKind) -> bool {
        let chain = &self.config.chain;
        kind != ApertureKind::None
            && (chain.aperture_units == Units::Relative || chain.plane_scale_mm_per_rad_um == Auto::Auto)
    }

    /// Measures the cone only if the configured apertures need it.
    pub fn cone_if_needed(&self) -> Result<Option<f64>, RunError> {
        let mut kinds = vec![self.config.chain.aperture];
        if !self.config.scan.widths.is_empty() {
            kinds.push(ApertureKind::VerticalSlit);
        }
        if kinds.into_iter().any(|k| self.needs_cone(k)) {
            self.cone_diameter().map(Some)
        } else {
            Ok(None)
        }
    }

    /// Plane scale in mm per rad/µm.
    pub fn plane_scale(&self, cone: Option<f64>) -> Result<f64, RunError> {
        match self.config.chain.plane_scale_mm_per_rad_um {
            Auto::Value(v) => Ok(v),
            Auto::Auto => Ok(AUTO_CONE_MM / cone.ok_or(Error::ConeUnmeasured)?),
        }
    }

    /// The configured aperture, optionally with another shape or size.
    pub fn aperture(&self, kind: ApertureKind, size: f64, cone: Option<f64>) -> Result<ResolvedAperture, RunError> {
        let chain = &self.config.chain;
        let shape = match kind {
            ApertureKind::None => return Ok(ResolvedAperture::open()),
            ApertureKind::VerticalSlit => ApertureShape::VerticalSlit { width: size },
            ApertureKind::InverseSlit => ApertureShape::InverseSlit { width: size },
            ApertureKind::Circle => ApertureShape::Circle { diameter: size },
        };
        let units = match chain.aperture_units {
            Units::Relative => ApertureUnits::Relative,
            Units::Absolute => ApertureUnits::Absolute { plane_scale_mm_per_rad_um: self.plane_scale(cone)? },
        };
        // Momentum per aperture unit, to express the ring edges in those units.
        let per_unit = match units {
            ApertureUnits::Relative => cone.ok_or(Error::ConeUnmeasured)?,
            ApertureUnits::Absolute { plane_scale_mm_per_rad_um } => 1.0 / plane_scale_mm_per_rad_um,
        };
        let cy = match chain.aperture_center_y {
            CenterY::Upper => self.ring.1 / per_unit,
            CenterY::Lower => self.ring.0 / per_unit,
            CenterY::Value(v) => v,
        };
        let spec = ApertureSpec { shape, units, center: (chain.aperture_center_x, cy) };
        Ok(spec.resolve(cone)?)
    }

    pub fn configured_aperture(&self, cone: Option<f64>) -> Result<ResolvedAperture, RunError> {
        self.aperture(self.config.chain.aperture, self.config.chain.aperture_size, cone)
    }

    pub fn slit(&self) -> DoubleSlitSpec {
        let c = &self.config.chain;
        DoubleSlitSpec { width_um: c.slit_width_um, separation_um: c.slit_separation_um, offset_um: c.slit_offset_um }
    }

    pub fn magnification(&self) -> f64 {
        match self.config.chain.magnification {
            Auto::Value(m) => m,
            Auto::Auto => matched_magnification(&self.slit(), &self.pump),
        }
    }

    pub fn chain(&self, aperture: ResolvedAperture) -> Result<OpticalChain, RunError> {
        Ok(OpticalChain::with_shared_aperture(aperture, self.slit(), self.magnification())?)
    }

    /// Far-field detector column of the sheet model: `q_x = 0`, or just
    /// outside the strip an inverse slit blocks.
    pub fn detector_qx(&self, aperture: &ResolvedAperture) -> f64 {
        let d = &self.config.detection;
        match (d.sheet_detector_qx, d.model, aperture.shape) {
            (Auto::Value(v), _, _) => v,
            (Auto::Auto, Model::Sheet, ApertureShape::InverseSlit { width }) => {
                let edge = aperture.center.qx + 0.5 * width + DETECTOR_CLEARANCE;
                (edge / d.sheet_qx_step).ceil() * d.sheet_qx_step
            }
            _ => 0.0,
        }
    }

    /// Fringe window center: the aperture center for a circle, else the
    /// upper ring edge in the detector's `q_x` column.
    pub fn window_center(&self, aperture: &ResolvedAperture) -> f64 {
        match self.config.detection.window_center {
            Auto::Value(v) => v,
            Auto::Auto => match aperture.shape {
                ApertureShape::Circle { .. } => aperture.center.qy,
                _ => {
                    let radius = 0.5 * (self.ring.1 - self.ring.0);
                    let qx = match self.config.detection.model {
                        Model::Sheet => self.detector_qx(aperture),
                        Model::Line => 0.0,
                    };
                    self.ring_center() + (radius * radius - qx * qx).max(0.0).sqrt()
                }
            },
        }
    }

    pub fn scan_settings(&self, aperture: &ResolvedAperture) -> ScanSettings {
        let d = &self.config.detection;
        let crystal_separation = self.slit().separation_um / self.magnification();
        ScanSettings {
            window: FringeWindow::around(self.window_center(aperture), crystal_separation, d.window_periods),
            convention: match d.visibility {
                VisibilityKind::Harmonic => VisibilityConvention::Harmonic,
                VisibilityKind::Extrema => VisibilityConvention::AdjacentExtrema,
            },
            pixel_cells: d.pixel_cells,
            model: match d.model {
                Model::Line => CoincidenceModel::Line,
                Model::Sheet => CoincidenceModel::Sheet(SheetSampling {
                    qx_step: d.sheet_qx_step,
                    qx_half_extent: d.sheet_qx_half_extent,
                    pump_samples: d.sheet_pump_samples,
                    pump_half_width_waists: d.sheet_pump_half_width_waists,
                    detector_qx: self.detector_qx(aperture),
                }),
            },
        }
    }
}
