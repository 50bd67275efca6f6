//! Flat `section.key = value` scenario files.
//!
//! Every key has a default, so an empty file is a valid scenario. A
//! `scenario.preset` line selects a named starting point; all other lines
//! override it regardless of their order in the file.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use twinslit_core::dispersion::BBO_SOURCE;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: Option<&str>, message: impl Into<String>) -> Self {
        Self { line: Some(line), key: key.map(str::to_owned), message: message.into() }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self { line: None, key: None, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fidelity {
    Exact,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalPolarization {
    Ordinary,
    Extraordinary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    PumpAdapted,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApertureKind {
    None,
    VerticalSlit,
    InverseSlit,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Relative,
    Absolute,
}

/// A number, or a keyword that is worked out at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto {
    Auto,
    Value(f64),
}

/// Vertical aperture center: a number in aperture units, or the top/bottom
/// of the signal ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterY {
    Upper,
    Lower,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibilityKind {
    Harmonic,
    Extrema,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Line,
    Sheet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalConfig {
    pub length_um: f64,
    pub axis_angle_deg: f64,
    pub pump_wavelength_um: f64,
    pub signal_wavelength_um: f64,
    pub idler_wavelength_um: f64,
    pub signal_polarization: SignalPolarization,
    pub sellmeier_ordinary: [f64; 4],
    pub sellmeier_extraordinary: [f64; 4],
    pub sellmeier_range_um: (f64, f64),
    pub sellmeier_source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PumpConfig {
    pub order_x: u32,
    pub order_y: u32,
    pub waist_um: f64,
    pub offset_x_um: f64,
    pub offset_y_um: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingConfig {
    pub map_n: usize,
    pub map_half_extent: f64,
    pub quadrature: Quadrature,
    pub pump_samples: usize,
    pub pump_half_width_waists: f64,
    pub cut_samples: usize,
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvesConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutsConfig {
    pub band_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub aperture: ApertureKind,
    pub aperture_size: f64,
    pub aperture_units: Units,
    pub plane_scale_mm_per_rad_um: Auto,
    pub aperture_center_x: f64,
    pub aperture_center_y: CenterY,
    pub cone_diameter: Auto,
    pub slit_width_um: f64,
    pub slit_separation_um: f64,
    pub slit_offset_um: f64,
    pub magnification: Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub visibility: VisibilityKind,
    pub pixel_cells: usize,
    pub window_periods: f64,
    pub window_center: Auto,
    pub model: Model,
    pub sheet_qx_step: f64,
    pub sheet_qx_half_extent: f64,
    pub sheet_pump_samples: usize,
    pub sheet_pump_half_width_waists: f64,
    /// `q_sx` of the far-field signal detector in the sheet model.
    pub sheet_detector_qx: Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub y_min_um: f64,
    pub y_max_um: f64,
    pub y_step_um: f64,
    /// Relative aperture widths; when non-empty, `vd` runs one scan per
    /// width plus an open-aperture baseline.
    pub widths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Fidelity,
    /// 0 uses every available core.
    pub workers: usize,
    pub out: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset: String,
    pub crystal: CrystalConfig,
    pub pump: PumpConfig,
    pub grid: GridConfig,
    pub ring: RingConfig,
    pub curves: CurvesConfig,
    pub cuts: CutsConfig,
    pub chain: ChainConfig,
    pub detection: DetectionConfig,
    pub scan: ScanConfig,
    pub run: RunConfig,
}

pub const PRESETS: &[&str] =
    &["default", "tem00", "circle-upper", "circle-lower", "no-aperture", "slit-family", "inverse-slit"];

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            preset: "default".into(),
            crystal: CrystalConfig {
                length_um: 2000.0,
                axis_angle_deg: 41.9,
                pump_wavelength_um: 0.405,
                signal_wavelength_um: 0.81,
                idler_wavelength_um: 0.81,
                signal_polarization: SignalPolarization::Ordinary,
                sellmeier_ordinary: [2.7359, 0.01878, 0.01822, 0.01354],
                sellmeier_extraordinary: [2.3753, 0.01224, 0.01667, 0.01516],
                sellmeier_range_um: (0.22, 1.06),
                sellmeier_source: BBO_SOURCE.into(),
            },
            pump: PumpConfig { order_x: 0, order_y: 1, waist_um: 75.0, offset_x_um: 0.0, offset_y_um: 0.0 },
            grid: GridConfig { n: 512, q_max: 1.6 },
            ring: RingConfig {
                map_n: 128,
                map_half_extent: 0.6,
                quadrature: Quadrature::PumpAdapted,
                pump_samples: 33,
                pump_half_width_waists: 4.0,
                cut_samples: 512,
                prominence: 0.1,
            },
            curves: CurvesConfig { q_min: -1.2, q_max: 1.2, samples: 801 },
            cuts: CutsConfig { band_half_width: 0.05 },
            chain: ChainConfig {
                aperture: ApertureKind::None,
                aperture_size: 0.3,
                aperture_units: Units::Relative,
                plane_scale_mm_per_rad_um: Auto::Auto,
                aperture_center_x: 0.0,
                aperture_center_y: CenterY::Value(0.0),
                cone_diameter: Auto::Auto,
                slit_width_um: 65.0,
                slit_separation_um: 235.0,
                slit_offset_um: 0.0,
                magnification: Auto::Auto,
            },
            detection: DetectionConfig {
                visibility: VisibilityKind::Harmonic,
                pixel_cells: 1,
                window_periods: 2.0,
                window_center: Auto::Auto,
                model: Model::Line,
                sheet_qx_step: 0.02,
                sheet_qx_half_extent: 0.56,
                sheet_pump_samples: 9,
                sheet_pump_half_width_waists: 4.0,
                sheet_detector_qx: Auto::Auto,
            },
            scan: ScanConfig { y_min_um: -250.0, y_max_um: 250.0, y_step_um: 5.0, widths: Vec::new() },
            run: RunConfig { mode: Fidelity::Exact, workers: 0, out: "out".into() },
        }
    }
}

impl ScenarioConfig {
    /// Defaults with a named preset applied.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let mut c = Self { preset: name.into(), ..Self::default() };
        match name {
            "default" => {}
            "tem00" => c.pump.order_y = 0,
            "circle-upper" | "circle-lower" => {
                c.chain.aperture = ApertureKind::Circle;
                c.chain.aperture_size = 0.3;
                c.chain.aperture_center_y = if name == "circle-upper" { CenterY::Upper } else { CenterY::Lower };
            }
            "no-aperture" => c.detection.model = Model::Sheet,
            "slit-family" => {
                c.chain.aperture = ApertureKind::VerticalSlit;
                c.chain.aperture_size = 0.5;
                c.detection.model = Model::Sheet;
                c.scan.widths = vec![0.8, 0.5, 0.23];
            }
            "inverse-slit" => {
                c.chain.aperture = ApertureKind::InverseSlit;
                c.chain.aperture_size = 0.3;
                c.detection.model = Model::Sheet;
            }
            other => {
                return Err(ConfigError::general(format!("unknown preset `{other}` (known: {})", PRESETS.join(", "))))
            }
        }
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, value) =
                body.split_once('=').ok_or_else(|| ConfigError::at(line, None, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::at(line, None, "missing key before `=`"));
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::at(line, Some(key), format!("unknown key `{key}`")));
            }
            if let Some(first) = seen.insert(key.to_owned(), line) {
                return Err(ConfigError::at(line, Some(key), format!("`{key}` already set on line {first}")));
            }
            entries.push((line, key.to_owned(), unquote(value).to_owned()));
        }
        let mut config = match entries.iter().find(|(_, k, _)| k == "scenario.preset") {
            Some((line, _, v)) => {
                Self::preset(v).map_err(|e| ConfigError::at(*line, Some("scenario.preset"), e.message))?
            }
            None => Self::default(),
        };
        for (line, key, value) in &entries {
            if key != "scenario.preset" {
                config.set(key, value).map_err(|m| ConfigError::at(*line, Some(key), format!("{key}: {m}")))?;
            }
        }
        config.validate().map_err(|(key, message)| {
            let message = format!("{key}: {message}");
            match seen.get(key) {
                Some(&line) => ConfigError::at(line, Some(key), message),
                None => ConfigError { line: None, key: Some(key.into()), message },
            }
        })?;
        Ok(config)
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let c = self;
        match key {
            "scenario.preset" => *c = Self::preset(value).map_err(|e| e.message)?,
            "crystal.length_um" => c.crystal.length_um = num(value)?,
            "crystal.axis_angle_deg" => c.crystal.axis_angle_deg = num(value)?,
            "crystal.pump_wavelength_um" => c.crystal.pump_wavelength_um = num(value)?,
            "crystal.signal_wavelength_um" => c.crystal.signal_wavelength_um = num(value)?,
            "crystal.idler_wavelength_um" => c.crystal.idler_wavelength_um = num(value)?,
            "crystal.signal_polarization" => {
                c.crystal.signal_polarization = choice(
                    value,
                    &[("ordinary", SignalPolarization::Ordinary), ("extraordinary", SignalPolarization::Extraordinary)],
                )?
            }
            "crystal.sellmeier_ordinary" => c.crystal.sellmeier_ordinary = four(value)?,
            "crystal.sellmeier_extraordinary" => c.crystal.sellmeier_extraordinary = four(value)?,
            "crystal.sellmeier_range_um" => {
                let v = list(value)?;
                if v.len() != 2 {
                    return Err(format!("expected `min, max`, got {} values", v.len()));
                }
                c.crystal.sellmeier_range_um = (v[0], v[1]);
            }
            "crystal.sellmeier_source" => c.crystal.sellmeier_source = value.into(),
            "pump.order_x" => c.pump.order_x = int(value)?,
            "pump.order_y" => c.pump.order_y = int(value)?,
            "pump.waist_um" => c.pump.waist_um = num(value)?,
            "pump.offset_x_um" => c.pump.offset_x_um = num(value)?,
            "pump.offset_y_um" => c.pump.offset_y_um = num(value)?,
            "grid.n" => c.grid.n = int(value)?,
            "grid.q_max" => c.grid.q_max = num(value)?,
            "ring.map_n" => c.ring.map_n = int(value)?,
            "ring.map_half_extent" => c.ring.map_half_extent = num(value)?,
            "ring.quadrature" => {
                c.ring.quadrature =
                    choice(value, &[("pump-adapted", Quadrature::PumpAdapted), ("grid", Quadrature::Grid)])?
            }
            "ring.pump_samples" => c.ring.pump_samples = int(value)?,
            "ring.pump_half_width_waists" => c.ring.pump_half_width_waists = num(value)?,
            "ring.cut_samples" => c.ring.cut_samples = int(value)?,
            "ring.prominence" => c.ring.prominence = num(value)?,
            "curves.q_min" => c.curves.q_min = num(value)?,
            "curves.q_max" => c.curves.q_max = num(value)?,
            "curves.samples" => c.curves.samples = int(value)?,
            "cuts.band_half_width" => c.cuts.band_half_width = num(value)?,
            "chain.aperture" => {
                c.chain.aperture = choice(
                    value,
                    &[
                        ("none", ApertureKind::None),
                        ("vertical-slit", ApertureKind::VerticalSlit),
                        ("inverse-slit", ApertureKind::InverseSlit),
                        ("circle", ApertureKind::Circle),
                    ],
                )?
            }
            "chain.aperture_size" => c.chain.aperture_size = num(value)?,
            "chain.aperture_units" => {
                c.chain.aperture_units = choice(value, &[("relative", Units::Relative), ("absolute", Units::Absolute)])?
            }
            "chain.plane_scale_mm_per_rad_um" => c.chain.plane_scale_mm_per_rad_um = auto(value)?,
            "chain.aperture_center_x" => c.chain.aperture_center_x = num(value)?,
            "chain.aperture_center_y" => {
                c.chain.aperture_center_y = match value {
                    "upper" => CenterY::Upper,
                    "lower" => CenterY::Lower,
                    v => {
                        CenterY::Value(num(v).map_err(|_| format!("expected `upper`, `lower` or a number, got `{v}`"))?)
                    }
                }
            }
            "chain.cone_diameter" => c.chain.cone_diameter = auto(value)?,
            "chain.slit_width_um" => c.chain.slit_width_um = num(value)?,
            "chain.slit_separation_um" => c.chain.slit_separation_um = num(value)?,
            "chain.slit_offset_um" => c.chain.slit_offset_um = num(value)?,
            "chain.magnification" => c.chain.magnification = auto(value)?,
            "detection.visibility" => {
                c.detection.visibility =
                    choice(value, &[("harmonic", VisibilityKind::Harmonic), ("extrema", VisibilityKind::Extrema)])?
            }
            "detection.pixel_cells" => c.detection.pixel_cells = int(value)?,
            "detection.window_periods" => c.detection.window_periods = num(value)?,
            "detection.window_center" => c.detection.window_center = auto(value)?,
            "detection.model" => c.detection.model = choice(value, &[("line", Model::Line), ("sheet", Model::Sheet)])?,
            "detection.sheet_qx_step" => c.detection.sheet_qx_step = num(value)?,
            "detection.sheet_qx_half_extent" => c.detection.sheet_qx_half_extent = num(value)?,
            "detection.sheet_pump_samples" => c.detection.sheet_pump_samples = int(value)?,
            "detection.sheet_pump_half_width_waists" => c.detection.sheet_pump_half_width_waists = num(value)?,
            "detection.sheet_detector_qx" => c.detection.sheet_detector_qx = auto(value)?,
            "scan.y_min_um" => c.scan.y_min_um = num(value)?,
            "scan.y_max_um" => c.scan.y_max_um = num(value)?,
            "scan.y_step_um" => c.scan.y_step_um = num(value)?,
            "scan.widths" => c.scan.widths = if value.is_empty() { Vec::new() } else { list(value)? },
            "run.mode" => c.run.mode = choice(value, &[("exact", Fidelity::Exact), ("fast", Fidelity::Fast)])?,
            "run.workers" => c.run.workers = int(value)?,
            "run.out" => {
                if value.is_empty() {
                    return Err("output directory must not be empty".into());
                }
                c.run.out = value.into()
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Cheap range checks; physics-level checks happen when the scenario is
    /// built. Returns the offending key.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        fn positive(key: &'static str, v: f64) -> Result<(), (&'static str, String)> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((key, format!("must be a positive finite number, got {v}")))
            }
        }
        fn finite(key: &'static str, v: f64) -> Result<(), (&'static str, String)> {
            if v.is_finite() {
                Ok(())
            } else {
                Err((key, format!("must be finite, got {v}")))
            }
        }
        fn pow2(key: &'static str, n: usize, min: usize) -> Result<(), (&'static str, String)> {
            if n.is_power_of_two() && n >= min {
                Ok(())
            } else {
                Err((key, format!("must be a power of two >= {min}, got {n}")))
            }
        }
        let c = self;
        positive("crystal.length_um", c.crystal.length_um)?;
        if !(0.0..=90.0).contains(&c.crystal.axis_angle_deg) {
            return Err(("crystal.axis_angle_deg", format!("must lie in [0, 90], got {}", c.crystal.axis_angle_deg)));
        }
        positive("crystal.pump_wavelength_um", c.crystal.pump_wavelength_um)?;
        positive("crystal.signal_wavelength_um", c.crystal.signal_wavelength_um)?;
        positive("crystal.idler_wavelength_um", c.crystal.idler_wavelength_um)?;
        positive("pump.waist_um", c.pump.waist_um)?;
        finite("pump.offset_x_um", c.pump.offset_x_um)?;
        finite("pump.offset_y_um", c.pump.offset_y_um)?;
        if c.pump.order_x > 20 || c.pump.order_y > 20 {
            return Err(("pump.order_y", "Hermite orders above 20 are not supported".into()));
        }
        pow2("grid.n", c.grid.n, 32)?;
        positive("grid.q_max", c.grid.q_max)?;
        pow2("ring.map_n", c.ring.map_n, 32)?;
        positive("ring.map_half_extent", c.ring.map_half_extent)?;
        if c.ring.pump_samples < 2 {
            return Err(("ring.pump_samples", "needs at least 2 samples".into()));
        }
        positive("ring.pump_half_width_waists", c.ring.pump_half_width_waists)?;
        if c.ring.cut_samples < 16 {
            return Err(("ring.cut_samples", "needs at least 16 samples".into()));
        }
        if !(0.0..1.0).contains(&c.ring.prominence) {
            return Err(("ring.prominence", format!("must lie in [0, 1), got {}", c.ring.prominence)));
        }
        if !(c.curves.q_max > c.curves.q_min) {
            return Err(("curves.q_max", "must exceed curves.q_min".into()));
        }
        if c.curves.samples < 8 {
            return Err(("curves.samples", "needs at least 8 samples".into()));
        }
        positive("cuts.band_half_width", c.cuts.band_half_width)?;
        if c.chain.aperture != ApertureKind::None {
            positive("chain.aperture_size", c.chain.aperture_size)?;
            if c.chain.aperture_units == Units::Relative && c.chain.aperture_size > 1.5 {
                return Err((
                    "chain.aperture_size",
                    format!("relative size must be <= 1.5, got {}", c.chain.aperture_size),
                ));
            }
        }
        if let Auto::Value(v) = c.chain.plane_scale_mm_per_rad_um {
            positive("chain.plane_scale_mm_per_rad_um", v)?;
        }
        finite("chain.aperture_center_x", c.chain.aperture_center_x)?;
        if let CenterY::Value(v) = c.chain.aperture_center_y {
            finite("chain.aperture_center_y", v)?;
        }
        if let Auto::Value(v) = c.chain.cone_diameter {
            positive("chain.cone_diameter", v)?;
        }
        positive("chain.slit_width_um", c.chain.slit_width_um)?;
        positive("chain.slit_separation_um", c.chain.slit_separation_um)?;
        if c.chain.slit_separation_um <= c.chain.slit_width_um {
            return Err(("chain.slit_separation_um", "openings overlap: separation must exceed width".into()));
        }
        finite("chain.slit_offset_um", c.chain.slit_offset_um)?;
        if let Auto::Value(v) = c.chain.magnification {
            positive("chain.magnification", v)?;
        }
        if c.detection.pixel_cells.is_multiple_of(2) {
            return Err(("detection.pixel_cells", format!("must be odd, got {}", c.detection.pixel_cells)));
        }
        positive("detection.window_periods", c.detection.window_periods)?;
        if let Auto::Value(v) = c.detection.window_center {
            finite("detection.window_center", v)?;
        }
        positive("detection.sheet_qx_step", c.detection.sheet_qx_step)?;
        if !(c.detection.sheet_qx_half_extent >= 0.0) {
            return Err(("detection.sheet_qx_half_extent", "must be >= 0".into()));
        }
        if c.detection.sheet_pump_samples == 0 {
            return Err(("detection.sheet_pump_samples", "needs at least 1 sample".into()));
        }
        positive("detection.sheet_pump_half_width_waists", c.detection.sheet_pump_half_width_waists)?;
        if let Auto::Value(v) = c.detection.sheet_detector_qx {
            if !(v.abs() <= c.detection.sheet_qx_half_extent) {
                return Err((
                    "detection.sheet_detector_qx",
                    format!("must lie within +-detection.sheet_qx_half_extent, got {v}"),
                ));
            }
        }
        finite("scan.y_min_um", c.scan.y_min_um)?;
        if !(c.scan.y_max_um >= c.scan.y_min_um) {
            return Err(("scan.y_max_um", "must be >= scan.y_min_um".into()));
        }
        positive("scan.y_step_um", c.scan.y_step_um)?;
        if (c.scan.y_max_um - c.scan.y_min_um) / c.scan.y_step_um > 100_000.0 {
            return Err(("scan.y_step_um", "more than 100000 scan positions".into()));
        }
        for &w in &c.scan.widths {
            if !(w > 0.0 && w <= 1.5) {
                return Err(("scan.widths", format!("relative widths must lie in (0, 1.5], got {w}")));
            }
        }
        Ok(())
    }

    /// Canonical text: every key, in schema order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (key, value) in self.entries() {
            let s = key.split('.').next().unwrap_or("");
            if s != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = s;
            }
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = self;
        vec![
            ("scenario.preset", c.preset.clone()),
            ("crystal.length_um", f(c.crystal.length_um)),
            ("crystal.axis_angle_deg", f(c.crystal.axis_angle_deg)),
            ("crystal.pump_wavelength_um", f(c.crystal.pump_wavelength_um)),
            ("crystal.signal_wavelength_um", f(c.crystal.signal_wavelength_um)),
            ("crystal.idler_wavelength_um", f(c.crystal.idler_wavelength_um)),
            (
                "crystal.signal_polarization",
                match c.crystal.signal_polarization {
                    SignalPolarization::Ordinary => "ordinary",
                    SignalPolarization::Extraordinary => "extraordinary",
                }
                .into(),
            ),
            ("crystal.sellmeier_ordinary", join(&c.crystal.sellmeier_ordinary)),
            ("crystal.sellmeier_extraordinary", join(&c.crystal.sellmeier_extraordinary)),
            ("crystal.sellmeier_range_um", join(&[c.crystal.sellmeier_range_um.0, c.crystal.sellmeier_range_um.1])),
            ("crystal.sellmeier_source", format!("\"{}\"", c.crystal.sellmeier_source)),
            ("pump.order_x", c.pump.order_x.to_string()),
            ("pump.order_y", c.pump.order_y.to_string()),
            ("pump.waist_um", f(c.pump.waist_um)),
            ("pump.offset_x_um", f(c.pump.offset_x_um)),
            ("pump.offset_y_um", f(c.pump.offset_y_um)),
            ("grid.n", c.grid.n.to_string()),
            ("grid.q_max", f(c.grid.q_max)),
            ("ring.map_n", c.ring.map_n.to_string()),
            ("ring.map_half_extent", f(c.ring.map_half_extent)),
            (
                "ring.quadrature",
                match c.ring.quadrature {
                    Quadrature::PumpAdapted => "pump-adapted",
                    Quadrature::Grid => "grid",
                }
                .into(),
            ),
            ("ring.pump_samples", c.ring.pump_samples.to_string()),
            ("ring.pump_half_width_waists", f(c.ring.pump_half_width_waists)),
            ("ring.cut_samples", c.ring.cut_samples.to_string()),
            ("ring.prominence", f(c.ring.prominence)),
            ("curves.q_min", f(c.curves.q_min)),
            ("curves.q_max", f(c.curves.q_max)),
            ("curves.samples", c.curves.samples.to_string()),
            ("cuts.band_half_width", f(c.cuts.band_half_width)),
            (
                "chain.aperture",
                match c.chain.aperture {
                    ApertureKind::None => "none",
                    ApertureKind::VerticalSlit => "vertical-slit",
                    ApertureKind::InverseSlit => "inverse-slit",
                    ApertureKind::Circle => "circle",
                }
                .into(),
            ),
            ("chain.aperture_size", f(c.chain.aperture_size)),
            (
                "chain.aperture_units",
                match c.chain.aperture_units {
                    Units::Relative => "relative",
                    Units::Absolute => "absolute",
                }
                .into(),
            ),
            ("chain.plane_scale_mm_per_rad_um", c.chain.plane_scale_mm_per_rad_um.to_string()),
            ("chain.aperture_center_x", f(c.chain.aperture_center_x)),
            (
                "chain.aperture_center_y",
                match c.chain.aperture_center_y {
                    CenterY::Upper => "upper".into(),
                    CenterY::Lower => "lower".into(),
                    CenterY::Value(v) => f(v),
                },
            ),
            ("chain.cone_diameter", c.chain.cone_diameter.to_string()),
            ("chain.slit_width_um", f(c.chain.slit_width_um)),
            ("chain.slit_separation_um", f(c.chain.slit_separation_um)),
            ("chain.slit_offset_um", f(c.chain.slit_offset_um)),
            ("chain.magnification", c.chain.magnification.to_string()),
            (
                "detection.visibility",
                match c.detection.visibility {
                    VisibilityKind::Harmonic => "harmonic",
                    VisibilityKind::Extrema => "extrema",
                }
                .into(),
            ),
            ("detection.pixel_cells", c.detection.pixel_cells.to_string()),
            ("detection.window_periods", f(c.detection.window_periods)),
            ("detection.window_center", c.detection.window_center.to_string()),
            (
                "detection.model",
                match c.detection.model {
                    Model::Line => "line",
                    Model::Sheet => "sheet",
                }
                .into(),
            ),
            ("detection.sheet_qx_step", f(c.detection.sheet_qx_step)),
            ("detection.sheet_qx_half_extent", f(c.detection.sheet_qx_half_extent)),
            ("detection.sheet_pump_samples", c.detection.sheet_pump_samples.to_string()),
            ("detection.sheet_pump_half_width_waists", f(c.detection.sheet_pump_half_width_waists)),
            ("detection.sheet_detector_qx", c.detection.sheet_detector_qx.to_string()),
            ("scan.y_min_um", f(c.scan.y_min_um)),
            ("scan.y_max_um", f(c.scan.y_max_um)),
            ("scan.y_step_um", f(c.scan.y_step_um)),
            ("scan.widths", join(&c.scan.widths)),
            (
                "run.mode",
                match c.run.mode {
                    Fidelity::Exact => "exact",
                    Fidelity::Fast => "fast",
                }
                .into(),
            ),
            ("run.workers", c.run.workers.to_string()),
            ("run.out", c.run.out.clone()),
        ]
    }

    /// Idler detector positions of the scan, µm.
    pub fn scan_positions(&self) -> Vec<f64> {
        let s = &self.scan;
        let count = ((s.y_max_um - s.y_min_um) / s.y_step_um + 1e-9).floor() as usize + 1;
        (0..count).map(|i| s.y_min_um + i as f64 * s.y_step_um).collect()
    }
}

/// Every recognised key, in canonical order.
pub const KEYS: &[&str] = &[
    "scenario.preset",
    "crystal.length_um",
    "crystal.axis_angle_deg",
    "crystal.pump_wavelength_um",
    "crystal.signal_wavelength_um",
    "crystal.idler_wavelength_um",
    "crystal.signal_polarization",
    "crystal.sellmeier_ordinary",
    "crystal.sellmeier_extraordinary",
    "crystal.sellmeier_range_um",
    "crystal.sellmeier_source",
    "pump.order_x",
    "pump.order_y",
    "pump.waist_um",
    "pump.offset_x_um",
    "pump.offset_y_um",
    "grid.n",
    "grid.q_max",
    "ring.map_n",
    "ring.map_half_extent",
    "ring.quadrature",
    "ring.pump_samples",
    "ring.pump_half_width_waists",
    "ring.cut_samples",
    "ring.prominence",
    "curves.q_min",
    "curves.q_max",
    "curves.samples",
    "cuts.band_half_width",
    "chain.aperture",
    "chain.aperture_size",
    "chain.aperture_units",
    "chain.plane_scale_mm_per_rad_um",
    "chain.aperture_center_x",
    "chain.aperture_center_y",
    "chain.cone_diameter",
    "chain.slit_width_um",
    "chain.slit_separation_um",
    "chain.slit_offset_um",
    "chain.magnification",
    "detection.visibility",
    "detection.pixel_cells",
    "detection.window_periods",
    "detection.window_center",
    "detection.model",
    "detection.sheet_qx_step",
    "detection.sheet_qx_half_extent",
    "detection.sheet_pump_samples",
    "detection.sheet_pump_half_width_waists",
    "detection.sheet_detector_qx",
    "scan.y_min_um",
    "scan.y_max_um",
    "scan.y_step_um",
    "scan.widths",
    "run.mode",
    "run.workers",
    "run.out",
];

impl fmt::Display for Auto {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Auto::Auto => out.write_str("auto"),
            Auto::Value(v) => out.write_str(&f(*v)),
        }
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| f(*v)).collect::<Vec<_>>().join(", ")
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

fn num(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got `{v}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got `{v}`"))
    }
}

fn int<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(|s| num(s.trim())).collect()
}

fn four(v: &str) -> Result<[f64; 4], String> {
    let l = list(v)?;
    l.try_into().map_err(|l: Vec<f64>| format!("expected 4 coefficients `a, b, c, d`, got {}", l.len()))
}

fn auto(v: &str) -> Result<Auto, String> {
    if v == "auto" {
        Ok(Auto::Auto)
    } else {
        num(v).map(Auto::Value).map_err(|_| format!("expected `auto` or a number, got `{v}`"))
    }
}

fn choice<T: Copy>(v: &str, options: &[(&str, T)]) -> Result<T, String> {
    options.iter().find(|(name, _)| *name == v).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        format!("expected one of {}, got `{v}`", names.join(" | "))
    })
}
