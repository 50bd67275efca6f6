use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("wavelength {wavelength_um} um outside dispersion validity range [{min_um}, {max_um}] um")]
    WavelengthOutOfRange { wavelength_um: f64, min_um: f64, max_um: f64 },
    #[error("evanescent wave: |q| = {q} rad/um is not below k = {k} rad/um")]
    Evanescent { q: f64, k: f64 },
    #[error("k_z fixed point did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("field is in the {found} domain, expected {expected}")]
    Domain { expected: &'static str, found: &'static str },
    #[error("relative aperture units need a measured cone diameter")]
    ConeUnmeasured,
    #[error("detection failed: {0}")]
    Detection(String),
    #[error("fringe not resolved: {0}")]
    FringeResolution(String),
    #[error("distinguishability undefined: no coincidences behind either slit")]
    UndefinedDistinguishability,
    #[error("no phase matching found in the requested range")]
    NoPhaseMatching,
}

impl Error {
    /// Errors caused by the caller's setup rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Range(_) | Error::ConeUnmeasured | Error::WavelengthOutOfRange { .. })
    }
}
