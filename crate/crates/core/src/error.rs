use thiserror::Error;

/// Failures raised by the source model.
///
/// The variants split into caller mistakes (`Domain`, `Precondition`,
/// `Usage`) and solver outcomes (`NoPhaseMatching`, `Model`, `NoSignal`,
/// `SingularResolution`); the CLI maps the two groups to different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("wavelength {wavelength_um} um outside the validity window [{min_um}, {max_um}] um")]
    Domain {
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid usage: {0}")]
    Usage(String),
    #[error("no phase matching: {0}")]
    NoPhaseMatching(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("no signal on slice (peak amplitude {peak:e})")]
    NoSignal { peak: f64 },
    #[error("resolution is singular: dispersion vanishes at {wavelength_nm} nm")]
    SingularResolution { wavelength_nm: f64 },
}

impl Error {
    /// True for numerical failures of a solver, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoPhaseMatching(_)
                | Error::Model(_)
                | Error::NoSignal { .. }
                | Error::SingularResolution { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
