use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("propagator evaluated on the light cone (r = {r}, tau = {tau}) with epsilon = 0")]
    LightConeSingularity { r: f64, tau: f64 },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    ConvergenceFailure { estimate: f64, tolerance: f64 },

    #[error("state has zero norm")]
    ZeroState,

    #[error("state has population in the F level ({weight:e})")]
    InvalidLevels { weight: f64 },

    #[error("invalid two-qubit density matrix: {0}")]
    InvalidDensity(String),

    #[error("|b| > |a|: the pulse must be applied to atom 1 (use the mirrored plan)")]
    OrderingError,

    #[error("b = 0: nothing to concentrate")]
    DegenerateInput,

    #[error("concentration plan does not match the state (deviation {deviation:e})")]
    PlanMismatch { deviation: f64 },

    #[error("joint counts sum to zero")]
    EmptyCounts,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("Hilbert space dimension {dim} exceeds the cap {cap}")]
    DimensionExceeded { dim: usize, cap: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("intensity {intensity:e} below the g2 denominator guard")]
    DenominatorUnderflow { intensity: f64 },

    #[error("nearest dressed eigenstate has overlap {overlap} with the bare state")]
    EigenstateAmbiguity { overlap: f64 },
}

impl Error {
    /// True for failures of a numerical method rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure { .. }
                | Error::NumericalFailure(_)
                | Error::EigenstateAmbiguity { .. }
        )
    }
}
