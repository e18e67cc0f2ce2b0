use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate deformation: det F = {det:.3e} at {location}")]
    DegenerateDeformation { det: f64, location: String },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("derivative order {order} needs spline degree >= {needed}, space has {degree}")]
    UnsupportedOrder { order: usize, needed: usize, degree: usize },
    #[error("unknown boundary tag '{0}'")]
    UnknownTag(String),
    #[error("singular quadrature did not converge: {0}")]
    QuadratureDivergence(String),
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),
    #[error("deformation is not injective: gap = {gap:.4e}")]
    NonInjective { gap: f64 },
    #[error("solver did not converge: {0}")]
    SolverDivergence(String),
    #[error("line search found no admissible step: {0}")]
    LineSearchFailure(String),
    #[error("time step fell below the floor {dt_floor:.3e} at t = {t:.6}")]
    StepFloorReached { t: f64, dt_floor: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Short machine-readable tag, used in JSON error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateDeformation { .. } => "DegenerateDeformation",
            Error::OutOfRange(_) => "OutOfRange",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::UnsupportedOrder { .. } => "UnsupportedOrder",
            Error::UnknownTag(_) => "UnknownTag",
            Error::QuadratureDivergence(_) => "QuadratureDivergence",
            Error::InvalidExponents(_) => "InvalidExponents",
            Error::NonInjective { .. } => "NonInjective",
            Error::SolverDivergence(_) => "SolverDivergence",
            Error::LineSearchFailure(_) => "LineSearchFailure",
            Error::StepFloorReached { .. } => "StepFloorReached",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }

    /// Whether the error comes from bad input rather than a failed solve.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::InvalidExponents(_)
                | Error::UnknownTag(_)
                | Error::OutOfDomain { .. }
                | Error::UnsupportedOrder { .. }
                | Error::OutOfRange(_)
                | Error::DegenerateDeformation { .. }
        )
    }
}
