use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every variant that corresponds to a numerical guard reports a stable
/// name through [`Error::guard_name`]; the experiment runner prints that
/// name on the diagnostic stream.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("field has non-finite value at index {0}")]
    NonFinite(usize),

    #[error("field integrates to {0}; cannot normalize")]
    ZeroMass(f64),

    #[error("negative value {value:e} at index {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("density integrates to {0}, expected 1")]
    NotNormalized(f64),

    #[error("p carries mass at index {index} where q vanishes")]
    SupportViolation { index: usize },

    #[error("kernel standard deviation {std:e} is below 4 lattice spacings ({spacing:e})")]
    UnresolvedKernel { std: f64, spacing: f64 },

    #[error("kernel lattice truncates tail mass {tail:e}")]
    TruncatedKernel { tail: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("need at least {need} time slices (index {index} of {have})")]
    TooFewSlices { have: usize, need: usize, index: usize },

    #[error("perturbation drives density negative at index {index}")]
    PerturbationUnderflow { index: usize },

    #[error("phase unwrapping crosses a node at index {index}")]
    NodeCrossing { index: usize },

    #[error("hydrodynamic evolution unstable at step {step}: {reason}")]
    Instability { step: usize, reason: String },

    #[error("per-step potential phase {phase} exceeds pi")]
    AliasGuard { phase: f64 },

    #[error("vector potential varies in space (max |dA/dx| = {max_gradient:e})")]
    GaugeViolation { max_gradient: f64 },

    #[error("grids are not conjugate: dp*dx = {product:e}, expected {expected:e}")]
    NonConjugateGrids { product: f64, expected: f64 },

    #[error("packet not localized: mean {mean}, width {width}, box [{left}, {right})")]
    DelocalizedPacket {
        mean: f64,
        width: f64,
        left: f64,
        right: f64,
    },
}

impl Error {
    /// Stable identifier used in diagnostics.
    pub fn guard_name(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::GridMismatch => "GridMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::ZeroMass(_) => "ZeroMass",
            Error::NegativeValue { .. } => "NegativeValue",
            Error::NotNormalized(_) => "NotNormalized",
            Error::SupportViolation { .. } => "SupportViolation",
            Error::UnresolvedKernel { .. } => "UnresolvedKernel",
            Error::TruncatedKernel { .. } => "TruncatedKernel",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::TooFewSlices { .. } => "TooFewSlices",
            Error::PerturbationUnderflow { .. } => "PerturbationUnderflow",
            Error::NodeCrossing { .. } => "NodeCrossing",
            Error::Instability { .. } => "Instability",
            Error::AliasGuard { .. } => "AliasGuard",
            Error::GaugeViolation { .. } => "GaugeViolation",
            Error::NonConjugateGrids { .. } => "NonConjugateGrids",
            Error::DelocalizedPacket { .. } => "DelocalizedPacket",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
