use alloc::string::String;
use core::fmt;

/// Errors produced by spline construction, field evaluation, fitting,
/// and model training.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A basis specification violates its invariants.
    InvalidSpec(String),
    /// An evaluation point lies outside the basis domain.
    OutOfDomain { value: f64, lo: f64, hi: f64 },
    /// A derivative order exceeds the spline order.
    InvalidDerivativeOrder { requested: usize, max: usize },
    /// Mismatched dimensions between a field and its input.
    DimensionMismatch { expected: usize, got: usize },
    /// Shape mismatch between tensors, parameters, or gradients.
    ShapeMismatch(String),
    /// The least-squares design is rank deficient or otherwise unsolvable.
    FitFailure(String),
    /// Numerical quadrature failed to reach the requested tolerance.
    QuadratureAccuracy { achieved: f64, requested: f64 },
    /// A finite-difference solver detected instability or non-finite values.
    SolverFailure(String),
    /// An invalid training or loss configuration.
    InvalidConfig(String),
    /// Training produced a non-finite loss.
    Divergence { epoch: usize, loss: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(msg) => write!(f, "invalid basis spec: {msg}"),
            Error::OutOfDomain { value, lo, hi } => {
                write!(f, "point {value} outside domain [{lo}, {hi}]")
            }
            Error::InvalidDerivativeOrder { requested, max } => {
                write!(f, "derivative order {requested} exceeds spline order {max}")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "expected dimension {expected}, got {got}")
            }
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::FitFailure(msg) => write!(f, "least-squares fit failed: {msg}"),
            Error::QuadratureAccuracy { achieved, requested } => {
                write!(f, "quadrature reached {achieved:e}, requested {requested:e}")
            }
            Error::SolverFailure(msg) => write!(f, "fd solver failed: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::Divergence { epoch, loss } => {
                write!(f, "training diverged at epoch {epoch} (loss {loss})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
