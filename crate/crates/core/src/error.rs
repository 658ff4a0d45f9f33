use core::fmt;

/// Errors reported by model constructors and the evolution/spectrum
/// routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor argument violates its documented constraint.
    InvalidParameter(&'static str),
    /// A state index exceeds the subspace dimension.
    IndexOutOfRange { index: usize, dim: usize },
    /// The series could not be certified to the requested absolute
    /// tolerance, even at the precision ceiling.  `achieved` is the best
    /// certified bound.
    ToleranceUnreachable { requested: f64, achieved: f64 },
    /// The beta-sequence has an interior zero, so the model splits into
    /// independent blocks and the requested quantity is not defined across
    /// the split.
    ReducibleModel,
    /// The residual of the candidate eigenpair is too large for the given
    /// lambda to be an eigenvalue.
    NotAnEigenvalue { lambda: f64, residual: f64 },
    /// A brute-force routine was asked for a dimension beyond its guard.
    SizeGuard { n: usize, max: usize },
    /// A numeric literal could not be parsed as an exact rational.
    InvalidNumber,
    /// The model has no stationary (zero-energy) state; this happens
    /// exactly when N is odd.
    NoStationaryState,
    /// Two supposedly equivalent internal computations disagreed.
    SelfCheck(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::IndexOutOfRange { index, dim } => {
                write!(f, "state index {index} out of range for dimension {dim}")
            }
            Error::ToleranceUnreachable { requested, achieved } => write!(
                f,
                "requested tolerance {requested:e} unreachable; best certified bound {achieved:e}"
            ),
            Error::ReducibleModel => {
                write!(f, "beta-sequence has an interior zero (reducible model)")
            }
            Error::NotAnEigenvalue { lambda, residual } => {
                write!(f, "lambda = {lambda} is not an eigenvalue (residual {residual:e})")
            }
            Error::SizeGuard { n, max } => {
                write!(f, "brute-force routine limited to N <= {max}, got N = {n}")
            }
            Error::InvalidNumber => write!(f, "malformed numeric literal"),
            Error::NoStationaryState => {
                write!(f, "no zero-energy eigenstate exists (N is odd)")
            }
            Error::SelfCheck(what) => write!(f, "internal cross-check failed: {what}"),
        }
    }
}

impl core::error::Error for Error {}
