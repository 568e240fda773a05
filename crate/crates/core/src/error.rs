use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Indices carried by the variants are 0-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mesh must contain at least one interior point")]
    EmptyMesh,

    #[error("mesh point {index} = {value} is not strictly inside (0, 1)")]
    PointOutOfRange { index: usize, value: f64 },

    #[error("mesh point {index} duplicates the previous point")]
    DuplicatePoint { index: usize },

    #[error("mesh point {index} is smaller than the previous point")]
    NotIncreasing { index: usize },

    #[error("mesh point {index} is closer than {min_separation:e} to its neighbour")]
    PointsTooClose { index: usize, min_separation: f64 },

    #[error("{what} index {index} out of range (valid: {valid})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        valid: String,
    },

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("argument {name} = {value} outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "quadrature order {order} too small for {modes} modes: orthogonality defect {defect:e}"
    )]
    QuadratureTooCoarse {
        order: usize,
        modes: usize,
        defect: f64,
    },

    #[error("nonlinearity `{name}` is missing its {missing}")]
    MissingDerivative { name: String, missing: &'static str },

    #[error("integrator step size underflow at x = {x}")]
    StepSizeUnderflow { x: f64 },

    #[error("solution became non-finite at x = {x}")]
    NonFinite { x: f64 },

    #[error("path endpoint `{which}` lies in the resonance set (det = {det:e})")]
    EndpointInResonanceSet { which: &'static str, det: f64 },

    #[error("problem and basis are built on different meshes")]
    MeshMismatch,

    #[error("invalid samples: {0}")]
    InvalidSamples(String),

    #[error("no start of the multi-start search converged ({starts} attempted)")]
    NoCriticalPoints { starts: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            found,
        })
    }
}
