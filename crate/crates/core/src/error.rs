use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// The deflection came too close to the ground plate for the transformed
    /// problem to stay well conditioned.
    #[error("touchdown: min u = {min_u:.6e} is not above -1 + {floor:e}")]
    Touchdown { min_u: f64, floor: f64 },

    #[error("profile is not admissible: {0}")]
    NotAdmissible(String),

    #[error("singular matrix: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("target {target} outside the reachable range [{low}, {high}]")]
    OutOfBracket { target: f64, low: f64, high: f64 },

    #[error("multiplier undefined: -∫u g(u) dx vanishes")]
    DegenerateMultiplier,

    #[error("profiles are not pointwise ordered (u1 > u2 at node {node})")]
    Unordered { node: usize },

    #[error("query point ({x}, {z}) lies outside the gap region")]
    OutsideDomain { x: f64, z: f64 },

    #[error("branch stopped at lambda = {reached:.6e} before reaching {target:.6e}")]
    BranchIncomplete { reached: f64, target: f64 },

    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
