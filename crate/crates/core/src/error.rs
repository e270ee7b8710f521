use thiserror::Error;

/// Errors raised anywhere in the probe pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("iterative eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("ground state is (near-)degenerate: gap {gap:.3e} below threshold {threshold:.3e}")]
    DegenerateGround { gap: f64, threshold: f64 },

    #[error("information matrix is near-singular (condition number {condition:.3e})")]
    SingularInformation { condition: f64 },

    #[error("integrand diverges at h = ({h_x}, {h_z}): Fisher information {information:.3e}")]
    DivergingIntegrand { h_x: f64, h_z: f64, information: f64 },

    #[error("quadrature node h = ({h_x}, {h_z}) failed: {source}")]
    NodeFailure {
        h_x: f64,
        h_z: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("every outcome probability lies below the floor {floor:e}")]
    EmptyDistribution { floor: f64 },

    #[error("all {0} grid evaluations failed")]
    SearchFailed(usize),

    #[error("dimension {dim} exceeds the {limit} limit of the {method} path")]
    TooLarge { dim: usize, limit: usize, method: &'static str },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by bad inputs rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidInput(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
