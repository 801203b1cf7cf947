use thiserror::Error;

use crate::picard::SolveDiagnostics;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("spectral support exceeds the dealiasing cutoff: {0}")]
    OutOfBand(String),

    #[error("norm unreliable: tail fraction {tail:.3e} exceeds {limit:.1e}")]
    UnreliableNorm { tail: f64, limit: f64 },

    #[error("Picard iteration stopped contracting (ratio {ratio:.4} at iteration {iteration})")]
    NonContraction {
        ratio: f64,
        iteration: usize,
        diagnostics: Box<SolveDiagnostics>,
    },

    #[error("a-priori bound violated: sup norm ratio {ratio:.4} > 2")]
    AprioriBound {
        ratio: f64,
        diagnostics: Box<SolveDiagnostics>,
    },

    #[error("split-step halving check failed: change {change:.3e} exceeds {limit:.1e}")]
    StepHalving { change: f64, limit: f64 },

    #[error("sweep invalidated: {0}")]
    Invalidated(String),

    #[error("malformed field container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        LabError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by under-resolution or a horizon that is too
    /// long, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            LabError::UnreliableNorm { .. }
                | LabError::NonContraction { .. }
                | LabError::AprioriBound { .. }
                | LabError::StepHalving { .. }
                | LabError::Invalidated(_)
                | LabError::NonFinite
        )
    }
}
