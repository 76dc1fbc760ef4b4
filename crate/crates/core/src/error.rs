use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two families: invalid input (bad configuration,
/// out-of-range indices, violated preconditions) and numerical failure
/// (divergence, loss of positive definiteness, non-convergence). The CLI maps
/// the first family to exit code 1 and the second to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index {index} out of range (valid: {valid})")]
    Index { index: usize, valid: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("reference measure mismatch at site {site}: beta = {beta}, but 1/T = {inv_t}")]
    ReferenceMismatch { site: usize, beta: f64, inv_t: f64 },

    #[error("mode k = {k} is not positive definite: {reason}")]
    IndefiniteMode { k: usize, reason: String },

    #[error("SCGF out of Gaussian basin at mode k = {k}: {reason}")]
    OutOfBasin { k: usize, reason: String },

    #[error("SCGF divergent or lambda outside analyticity strip (margin to imaginary axis {margin:.3e}): {reason}")]
    RiccatiDivergent { margin: f64, reason: String },

    #[error("numerical blow-up at step {step} of replica {replica}")]
    BlowUp { step: u64, replica: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient statistics: {0}")]
    Statistics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IndefiniteMode { .. }
                | Error::OutOfBasin { .. }
                | Error::RiccatiDivergent { .. }
                | Error::BlowUp { .. }
                | Error::Numerical(_)
                | Error::Statistics(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
