use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a documented invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An operation received an envelope in the wrong domain.
    #[error("domain mismatch: expected {expected:?}, got {got:?}")]
    DomainMismatch {
        expected: crate::envelope::Domain,
        got: crate::envelope::Domain,
    },

    /// The integrator blew up (field magnitude exceeded 1e6x the input scale).
    #[error("integration diverged at propagation slice {slice}")]
    Divergence { slice: usize },

    /// A non-finite sample appeared during integration.
    #[error("non-finite value at propagation slice {slice}")]
    NonFinite { slice: usize },

    /// Both Stokes energies fell below the floor; the asymmetry is undefined.
    #[error("undefined asymmetry: total Stokes energy is zero (or below floor)")]
    UndefinedAsymmetry,

    /// A trial inside an ensemble failed.
    #[error("trial {trial_index} failed: {source}")]
    Trial {
        trial_index: u64,
        #[source]
        source: Box<Error>,
    },

    /// Too many trials in a scan were dropped or failed.
    #[error("scan aborted: {failed} of {total} trials failed (allowed fraction {allowed})")]
    ScanAborted {
        failed: usize,
        total: usize,
        allowed: f64,
    },

    /// Configuration file / key errors.
    #[error("config error for key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
