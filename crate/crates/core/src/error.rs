use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolbox can report.
///
/// Per-feature failures (refinement, decoding) are usually caught and recorded by the
/// pipeline rather than propagated; solver and configuration errors are fatal.
#[derive(Debug, Error)]
pub enum Error {
    #[error("outside the model's valid domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("tag id {0} is not on the board")]
    UnknownTag(u32),

    #[error("no codeword within the accepted Hamming distance")]
    DecodeFail,

    #[error("refinement window exceeds the image bounds")]
    WindowOutOfBounds,

    #[error("symmetry sample falls outside the image")]
    SampleOutOfImage,

    /// The iteration budget ran out or the local system became singular.
    /// `last` is the final iterate, which callers may still inspect.
    #[error("refinement did not converge (last iterate {last:?})")]
    NonConvergence { last: [f64; 2] },

    #[error("iterate moved beyond the sample radius of its initial value")]
    DivergedBeyondRadius { last: [f64; 2] },

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("pose estimate diverged (angular rms {0:.3e} rad)")]
    PoseDiverged(f64),

    #[error("solver diverged: {0}")]
    SolverDiverged(String),

    #[error("rank-deficient problem: {0}")]
    RankDeficient(String),

    #[error("malformed record at line {line}: {msg}")]
    Schema { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    /// Stable process exit code for the CLI: 1 configuration, 2 I/O, 3 solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownTag(_) | Error::Schema { .. } => 1,
            Error::Io(_) | Error::Image(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
