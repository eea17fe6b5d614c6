use crate::subsolver::PogsState;

/// Errors surfaced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("dimension must be a power of two, got {0}")]
    NotPowerOfTwo(usize),

    #[error("threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "power iteration did not converge in {iters} iterations (residual {residual:.3e}); \
         best eigenvalue {eigenvalue:.6e}"
    )]
    PowerIterationStalled {
        iters: usize,
        residual: f64,
        eigenvalue: f64,
        eigenvector: Vec<f64>,
    },

    #[error("conjugate gradient exceeded {max_iter} iterations (residual {residual:.3e})")]
    CgMaxIter {
        max_iter: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error(
        "inner solver exceeded {max_iter} iterations \
         (primal residual {primal:.3e}, dual residual {dual:.3e})"
    )]
    PogsMaxIter {
        max_iter: usize,
        primal: f64,
        dual: f64,
        state: Box<PogsState>,
    },

    #[error("inner solve failed to make progress in the high-accuracy phase: {0}")]
    InnerPhaseFailure(String),

    #[error("operation requires a dense ensemble")]
    RequiresDense,

    #[error("degenerate initialization: {0}")]
    DegenerateInit(String),

    #[error("zero measurement row {0} cannot be normalized")]
    ZeroRow(usize),

    #[error("signal file: {0}")]
    SignalFormat(String),

    #[error("ragged benchmark grid: {0}")]
    RaggedGrid(String),

    #[error("no records to summarize")]
    NoRecords,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
