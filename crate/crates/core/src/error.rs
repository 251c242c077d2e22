use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported algebra: type {letter} rank {rank}")]
    UnsupportedAlgebra { letter: char, rank: usize },

    #[error("matrix is not in the algebra (reconstruction residual {residual:.3e})")]
    NotInAlgebra { residual: f64 },

    #[error("matrix is not in p (symmetric part of the algebra): {reason}")]
    NotInP { reason: String },

    #[error("matrix is not in the Cartan subalgebra (residual {residual:.3e})")]
    NotCartan { residual: f64 },

    #[error("element is not regular: vanishing or near-vanishing roots {roots:?} (min |alpha| = {min_gap:.3e})")]
    NotRegular { roots: Vec<String>, min_gap: f64 },

    #[error("matrix is not in the compact group K (orthogonality residual {residual:.3e}, det {det:.6})")]
    NotInK { residual: f64, det: f64 },

    #[error("step size underflow at t = {t:.6} (h = {h:.3e}): stiff region")]
    StiffRegion { t: f64, h: f64 },

    #[error("integration exceeded {steps} steps before reaching t = {t_end}")]
    TooManySteps { steps: usize, t_end: f64 },

    #[error("non-finite state at t = {t:.6}")]
    NonFinite { t: f64 },

    #[error("ambiguous limit: fixed points {0} and {1} are both within tolerance")]
    AmbiguousLimit(usize, usize),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no labeling with identity at the source matches cell dimensions: {0}")]
    Labeling(String),

    #[error(
        "gamma curve through {point} along root {root} failed to connect its endpoints: {detail}"
    )]
    GammaCurve {
        point: usize,
        root: String,
        detail: String,
    },

    #[error("edge {src} -> {dst} connects Bruhat-incomparable elements")]
    IncomparableEdge { src: usize, dst: usize },

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
