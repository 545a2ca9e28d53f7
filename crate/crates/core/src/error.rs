use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric (‖M+Mᵀ‖_F = {residual:e})")]
    NotSkew { residual: f64 },

    #[error(
        "dimension n = {0} is not supported: only odd n ≥ 3 gives a full frequency ladder \
         with a one-dimensional zero eigenspace; even n leaves the anchor vector ambiguous"
    )]
    UnsupportedDimension(usize),

    #[error("could not sample a non-degenerate J3 after {attempts} attempts (min eigenvalue gap {min_gap:e})")]
    DegenerateSample { attempts: usize, min_gap: f64 },

    #[error("no feasible J1,J2 subspace (empty nullspace)")]
    EmptyNullspace,

    #[error("generator construction did not converge: best residual {best_residual:e}")]
    ConstructionFailed { best_residual: f64 },

    #[error("zero eigenspace of J3 has dimension {0}, expected 1")]
    ZeroEigenspace(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("sweep point and axis are not orthogonal (|ŵ·x̂| = {0:e})")]
    NotOrthogonal(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate point configuration: cross-covariance rank {0} < 2")]
    DegenerateProcrustes(usize),

    #[error("training diverged at step {step}")]
    Diverged { step: usize, trace: Vec<f64> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
