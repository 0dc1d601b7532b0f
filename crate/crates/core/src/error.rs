use std::fmt;
use std::path::PathBuf;

/// Stage of the closed-form pipeline an error originated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    Linearization,
    Reduction,
    RootSolving,
    RootSelection,
    Refinement,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Input => "input validation",
            Stage::Linearization => "linearization",
            Stage::Reduction => "reduction",
            Stage::RootSolving => "root solving",
            Stage::RootSelection => "root selection",
            Stage::Refinement => "WLS refinement",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("too few anchors: {found} given, at least {required} needed for K = {dimension}")]
    TooFewAnchors {
        found: usize,
        required: usize,
        dimension: usize,
    },
    #[error("slot times must be strictly increasing and non-negative: `{field}`")]
    NonMonotoneSlots { field: String },
    #[error("duplicate anchor id {0}")]
    DuplicateAnchorId(usize),
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
    #[error("invalid value for `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },
    #[error("range to anchor {anchor} is below 1e-9 m; line of sight undefined")]
    ZeroRange { anchor: usize },
    #[error("linear system is rank deficient (singular value ratio {ratio:e})")]
    RankDeficient { ratio: f64 },
    #[error("quartic resolvent is degenerate on every cube-root branch")]
    DegenerateResolvent,
    #[error("quadratic pair has no real solution")]
    NoRealSolution,
    #[error("no candidate states to select from")]
    NoCandidates,
    #[error("normal matrix is singular (rcond {rcond:e})")]
    SingularNormalMatrix { rcond: f64 },
    #[error("Fisher information matrix is singular (rcond {rcond:e})")]
    SingularFim { rcond: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{stage} failed: {source}")]
    Estimate {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        Error::Estimate {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with any stage tags removed.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Estimate { source, .. } => source.root_cause(),
            other => other,
        }
    }

    /// Pipeline stage the error was tagged with, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Estimate { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
