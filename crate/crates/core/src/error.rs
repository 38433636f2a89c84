use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MelcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MelcError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class {class} has {size} points, at least {required} are required")]
    TooSmallClass {
        class: &'static str,
        size: usize,
        required: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("kernel variance must be positive and finite, got {0}")]
    NonPositiveVariance(f64),
    #[error("projection is degenerate: all projections of the {0} class coincide")]
    DegenerateProjection(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective returned NaN")]
    NonFiniteObjective,
    #[error("every restart ended with a non-finite objective")]
    AllRunsFailed,
    #[error("length mismatch: {left} predictions vs {right} labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("expected exactly two distinct labels, found {0}")]
    NotBinary(usize),
    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    RaggedRows {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("class {class} has {size} points but {folds} folds were requested")]
    TooFewPointsPerClass {
        class: &'static str,
        size: usize,
        folds: usize,
    },
    #[error("no records to report")]
    EmptyRecords,
    #[error("{}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("manifest: {0}")]
    Manifest(#[from] toml::de::Error),
}

impl MelcError {
    /// Attaches the path to a failed read.
    pub fn read(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> MelcError + '_ {
        move |source| MelcError::Read {
            path: path.to_path_buf(),
            source,
        }
    }

    /// True for problems with the input data rather than the computation.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            MelcError::DimensionMismatch { .. }
                | MelcError::TooSmallClass { .. }
                | MelcError::NonFinite(_)
                | MelcError::EmptyInput(_)
                | MelcError::Parse { .. }
                | MelcError::NotBinary(_)
                | MelcError::RaggedRows { .. }
                | MelcError::TooFewPointsPerClass { .. }
                | MelcError::Read { .. }
                | MelcError::Io(_)
                | MelcError::Csv(_)
                | MelcError::Json(_)
                | MelcError::Manifest(_)
        )
    }
}
