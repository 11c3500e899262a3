use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("covariance matrix is not positive definite (pivot {index} = {pivot:e})")]
    Conditioning { index: usize, pivot: f64 },

    #[error("regression design matrix is rank deficient; dependent columns: {}", .columns.join(", "))]
    Singular { columns: Vec<String> },

    #[error("cross array would have {requested} runs, above the cap of {cap}")]
    Capacity { requested: u128, cap: usize },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateDesign(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: msg.into(),
        }
    }

    /// Process exit code for the command line tool: 2 for bad parameters,
    /// 3 for conditioning or degeneracy, 4 for I/O and malformed files.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Capacity { .. } => 2,
            Error::DegenerateDesign(_) | Error::Conditioning { .. } | Error::Singular { .. } => 3,
            Error::Format { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
