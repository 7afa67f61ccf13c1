use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Resource {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },

    #[error("validation failed with {} issue(s); first: {}", .0.len(), .0.first().map(|i| i.to_string()).unwrap_or_default())]
    Validation(Vec<crate::corpus::Issue>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("empty vocabulary after term selection (min_doc_freq={min_doc_freq}, high_freq_cutoff={high_freq_cutoff}); lower min_doc_freq or raise the cutoff")]
    EmptyVocabulary { min_doc_freq: usize, high_freq_cutoff: f64 },

    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),

    #[error("separation detected: coefficients diverge for {}", .0.join(", "))]
    Separation(Vec<String>),

    #[error("singular information matrix; check predictors for collinearity (VIF)")]
    Singular,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("model `{model}`: {source}")]
    Model {
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 config, 3 data validation, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Resource { .. } => 2,
            Error::Malformed { .. }
            | Error::Validation(_)
            | Error::InvalidInput(_)
            | Error::UnknownNode(_)
            | Error::Csv(_)
            | Error::Io(_) => 3,
            Error::DegenerateGraph(_)
            | Error::EmptyVocabulary { .. }
            | Error::DegenerateTable(_)
            | Error::Separation(_)
            | Error::Singular
            | Error::Numerical(_) => 4,
            Error::Stage { source, .. } | Error::Model { source, .. } => source.exit_code(),
        }
    }

    /// A short suggestion printed next to the error by the CLI.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            Error::Stage { source, .. } | Error::Model { source, .. } => source.hint(),
            Error::Validation(_) => Some("rerun without --strict to skip invalid records"),
            Error::EmptyVocabulary { .. } => Some("adjust etm.min_doc_freq / etm.high_freq_cutoff"),
            Error::Separation(_) | Error::Singular => {
                Some("drop or combine the named predictors, or inspect VIF values")
            }
            Error::Config(_) | Error::Resource { .. } => Some("check the paths and keys in the config file"),
            _ => None,
        }
    }
}

pub(crate) fn read_resource(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Resource {
        path: path.to_path_buf(),
        source,
    })
}

