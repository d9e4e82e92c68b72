use std::path::PathBuf;

use thiserror::Error;

use crate::Language;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no training files for language `{0}`")]
    EmptyLanguageSample(Language),

    #[error("no comment syntax entry for language `{0}`")]
    UnknownCommentSyntax(Language),

    #[error("invalid {name}: {value} (expected {expected})")]
    InvalidParameter {
        name: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("invalid token stream: {0}")]
    InvalidStream(String),

    #[error("invalid production pattern: {0}")]
    InvalidPattern(String),

    #[error("duplicate production `{0}` in grammar")]
    DuplicateProduction(String),

    #[error("contingency table is empty (no files)")]
    EmptyContingencyTable,

    #[error("feature id {id} out of range for a grammar of {size} productions")]
    UnknownFeature { id: usize, size: usize },

    #[error("label index {label} out of range for {languages} languages")]
    UnknownLabel { label: usize, languages: usize },

    #[error("language `{0}` is not known to the model")]
    UnknownLanguage(Language),

    #[error("test labels not known to the model: {}", join(.0))]
    LabelsOutsideModel(Vec<Language>),

    #[error("duplicate language `{0}`")]
    DuplicateLanguage(Language),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("objective became non-finite at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: &'static str },

    #[error("weight matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    WeightShape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },

    #[error("grammar is empty after selection; lower the MI or keyword threshold")]
    EmptyGrammar,

    #[error("unsupported model format version {found} (this build reads {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("model file is inconsistent: {0}")]
    CorruptModel(String),

    #[error("no usable files for language `{0}`")]
    NoUsableFiles(Language),

    #[error("{path}:{line}: malformed manifest line: {reason}")]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("comment syntax config: {0}")]
    Toml(#[from] toml::de::Error),
}

fn join(langs: &[Language]) -> String {
    langs.iter().map(Language::as_str).collect::<Vec<_>>().join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, value: impl ToString, expected: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            expected,
        }
    }
}
