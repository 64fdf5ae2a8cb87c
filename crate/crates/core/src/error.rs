use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("duplicate entity id `{0}`")]
    DuplicateEntity(String),

    #[error("unknown entity id `{0}`")]
    UnknownEntity(String),

    #[error("entity `{e2}` precedes `{e1}` in the text")]
    EntityOrder { e1: String, e2: String },

    #[error("entity ids `{e1}` and `{e2}` belong to different abstracts")]
    AbstractMismatch { e1: String, e2: String },

    #[error("entity `{entity}` does not belong to abstract `{abstract_id}`")]
    ForeignEntity { entity: String, abstract_id: String },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("need >= 2 classes, found {0}")]
    TooFewClasses(usize),

    #[error("label `{0}` is not part of the feature space")]
    UnknownLabel(String),

    #[error("instance has no label")]
    MissingLabel,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in feature vector")]
    NonFinite,

    #[error("feature family `{0}` is enabled but its resource is not loaded")]
    MissingResource(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}
