use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input format error at `{field}`: {message}")]
    InputFormat { field: String, message: String },
    #[error("training error: {0}")]
    Training(String),
    #[error("model file error at line {line}: {message}")]
    ModelFormat { line: usize, message: String },
    #[error("evaluation input error: {0}")]
    Evaluation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(field: impl Into<String>, message: impl Into<String>) -> Error {
        Error::InputFormat { field: field.into(), message: message.into() }
    }

    pub(crate) fn model(line: usize, message: impl Into<String>) -> Error {
        Error::ModelFormat { line, message: message.into() }
    }
}
