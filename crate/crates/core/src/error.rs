use thiserror::Error;

use crate::corpus::CorpusError;
use crate::embeddings::EmbeddingError;
use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::models::ModelError;
use crate::nncore::NnError;
use crate::svm::SvmError;
use crate::textprep::TextError;

/// Crate-level error, one variant per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for failures caused by user data or configuration rather than
    /// a broken internal invariant.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Nn(NnError::ShapeMismatch(_)))
    }
}
