//! Emergency-stage classification of short emergency-responder messages.
//!
//! Messages are assigned to one of four stages (preparedness, response,
//! post-emergency/recovery, engagement). The crate covers the whole pipeline:
//!
//! * [`corpus`]: loading, splitting and summarizing labeled datasets
//! * [`textprep`]: normalization, tokenization, lemmatization, POS tagging
//! * [`features`]: n-gram BOW, POS, descriptive and embedding-matrix features
//! * [`embeddings`]: skip-gram negative-sampling training and vector tables
//! * [`svm`]: one-vs-rest linear SVM
//! * [`nncore`]: the small layer library behind the neural models
//! * [`models`]: the CNN and GRU classifiers
//! * [`eval`]: metrics, cross-validation and table-shaped experiment reports
//! * [`pipeline`]: featurizer + model bundles with a uniform predict interface
//! * [`synth`]: synthetic corpora with known class structure

pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod features;
pub mod models;
pub mod nncore;
mod parallel;
pub mod pipeline;
pub mod seed;
pub mod svm;
pub mod synth;
pub mod textprep;

mod error;

pub use corpus::{Dataset, Message, StageLabel};
pub use error::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;
