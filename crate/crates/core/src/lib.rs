//! Fake-news text classification: cleaning, encoders, outlier removal,
//! five classifiers, and staged grid search under k-fold cross-validation.

pub mod codec;
pub mod corpus_stats;
pub mod error;
pub mod ingest;
pub mod models;
pub mod outlier;
pub mod preprocess;
pub mod synthetic;
pub mod tune_eval;
pub mod vectorize;

pub use error::{Error, ErrorClass, Result};
pub use ingest::{assign_folds, load_csv, FoldAssignment, Label, RawRecord};
pub use preprocess::{clean_corpus, clean_pipeline, CleanConfig, CleanDoc, StopList};
pub use vectorize::{EncoderTag, FeatureMatrix, Vocabulary, W2VModel};
