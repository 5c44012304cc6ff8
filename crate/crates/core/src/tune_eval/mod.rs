//! Staged grid search, k-fold scoring, metrics and report emission.

pub mod build;
pub mod cv;
pub mod encoders;
pub mod grid;
pub mod metrics;
pub mod report;

pub use build::{fit_model, score_features};
pub use cv::{
    derive_seed, evaluate_candidates, kfold_score, prepare_fold, CVResult, CvOptions, FoldAudit, FoldCache,
    PreparedFold, Progress,
};
pub use encoders::{fit_encoder, EncoderConfig, Features, FittedEncoder, SeqData};
pub use grid::{canonical, staged_grid_search, GridCell, GridOutcome, GridStage, Hyperparams, ParamValue};
pub use metrics::{accuracy, confusion, roc_curve, Confusion, RocCurve};
pub use report::{emit_reports, CellReport};
