//! Saved model files: the fitted encoder, the classifier and everything
//! needed to clean new text the same way as the training corpus.

use std::path::Path;

use fakenews_core::codec;
use fakenews_core::models::{ModelFamily, TrainedModel, DECISION_THRESHOLD};
use fakenews_core::preprocess::clean_text;
use fakenews_core::tune_eval::{canonical, score_features, FittedEncoder, Hyperparams};
use fakenews_core::{CleanConfig, Result, StopList};
use serde::{Deserialize, Serialize};

pub const KIND: &[u8; 4] = b"MODL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub family: ModelFamily,
    pub hyperparams: Hyperparams,
    pub encoder: FittedEncoder,
    pub model: TrainedModel,
    /// Sorted, so the file bytes don't depend on hash order.
    pub stopwords: Vec<String>,
    pub stoplist_source: String,
    pub clean: CleanConfig,
    pub seed: u64,
    pub trained_on: usize,
    pub cv_mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Label { fake: bool, score: f64 },
    /// The text cleaned to nothing (or failed the language gate).
    Indeterminate,
}

impl Prediction {
    pub fn score(&self) -> f64 {
        match self {
            Prediction::Label { score, .. } => *score,
            Prediction::Indeterminate => 0.5,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Prediction::Label { fake: true, .. } => "fake",
            Prediction::Label { fake: false, .. } => "real",
            Prediction::Indeterminate => "indeterminate",
        }
    }
}

impl ModelBundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        codec::save(path, KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        codec::load(path, KIND)
    }

    pub fn stoplist(&self) -> StopList {
        StopList {
            words: self.stopwords.iter().cloned().collect(),
            source_name: self.stoplist_source.clone(),
        }
    }

    pub fn predict_tokens(&self, tokens: &[String]) -> Result<f64> {
        let features = self.encoder.encode_tokens(tokens)?;
        Ok(score_features(&self.model, &features)[0])
    }

    pub fn predict(&self, text: &str) -> Result<Prediction> {
        let Ok(tokens) = clean_text(text, &self.stoplist(), &self.clean) else {
            return Ok(Prediction::Indeterminate);
        };
        let score = self.predict_tokens(&tokens)?;
        Ok(Prediction::Label {
            fake: score > DECISION_THRESHOLD,
            score,
        })
    }

    pub fn parameter_summary(&self) -> String {
        match &self.model {
            TrainedModel::LogReg(m) => format!("{} weights + bias (C = {})", m.weights.len(), m.c),
            TrainedModel::Svm(m) => format!("{} weights + bias (C = {})", m.weights.len(), m.c),
            TrainedModel::RandomForest(m) => format!(
                "{} trees, {} nodes in total, {} features per split",
                m.trees.len(),
                m.trees.iter().map(|t| t.nodes.len()).sum::<usize>(),
                m.feature_subset_size
            ),
            TrainedModel::Mlp(m) => format!("{} parameters over {} inputs", m.params.len(), m.input_dim),
            TrainedModel::Lstm(m) => format!(
                "{} parameters over {} inputs, {} memory cells",
                m.params.len(),
                m.input_dim,
                m.config.memcells
            ),
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "model family: {}\nhyperparameters: {}\nparameters: {}\nencoder: {}\nstop list: {} ({} words)\nenglish threshold: {}\nseed: {}\ntrained on: {} documents\ncross-validated accuracy: {:.6}\n",
            self.family,
            canonical(&self.hyperparams),
            self.parameter_summary(),
            self.encoder.summary(),
            self.stoplist_source,
            self.stopwords.len(),
            self.clean.english_threshold,
            self.seed,
            self.trained_on,
            self.cv_mean_accuracy,
        )
    }
}
