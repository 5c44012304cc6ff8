//! k-fold cross-validation with per-fold encoder fitting, training-only
//! outlier removal and an id-level leakage audit.

use std::collections::HashSet;
use std::sync::mpsc::Sender;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::build::{fit_model, score_features};
use super::encoders::{fit_encoder, remove_outlier_rows, EncoderConfig, Features, FittedEncoder};
use super::grid::Hyperparams;
use super::metrics::accuracy;
use crate::error::{Error, Result};
use crate::ingest::{assign_folds, FoldAssignment, Label};
use crate::models::{ModelFamily, TrainingCurve, DECISION_THRESHOLD};
use crate::outlier::{IsoForestParams, OutlierReport};
use crate::preprocess::CleanDoc;
use crate::vectorize::{EncoderTag, DEFAULT_CELL_BUDGET};

/// Derives an independent seed for one named purpose.
pub fn derive_seed(master: u64, purpose: &str) -> u64 {
    let digest = Sha256::digest(format!("{master}/{purpose}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    /// Fraction of training rows removed as outliers; 0 disables removal.
    pub contamination: f64,
    pub isolation: IsoForestParams,
    /// Fit encoders once on the whole corpus, as the original study did.
    /// Held-out documents then leak into the encoder; the audit records it.
    pub paper_mode: bool,
    pub cell_budget: u64,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            k: 3,
            seed: 0,
            contamination: 0.05,
            isolation: IsoForestParams::default(),
            paper_mode: false,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }
}

/// Overlap between one fold's held-out ids and the ids a fitting stage saw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub fold: usize,
    pub stage: String,
    pub held_out: usize,
    pub fitted: usize,
    pub overlap: usize,
}

impl FoldAudit {
    pub const TSV_HEADER: &'static str = "fold\tstage\theld_out\tfitted\toverlap";

    pub fn tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.fold + 1,
            self.stage,
            self.held_out,
            self.fitted,
            self.overlap
        )
    }
}

fn audit(fold: usize, stage: &str, held_out: &HashSet<u64>, fitted: &[u64], enforce: bool) -> Result<FoldAudit> {
    let overlap = fitted.iter().filter(|id| held_out.contains(id)).count();
    if enforce && overlap > 0 {
        return Err(Error::Leakage {
            fold: fold + 1,
            stage: stage.to_string(),
            count: overlap,
        });
    }
    Ok(FoldAudit {
        fold,
        stage: stage.to_string(),
        held_out: held_out.len(),
        fitted: fitted.len(),
        overlap,
    })
}

/// Encoded train and held-out rows of one fold.
#[derive(Debug, Clone)]
pub struct PreparedFold {
    pub fold: usize,
    pub train: Features,
    pub test: Features,
    pub held_out_ids: HashSet<u64>,
    pub audits: Vec<FoldAudit>,
    pub outliers: OutlierReport,
}

fn select_docs(docs: &[CleanDoc], idx: &[usize]) -> Vec<CleanDoc> {
    idx.iter().map(|&i| docs[i].clone()).collect()
}

/// Fits (or reuses) the encoder, encodes both sides and removes outliers
/// from the training rows.
pub fn prepare_fold(
    encoder: &EncoderConfig,
    docs: &[CleanDoc],
    folds: &FoldAssignment,
    fold: usize,
    opts: &CvOptions,
    shared_encoder: Option<&FittedEncoder>,
) -> Result<PreparedFold> {
    let tag = encoder.tag();
    let train_docs = select_docs(docs, &folds.train_indices(fold));
    let test_docs = select_docs(docs, &folds.test_indices(fold));
    let held_out: HashSet<u64> = test_docs.iter().map(|d| d.id).collect();
    let enforce = !opts.paper_mode;
    let mut audits = Vec::new();

    let owned;
    let fitted = match shared_encoder {
        Some(e) => {
            let all: Vec<u64> = docs.iter().map(|d| d.id).collect();
            audits.push(audit(fold, "encoder", &held_out, &all, enforce)?);
            e
        }
        None => {
            let seed = derive_seed(opts.seed, &format!("encoder/{tag}/{fold}"));
            owned = fit_encoder(encoder, &train_docs, seed)?;
            let ids: Vec<u64> = train_docs.iter().map(|d| d.id).collect();
            audits.push(audit(fold, "encoder", &held_out, &ids, enforce)?);
            &owned
        }
    };
    let train = fitted.transform(&train_docs, opts.cell_budget)?;
    let test = fitted.transform(&test_docs, opts.cell_budget)?;

    audits.push(audit(fold, "outlier", &held_out, train.ids(), true)?);
    let iso = IsoForestParams {
        seed: derive_seed(opts.seed, &format!("isolation/{tag}/{fold}")),
        ..opts.isolation
    };
    let (train, outliers) = remove_outlier_rows(train, opts.contamination, &iso)?;
    Ok(PreparedFold {
        fold,
        train,
        test,
        held_out_ids: held_out,
        audits,
        outliers,
    })
}

/// Per-fold prepared data, kept in memory when it fits the cell budget and
/// rebuilt on demand otherwise.
pub struct FoldCache<'a> {
    encoder: EncoderConfig,
    docs: &'a [CleanDoc],
    folds: FoldAssignment,
    opts: CvOptions,
    shared: Option<FittedEncoder>,
    cached: Option<Vec<Arc<PreparedFold>>>,
}

impl<'a> FoldCache<'a> {
    pub fn new(encoder: &EncoderConfig, docs: &'a [CleanDoc], opts: &CvOptions) -> Result<Self> {
        if opts.k < 2 {
            return Err(Error::InvalidArgument(format!("k must be >= 2, got {}", opts.k)));
        }
        let folds = assign_folds(docs, opts.k, derive_seed(opts.seed, "folds"))?;
        let shared = if opts.paper_mode {
            let seed = derive_seed(opts.seed, &format!("encoder/{}/all", encoder.tag()));
            Some(fit_encoder(encoder, docs, seed)?)
        } else {
            None
        };
        let mut cache = FoldCache {
            encoder: encoder.clone(),
            docs,
            folds,
            opts: opts.clone(),
            shared,
            cached: None,
        };
        let first = cache.build(0)?;
        let cells = (first.train.n_rows() + first.test.n_rows()) as u64 * first.train.dim().max(1) as u64;
        if cells.saturating_mul(opts.k as u64) <= opts.cell_budget {
            let mut all = vec![Arc::new(first)];
            for f in 1..opts.k {
                all.push(Arc::new(cache.build(f)?));
            }
            cache.cached = Some(all);
        }
        Ok(cache)
    }

    fn build(&self, fold: usize) -> Result<PreparedFold> {
        prepare_fold(&self.encoder, self.docs, &self.folds, fold, &self.opts, self.shared.as_ref())
            .map_err(|e| e.in_fold(fold + 1))
    }

    pub fn get(&self, fold: usize) -> Result<Arc<PreparedFold>> {
        match &self.cached {
            Some(all) => Ok(all[fold].clone()),
            None => self.build(fold).map(Arc::new),
        }
    }

    pub fn k(&self) -> usize {
        self.opts.k
    }

    pub fn tag(&self) -> EncoderTag {
        self.encoder.tag()
    }

    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }

    pub fn docs(&self) -> &[CleanDoc] {
        self.docs
    }

    pub fn options(&self) -> &CvOptions {
        &self.opts
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CVResult {
    pub encoder: EncoderTag,
    pub family: ModelFamily,
    pub hyperparams: Hyperparams,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Held-out scores in corpus order (each document scored by the fold
    /// that held it out).
    pub oof_scores: Vec<f64>,
    pub oof_labels: Vec<Label>,
    /// Training curves per fold (neural families only).
    pub curves: Vec<TrainingCurve>,
    pub audits: Vec<FoldAudit>,
    pub outliers: Vec<OutlierReport>,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// One completed (candidate, fold) evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Progress {
    pub encoder: EncoderTag,
    pub family: ModelFamily,
    pub done: usize,
    pub total: usize,
}

struct FoldScore {
    accuracy: f64,
    scores: Vec<f64>,
    curve: Option<TrainingCurve>,
    audit: FoldAudit,
}

fn score_fold(prepared: &PreparedFold, family: ModelFamily, hp: &Hyperparams, master: u64) -> Result<FoldScore> {
    let fold = prepared.fold;
    let tag = prepared.test.encoder();
    let audit = audit(fold, "model", &prepared.held_out_ids, prepared.train.ids(), true)?;
    let seed = derive_seed(master, &format!("model/{tag}/{family}/{fold}"));
    let model = fit_model(family, hp, &prepared.train, seed)?;
    let scores = score_features(&model, &prepared.test);
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("held-out score {bad}")));
    }
    let preds: Vec<Label> = scores.iter().map(|&s| Label::from(s > DECISION_THRESHOLD)).collect();
    Ok(FoldScore {
        accuracy: accuracy(&preds, prepared.test.labels())?,
        scores,
        curve: model.curve().cloned(),
        audit,
    })
}

/// Cross-validates every candidate in `candidates`. Folds are the outer
/// loop so only one prepared fold needs to be alive when the cache is off;
/// candidates within a fold run in parallel. Results come back in
/// candidate order.
pub fn evaluate_candidates(
    cache: &FoldCache<'_>,
    family: ModelFamily,
    candidates: &[Hyperparams],
    progress: Option<&Sender<Progress>>,
) -> Result<Vec<CVResult>> {
    let k = cache.k();
    let n_docs = cache.docs().len();
    let total = candidates.len() * k;
    let mut per_candidate: Vec<Vec<FoldScore>> = (0..candidates.len()).map(|_| Vec::with_capacity(k)).collect();
    let mut prepared_meta = Vec::with_capacity(k);
    let mut elapsed = vec![Duration::ZERO; candidates.len()];
    let mut done = 0;

    for fold in 0..k {
        let prepared = cache.get(fold)?;
        let timed: Vec<(Result<FoldScore>, Duration)> = candidates
            .par_iter()
            .map(|hp| {
                let start = Instant::now();
                let r = score_fold(&prepared, family, hp, cache.options().seed);
                (r, start.elapsed())
            })
            .collect();
        for (ci, (r, t)) in timed.into_iter().enumerate() {
            per_candidate[ci].push(r.map_err(|e| e.in_fold(fold + 1))?);
            elapsed[ci] += t;
            done += 1;
            if let Some(tx) = progress {
                // a dropped receiver only means nobody is listening
                let _ = tx.send(Progress {
                    encoder: cache.tag(),
                    family,
                    done,
                    total,
                });
            }
        }
        prepared_meta.push((prepared.audits.clone(), prepared.outliers.clone()));
    }

    let folds = cache.folds();
    let mut results = Vec::with_capacity(candidates.len());
    for (ci, scores) in per_candidate.into_iter().enumerate() {
        let mut oof_scores = vec![f64::NAN; n_docs];
        let mut audits = Vec::new();
        let mut curves = Vec::new();
        let mut fold_accuracies = Vec::with_capacity(k);
        for (fold, fs) in scores.into_iter().enumerate() {
            for (&doc_index, s) in folds.test_indices(fold).iter().zip(fs.scores) {
                oof_scores[doc_index] = s;
            }
            audits.extend(prepared_meta[fold].0.iter().cloned());
            audits.push(fs.audit);
            curves.extend(fs.curve);
            fold_accuracies.push(fs.accuracy);
        }
        let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
        results.push(CVResult {
            encoder: cache.tag(),
            family,
            hyperparams: candidates[ci].clone(),
            fold_accuracies,
            mean_accuracy,
            oof_scores,
            oof_labels: cache.docs().iter().map(|d| d.label).collect(),
            curves,
            audits,
            outliers: prepared_meta.iter().map(|m| m.1.clone()).collect(),
            wall_time: elapsed[ci],
        });
    }
    Ok(results)
}

/// Cross-validated accuracy of one encoder and model configuration.
pub fn kfold_score(
    encoder: &EncoderConfig,
    family: ModelFamily,
    hyperparams: &Hyperparams,
    docs: &[CleanDoc],
    opts: &CvOptions,
) -> Result<CVResult> {
    let cache = FoldCache::new(encoder, docs, opts)?;
    let mut r = evaluate_candidates(&cache, family, std::slice::from_ref(hyperparams), None)?;
    Ok(r.remove(0))
}
