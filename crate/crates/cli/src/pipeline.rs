//! The full run: clean, encode per fold, remove outliers, grid search each
//! model family, then write reports and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::Sender;

use fakenews_core::ingest::load_csv;
use fakenews_core::models::ModelFamily;
use fakenews_core::preprocess::{clean_corpus, DropReport};
use fakenews_core::tune_eval::build::complexity;
use fakenews_core::tune_eval::encoders::remove_outlier_rows;
use fakenews_core::tune_eval::{
    canonical, derive_seed, emit_reports, evaluate_candidates, fit_encoder, fit_model, roc_curve,
    staged_grid_search, CellReport, CvOptions, FittedEncoder, FoldCache, Progress,
};
use fakenews_core::{CleanDoc, EncoderTag, Error, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bundle::ModelBundle;
use crate::config::{hp_json, RunConfig};

pub const MANIFEST: &str = "run.json";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write(out: &Path, rel: &str, contents: &[u8]) -> Result<PathBuf> {
    let path = out.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(PathBuf::from(rel))
}

/// Whether a family is run on an encoder. Word-vector sequences only feed
/// the recurrent model.
pub fn pairs_with(encoder: EncoderTag, family: ModelFamily) -> bool {
    encoder != EncoderTag::W2vSeq || family == ModelFamily::Lstm
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub cells: Vec<CellReport>,
    pub drops: DropReport,
    pub manifest: Value,
}

pub fn cv_options(cfg: &RunConfig) -> CvOptions {
    CvOptions {
        k: cfg.k,
        seed: cfg.seed,
        contamination: cfg.contamination,
        isolation: cfg.isolation,
        paper_mode: cfg.paper_mode,
        cell_budget: cfg.cell_budget,
    }
}

/// Runs the configured experiment. The manifest is removed first and
/// written last, so its presence marks a completed run.
pub fn run(cfg: &RunConfig, progress: Option<&Sender<Progress>>) -> Result<RunSummary> {
    cfg.validate()?;
    let out = cfg.output_dir();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let manifest_path = out.join(MANIFEST);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    }

    let records = load_csv(&cfg.data_path)?;
    let stoplist = cfg.stoplist.load()?;
    let (docs, drops) = clean_corpus(&records, &stoplist, &cfg.clean);
    let mut written = vec![write(&out, "reports/drops.tsv", drops.to_tsv().as_bytes())?];
    if docs.is_empty() {
        return Err(Error::Empty("every document was dropped during cleaning".into()));
    }

    let opts = cv_options(cfg);
    let mut cells = Vec::new();
    for &tag in &cfg.encoders {
        let cache = FoldCache::new(&cfg.encoder_settings[&tag], &docs, &opts)?;
        let dim = cache.get(0)?.train.dim();
        let mut final_encoder: Option<FittedEncoder> = None;
        for &family in cfg.models.iter().filter(|&&f| pairs_with(tag, f)) {
            let grid = &cfg.grids[&family];
            let outcome = staged_grid_search(
                &grid.stages,
                &grid.fixed,
                |hp| complexity(family, hp, dim),
                |_, candidates| evaluate_candidates(&cache, family, candidates, progress),
            )?;
            let best = outcome.best_result();
            let roc = roc_curve(&best.oof_scores, &best.oof_labels).ok();
            if cfg.save_models {
                if final_encoder.is_none() {
                    let seed = derive_seed(cfg.seed, &format!("encoder/{tag}/final"));
                    final_encoder = Some(fit_encoder(&cfg.encoder_settings[&tag], &docs, seed)?);
                }
                let encoder = final_encoder.clone().expect("fitted above");
                let bundle = final_fit(cfg, &docs, encoder, family, &outcome.best, best.mean_accuracy, &stoplist)?;
                let rel = format!("models/{family}_{tag}.bin");
                let path = out.join(&rel);
                if let Some(dir) = path.parent() {
                    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
                bundle.save(&path)?;
                written.push(PathBuf::from(rel));
            }
            cells.push(CellReport {
                encoder: tag,
                family,
                grid: outcome,
                roc,
            });
        }
    }
    written.extend(emit_reports(&cells, &cfg.encoders, &cfg.models, &out)?);

    let manifest = build_manifest(cfg, &records.len(), &drops, &cells, &out, &written)?;
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is plain JSON") + "\n";
    let tmp = out.join(format!("{MANIFEST}.tmp"));
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(RunSummary {
        out_dir: out,
        cells,
        drops,
        manifest,
    })
}

fn final_fit(
    cfg: &RunConfig,
    docs: &[CleanDoc],
    encoder: FittedEncoder,
    family: ModelFamily,
    hp: &fakenews_core::tune_eval::Hyperparams,
    cv_mean_accuracy: f64,
    stoplist: &fakenews_core::StopList,
) -> Result<ModelBundle> {
    let tag = encoder.tag();
    let features = encoder.transform(docs, cfg.cell_budget)?;
    let iso = fakenews_core::outlier::IsoForestParams {
        seed: derive_seed(cfg.seed, &format!("isolation/{tag}/final")),
        ..cfg.isolation
    };
    let (features, _) = remove_outlier_rows(features, cfg.contamination, &iso)?;
    let model = fit_model(family, hp, &features, derive_seed(cfg.seed, &format!("model/{tag}/{family}/final")))?;
    let mut stopwords: Vec<String> = stoplist.words.iter().cloned().collect();
    stopwords.sort();
    Ok(ModelBundle {
        family,
        hyperparams: hp.clone(),
        encoder,
        model,
        stopwords,
        stoplist_source: stoplist.source_name.clone(),
        clean: cfg.clean,
        seed: cfg.seed,
        trained_on: features.n_rows(),
        cv_mean_accuracy,
    })
}

fn build_manifest(
    cfg: &RunConfig,
    n_records: &usize,
    drops: &DropReport,
    cells: &[CellReport],
    out: &Path,
    written: &[PathBuf],
) -> Result<Value> {
    let config = match &cfg.source {
        Some(p) => json!({ "path": p.display().to_string(), "sha256": sha256_file(p)? }),
        None => Value::Null,
    };
    let results: Vec<Value> = cells
        .iter()
        .map(|c| {
            let best = c.grid.best_result();
            let encoder_overlap: usize = best.audits.iter().filter(|a| a.stage == "encoder").map(|a| a.overlap).sum();
            json!({
                "encoder": c.encoder.to_string(),
                "family": c.family.to_string(),
                "best": hp_json(&c.grid.best),
                "best_canonical": canonical(&c.grid.best),
                "mean_accuracy": best.mean_accuracy,
                "fold_accuracies": best.fold_accuracies,
                "auc": c.roc.as_ref().map(|r| r.auc),
                "evaluations": c.grid.cells.len(),
                "encoder_overlap": encoder_overlap,
            })
        })
        .collect();
    let mut artifacts = BTreeMap::new();
    for rel in written {
        artifacts.insert(rel.display().to_string(), sha256_file(&out.join(rel))?);
    }
    Ok(json!({
        "seed": cfg.seed,
        "mode": if cfg.paper_mode { "paper" } else { "per-fold" },
        "k": cfg.k,
        "config": config,
        "dataset": {
            "path": cfg.data_path.display().to_string(),
            "sha256": sha256_file(&cfg.data_path)?,
            "records": n_records,
            "kept": drops.kept,
            "dropped_non_english": drops.non_english,
            "dropped_empty": drops.empty,
        },
        "effective_config": cfg.to_json(),
        "results": results,
        "artifacts": artifacts,
    }))
}

/// One mismatch found by [`verify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub what: String,
    pub path: String,
}

/// Re-hashes the configuration, dataset and artifacts a manifest names.
pub fn verify(out: &Path) -> Result<Vec<Mismatch>> {
    let path = out.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Value =
        serde_json::from_str(&text).map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
    let mut checks: Vec<(String, PathBuf, String)> = Vec::new();
    let field = |v: &Value, key: &str| v.get(key).and_then(Value::as_str).map(str::to_string);
    if let (Some(p), Some(h)) = (field(&manifest["config"], "path"), field(&manifest["config"], "sha256")) {
        checks.push(("config".into(), PathBuf::from(p), h));
    }
    match (field(&manifest["dataset"], "path"), field(&manifest["dataset"], "sha256")) {
        (Some(p), Some(h)) => checks.push(("dataset".into(), PathBuf::from(p), h)),
        _ => return Err(Error::ModelFormat(format!("{}: no dataset hash", path.display()))),
    }
    if let Some(arts) = manifest["artifacts"].as_object() {
        for (rel, h) in arts {
            checks.push(("artifact".into(), out.join(rel), h.as_str().unwrap_or_default().to_string()));
        }
    }
    let mut mismatches = Vec::new();
    for (what, p, expected) in checks {
        let ok = matches!(sha256_file(&p), Ok(h) if h == expected);
        if !ok {
            mismatches.push(Mismatch {
                what,
                path: p.display().to_string(),
            });
        }
    }
    Ok(mismatches)
}
