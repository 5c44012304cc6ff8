//! Run configuration read from TOML, with command-line overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use fakenews_core::models::ModelFamily;
use fakenews_core::outlier::IsoForestParams;
use fakenews_core::tune_eval::build::{check_keys, validate_hyperparams};
use fakenews_core::tune_eval::encoders::DEFAULT_SEQUENCE_LEN;
use fakenews_core::tune_eval::grid::validate_stages;
use fakenews_core::tune_eval::{EncoderConfig, GridStage, Hyperparams, ParamValue};
use fakenews_core::vectorize::{W2VParams, DEFAULT_CELL_BUDGET, DEFAULT_MAX_FEATURES};
use fakenews_core::{CleanConfig, EncoderTag, Error, Result, StopList};
use serde::Deserialize;
use serde_json::{json, Value};

pub const OUTPUT_ENV: &str = "FAKENEWS_OUT";
pub const DEFAULT_OUTPUT: &str = "fakenews-out";

#[derive(Debug, Clone, PartialEq)]
pub enum StopListSource {
    Builtin,
    Disabled,
    File(PathBuf),
}

impl StopListSource {
    pub fn load(&self) -> Result<StopList> {
        match self {
            StopListSource::Builtin => Ok(StopList::english()),
            StopListSource::Disabled => Ok(StopList::empty()),
            StopListSource::File(p) => StopList::from_file(p),
        }
    }

    fn describe(&self) -> String {
        match self {
            StopListSource::Builtin => "builtin".into(),
            StopListSource::Disabled => "none".into(),
            StopListSource::File(p) => p.display().to_string(),
        }
    }
}

/// Grid definition for one model family.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrid {
    pub family: ModelFamily,
    pub fixed: Hyperparams,
    pub stages: Vec<GridStage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// File the configuration was read from, if any.
    pub source: Option<PathBuf>,
    pub data_path: PathBuf,
    pub stoplist: StopListSource,
    pub clean: CleanConfig,
    pub seed: u64,
    pub k: usize,
    pub contamination: f64,
    pub paper_mode: bool,
    pub output: Option<PathBuf>,
    pub cell_budget: u64,
    pub save_models: bool,
    /// Selected encoders and model families, in run order.
    pub encoders: Vec<EncoderTag>,
    pub models: Vec<ModelFamily>,
    /// Settings for every encoder and family, selected or not.
    pub encoder_settings: BTreeMap<EncoderTag, EncoderConfig>,
    pub grids: BTreeMap<ModelFamily, ModelGrid>,
    pub isolation: IsoForestParams,
}

/// Values given on the command line; each one replaces the file's value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub contamination: Option<f64>,
    pub paper_mode: bool,
    pub output: Option<PathBuf>,
    pub encoders: Option<Vec<EncoderTag>>,
    pub models: Option<Vec<ModelFamily>>,
    pub save_models: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data: RawData,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    encoders: RawEncoders,
    #[serde(default)]
    isolation: RawIsolation,
    #[serde(default)]
    models: BTreeMap<String, toml::Table>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    path: PathBuf,
    stoplist: Option<String>,
    english_threshold: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
    k: Option<usize>,
    contamination: Option<f64>,
    paper_mode: Option<bool>,
    output: Option<PathBuf>,
    cell_budget: Option<u64>,
    save_models: Option<bool>,
    encoders: Option<Vec<String>>,
    models: Option<Vec<String>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEncoders {
    count: Option<RawBow>,
    tfidf: Option<RawBow>,
    w2v: Option<RawW2v>,
    w2v_seq: Option<RawW2v>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBow {
    max_features: usize,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawW2v {
    dim: Option<usize>,
    window: Option<usize>,
    min_count: Option<u64>,
    epochs: Option<usize>,
    negatives: Option<usize>,
    lr: Option<f64>,
    min_doc_len: Option<usize>,
    max_len: Option<usize>,
}

impl RawW2v {
    fn params(&self) -> W2VParams {
        let d = W2VParams::default();
        W2VParams {
            dim: self.dim.unwrap_or(d.dim),
            window: self.window.unwrap_or(d.window),
            min_count: self.min_count.unwrap_or(d.min_count),
            epochs: self.epochs.unwrap_or(d.epochs),
            negatives: self.negatives.unwrap_or(d.negatives),
            lr: self.lr.unwrap_or(d.lr),
            seed: 0,
            min_doc_len: self.min_doc_len,
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawIsolation {
    n_trees: Option<usize>,
    subsample: Option<usize>,
}

fn floats(values: &[f64]) -> Vec<ParamValue> {
    values.iter().map(|&v| ParamValue::Float(v)).collect()
}

fn ints(values: &[i64]) -> Vec<ParamValue> {
    values.iter().map(|&v| ParamValue::Int(v)).collect()
}

fn strs(values: &[&str]) -> Vec<ParamValue> {
    values.iter().map(|v| ParamValue::Str(v.to_string())).collect()
}

/// 19 log-spaced values from 1e-4 to 1e4.
pub fn log_spaced_c() -> Vec<f64> {
    (0..19).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 18.0)).collect()
}

/// The grid searched when a family has no stages in the configuration.
pub fn default_grid(family: ModelFamily) -> ModelGrid {
    let (fixed, stages) = match family {
        ModelFamily::Svm => (
            Hyperparams::new(),
            vec![GridStage::new(
                "kernel_c",
                vec![("kernel", strs(&["linear"])), ("c", floats(&[0.25, 0.5, 0.75]))],
            )],
        ),
        ModelFamily::LogReg => (Hyperparams::new(), vec![GridStage::new("c", vec![("c", floats(&log_spaced_c()))])]),
        ModelFamily::RandomForest => (
            Hyperparams::new(),
            vec![GridStage::new(
                "forest",
                vec![
                    ("n_estimators", ints(&[200, 400, 800])),
                    ("max_depth", ints(&[1, 5, 9])),
                    ("min_samples_leaf", ints(&[2, 4])),
                    ("min_samples_split", ints(&[5, 10])),
                ],
            )],
        ),
        ModelFamily::Mlp => (
            Hyperparams::new(),
            vec![
                GridStage::new("activation", vec![("activation", strs(&["relu", "sigmoid", "tanh"]))]),
                GridStage::new("optimizer", vec![("optimizer", strs(&["adam", "sgd"]))]),
                GridStage::new(
                    "architecture",
                    vec![("hidden_layers", ints(&[1, 2, 3])), ("neurons", ints(&[200, 400, 600]))],
                ),
            ],
        ),
        ModelFamily::Lstm => (
            [("memcells".to_string(), ParamValue::Int(200))].into_iter().collect(),
            vec![
                GridStage::new("hidden_layers", vec![("hidden_layers", ints(&[0, 1, 2]))]),
                GridStage::new("neurons", vec![("neurons", ints(&[100, 200, 400]))]),
                GridStage::new("activation", vec![("activation", strs(&["relu", "sigmoid", "tanh"]))]),
                GridStage::new("optimizer", vec![("optimizer", strs(&["adam", "sgd"]))]),
            ],
        ),
    };
    ModelGrid { family, fixed, stages }
}

fn parse_model_table(family: ModelFamily, table: &toml::Table) -> Result<ModelGrid> {
    let bad = |msg: String| Error::Config(format!("[models.{family}]: {msg}"));
    let mut grid = default_grid(family);
    for key in table.keys() {
        if key != "fixed" && key != "stages" {
            return Err(bad(format!("unknown key '{key}' (expected 'fixed' or 'stages')")));
        }
    }
    if let Some(fixed) = table.get("fixed") {
        let fixed = fixed.as_table().ok_or_else(|| bad("'fixed' must be a table".into()))?;
        for (k, v) in fixed {
            grid.fixed.insert(k.clone(), ParamValue::from_toml(v)?);
        }
    }
    if let Some(stages) = table.get("stages") {
        let stages = stages
            .as_array()
            .ok_or_else(|| bad("'stages' must be an array of tables".into()))?;
        grid.stages = stages
            .iter()
            .enumerate()
            .map(|(i, s)| parse_stage(i, s).map_err(|e| bad(e.to_string())))
            .collect::<Result<_>>()?;
    }
    Ok(grid)
}

fn parse_stage(index: usize, value: &toml::Value) -> Result<GridStage> {
    let table = value
        .as_table()
        .ok_or_else(|| Error::Config(format!("stage {} is not a table", index + 1)))?;
    let mut name = format!("stage{}", index + 1);
    let mut params = Vec::new();
    for (k, v) in table {
        if k == "name" {
            name = v
                .as_str()
                .ok_or_else(|| Error::Config(format!("stage {} name must be a string", index + 1)))?
                .to_string();
            continue;
        }
        let values = match v {
            toml::Value::Array(a) => a.iter().map(ParamValue::from_toml).collect::<Result<Vec<_>>>()?,
            scalar => vec![ParamValue::from_toml(scalar)?],
        };
        params.push((k.clone(), values));
    }
    Ok(GridStage { name, params })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn encoder_config(tag: EncoderTag, raw: &RawEncoders) -> EncoderConfig {
    let bow = |r: &Option<RawBow>| r.as_ref().map_or(DEFAULT_MAX_FEATURES, |b| b.max_features);
    match tag {
        EncoderTag::Count => EncoderConfig::Count {
            max_features: bow(&raw.count),
        },
        EncoderTag::Tfidf => EncoderConfig::Tfidf {
            max_features: bow(&raw.tfidf),
        },
        EncoderTag::W2v => EncoderConfig::W2v {
            params: raw.w2v.as_ref().map(RawW2v::params).unwrap_or_default(),
        },
        EncoderTag::W2vSeq => {
            let r = raw.w2v_seq.as_ref();
            EncoderConfig::W2vSeq {
                params: r.map(RawW2v::params).unwrap_or_default(),
                max_len: r.and_then(|r| r.max_len).unwrap_or(DEFAULT_SEQUENCE_LEN),
            }
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::parse(&text, base)?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    /// Parses configuration text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let stoplist = match raw.data.stoplist.as_deref() {
            None | Some("builtin") => StopListSource::Builtin,
            Some("none") => StopListSource::Disabled,
            Some(p) => StopListSource::File(resolve(base, Path::new(p))),
        };
        let encoder_tags = match &raw.run.encoders {
            Some(names) => names.iter().map(|n| n.parse()).collect::<Result<Vec<EncoderTag>>>()?,
            None => vec![EncoderTag::Count, EncoderTag::Tfidf, EncoderTag::W2v],
        };
        let families = match &raw.run.models {
            Some(names) => names.iter().map(|n| n.parse()).collect::<Result<Vec<ModelFamily>>>()?,
            None => ModelFamily::ALL.to_vec(),
        };
        let mut grids: BTreeMap<ModelFamily, ModelGrid> =
            ModelFamily::ALL.iter().map(|&f| (f, default_grid(f))).collect();
        for (name, table) in &raw.models {
            let family: ModelFamily = name.parse()?;
            grids.insert(family, parse_model_table(family, table)?);
        }
        let all_tags = [EncoderTag::Count, EncoderTag::Tfidf, EncoderTag::W2v, EncoderTag::W2vSeq];
        let iso = IsoForestParams::default();
        let cfg = RunConfig {
            source: None,
            data_path: resolve(base, &raw.data.path),
            stoplist,
            clean: CleanConfig {
                english_threshold: raw
                    .data
                    .english_threshold
                    .unwrap_or(CleanConfig::default().english_threshold),
            },
            seed: raw.run.seed.unwrap_or(0),
            k: raw.run.k.unwrap_or(3),
            contamination: raw.run.contamination.unwrap_or(0.05),
            paper_mode: raw.run.paper_mode.unwrap_or(false),
            output: raw.run.output.as_deref().map(|p| resolve(base, p)),
            cell_budget: raw.run.cell_budget.unwrap_or(DEFAULT_CELL_BUDGET),
            save_models: raw.run.save_models.unwrap_or(false),
            encoders: encoder_tags,
            models: families,
            encoder_settings: all_tags.iter().map(|&t| (t, encoder_config(t, &raw.encoders))).collect(),
            grids,
            isolation: IsoForestParams {
                n_trees: raw.isolation.n_trees.unwrap_or(iso.n_trees),
                subsample: raw.isolation.subsample.unwrap_or(iso.subsample),
                seed: 0,
            },
        };
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(c) = o.contamination {
            self.contamination = c;
        }
        self.paper_mode |= o.paper_mode;
        self.save_models |= o.save_models;
        if let Some(out) = &o.output {
            self.output = Some(out.clone());
        }
        if let Some(e) = &o.encoders {
            self.encoders = e.clone();
        }
        if let Some(m) = &o.models {
            self.models = m.clone();
        }
    }

    /// Checks paths, ranges and every grid candidate before any work starts.
    pub fn validate(&self) -> Result<()> {
        if !self.data_path.is_file() {
            return Err(Error::Config(format!("dataset not found: {}", self.data_path.display())));
        }
        if let StopListSource::File(p) = &self.stoplist {
            if !p.is_file() {
                return Err(Error::Config(format!("stop list not found: {}", p.display())));
            }
        }
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        if !(0.0..0.5).contains(&self.contamination) {
            return Err(Error::Config(format!(
                "contamination must be in [0, 0.5), got {}",
                self.contamination
            )));
        }
        if !(0.0..=1.0).contains(&self.clean.english_threshold) {
            return Err(Error::Config(format!(
                "english_threshold must be in [0, 1], got {}",
                self.clean.english_threshold
            )));
        }
        if self.encoders.is_empty() || self.models.is_empty() {
            return Err(Error::Config("at least one encoder and one model are required".into()));
        }
        for (tag, enc) in &self.encoder_settings {
            let bad = match enc {
                EncoderConfig::Count { max_features } | EncoderConfig::Tfidf { max_features } => *max_features == 0,
                EncoderConfig::W2v { params } => params.dim == 0 || params.window == 0,
                EncoderConfig::W2vSeq { params, max_len } => params.dim == 0 || params.window == 0 || *max_len == 0,
            };
            if bad {
                return Err(Error::Config(format!("[encoders.{tag}]: sizes must be positive")));
            }
        }
        for family in &self.models {
            let grid = &self.grids[family];
            validate_stages(&grid.stages).map_err(|e| Error::Config(format!("[models.{family}]: {e}")))?;
            check_keys(*family, &grid.fixed)?;
            for stage in &grid.stages {
                for candidate in stage.candidates() {
                    let mut hp = grid.fixed.clone();
                    hp.extend(candidate);
                    check_keys(*family, &hp)?;
                    validate_hyperparams(*family, &hp)?;
                }
            }
        }
        Ok(())
    }

    /// `--out` or `[run] output`, then the environment, then a fixed
    /// default in the working directory.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }

    /// Effective configuration as JSON, for the run manifest.
    pub fn to_json(&self) -> Value {
        let encoders: serde_json::Map<String, Value> = self
            .encoders
            .iter()
            .map(|t| {
                let v = match &self.encoder_settings[t] {
                    EncoderConfig::Count { max_features } | EncoderConfig::Tfidf { max_features } => {
                        json!({ "max_features": max_features })
                    }
                    EncoderConfig::W2v { params } => w2v_json(params, None),
                    EncoderConfig::W2vSeq { params, max_len } => w2v_json(params, Some(*max_len)),
                };
                (t.to_string(), v)
            })
            .collect();
        let models: serde_json::Map<String, Value> = self
            .models
            .iter()
            .map(|f| {
                let g = &self.grids[f];
                let stages: Vec<Value> = g
                    .stages
                    .iter()
                    .map(|s| {
                        let params: serde_json::Map<String, Value> = s
                            .params
                            .iter()
                            .map(|(k, vs)| (k.clone(), Value::Array(vs.iter().map(ParamValue::to_json).collect())))
                            .collect();
                        json!({ "name": s.name, "params": params })
                    })
                    .collect();
                (f.to_string(), json!({ "fixed": hp_json(&g.fixed), "stages": stages }))
            })
            .collect();
        json!({
            "data": {
                "path": self.data_path.display().to_string(),
                "stoplist": self.stoplist.describe(),
                "english_threshold": self.clean.english_threshold,
            },
            "run": {
                "seed": self.seed,
                "k": self.k,
                "contamination": self.contamination,
                "paper_mode": self.paper_mode,
                "cell_budget": self.cell_budget,
                "save_models": self.save_models,
            },
            "isolation": { "n_trees": self.isolation.n_trees, "subsample": self.isolation.subsample },
            "encoders": encoders,
            "models": models,
        })
    }
}

pub fn hp_json(hp: &Hyperparams) -> Value {
    Value::Object(hp.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
}

fn w2v_json(p: &W2VParams, max_len: Option<usize>) -> Value {
    let mut v = json!({
        "dim": p.dim,
        "window": p.window,
        "min_count": p.min_count,
        "epochs": p.epochs,
        "negatives": p.negatives,
        "lr": p.lr,
        "min_doc_len": p.min_doc_len,
    });
    if let Some(m) = max_len {
        v["max_len"] = json!(m);
    }
    v
}
