//! Staged grid search: each stage searches its own hyperparameters
//! exhaustively while the winners of earlier stages stay frozen.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::cv::CVResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Str(s) => f.write_str(s),
        }
    }
}

impl ParamValue {
    pub fn from_toml(v: &toml::Value) -> Result<Self> {
        match v {
            toml::Value::Boolean(b) => Ok(ParamValue::Bool(*b)),
            toml::Value::Integer(i) => Ok(ParamValue::Int(*i)),
            toml::Value::Float(x) => Ok(ParamValue::Float(*x)),
            toml::Value::String(s) => Ok(ParamValue::Str(s.clone())),
            other => Err(Error::Config(format!("unsupported hyperparameter value {other}"))),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ParamValue::Bool(b) => serde_json::Value::from(*b),
            ParamValue::Int(i) => serde_json::Value::from(*i),
            ParamValue::Float(x) => serde_json::Value::from(*x),
            ParamValue::Str(s) => serde_json::Value::from(s.as_str()),
        }
    }
}

pub type Hyperparams = BTreeMap<String, ParamValue>;

/// `name=value` pairs joined by commas, in key order.
pub fn canonical(hp: &Hyperparams) -> String {
    hp.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridStage {
    pub name: String,
    /// Hyperparameters searched together in this stage (Cartesian product).
    pub params: Vec<(String, Vec<ParamValue>)>,
}

impl GridStage {
    pub fn new(name: &str, params: Vec<(&str, Vec<ParamValue>)>) -> Self {
        GridStage {
            name: name.to_string(),
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.params.iter().map(|(_, v)| v.len()).product()
    }

    /// Candidate assignments, varying the last-listed parameter fastest.
    pub fn candidates(&self) -> Vec<Hyperparams> {
        let mut out = vec![Hyperparams::new()];
        for (name, values) in &self.params {
            out = out
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut hp = base.clone();
                        hp.insert(name.clone(), v.clone());
                        hp
                    })
                })
                .collect();
        }
        out
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub stage: usize,
    pub stage_name: String,
    pub result: CVResult,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub best: Hyperparams,
    /// Index into `cells` of the final winner.
    pub best_cell: usize,
    pub cells: Vec<GridCell>,
}

impl GridOutcome {
    pub fn best_result(&self) -> &CVResult {
        &self.cells[self.best_cell].result
    }
}

pub fn validate_stages(stages: &[GridStage]) -> Result<()> {
    if stages.is_empty() {
        return Err(Error::Config("grid search needs at least one stage".into()));
    }
    let mut seen = BTreeSet::new();
    for s in stages {
        if s.params.is_empty() {
            return Err(Error::Config(format!("grid stage '{}' has no hyperparameters", s.name)));
        }
        for (name, values) in &s.params {
            if values.is_empty() {
                return Err(Error::Config(format!(
                    "grid stage '{}': empty candidate list for '{name}'",
                    s.name
                )));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::Config(format!(
                    "grid stage '{}' re-opens '{name}', already searched by an earlier stage",
                    s.name
                )));
            }
        }
    }
    Ok(())
}

/// Runs the stages in order. `evaluate` receives one stage's full candidate
/// assignments (fixed context, earlier winners and the stage's own values)
/// and returns one result per candidate, in order. Within a stage the winner
/// has the highest mean accuracy; ties go to the lower `complexity`, then
/// to the lexicographically smaller canonical form.
pub fn staged_grid_search<E, C>(
    stages: &[GridStage],
    fixed: &Hyperparams,
    complexity: C,
    mut evaluate: E,
) -> Result<GridOutcome>
where
    E: FnMut(usize, &[Hyperparams]) -> Result<Vec<CVResult>>,
    C: Fn(&Hyperparams) -> u64,
{
    validate_stages(stages)?;
    let mut frozen = fixed.clone();
    let mut cells = Vec::new();
    let mut best_cell = 0;
    for (si, stage) in stages.iter().enumerate() {
        let candidates: Vec<Hyperparams> = stage
            .candidates()
            .into_iter()
            .map(|c| {
                let mut hp = frozen.clone();
                hp.extend(c);
                hp
            })
            .collect();
        let results = evaluate(si, &candidates)?;
        if results.len() != candidates.len() {
            return Err(Error::DimensionMismatch {
                expected: candidates.len(),
                got: results.len(),
            });
        }
        let first = cells.len();
        let mut winner = 0;
        for (i, r) in results.iter().enumerate().skip(1) {
            let w = &results[winner];
            let better = match r.mean_accuracy.total_cmp(&w.mean_accuracy) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => {
                    let (ci, cw) = (complexity(&candidates[i]), complexity(&candidates[winner]));
                    ci < cw || (ci == cw && canonical(&candidates[i]) < canonical(&candidates[winner]))
                }
            };
            if better {
                winner = i;
            }
        }
        frozen = candidates[winner].clone();
        best_cell = first + winner;
        cells.extend(results.into_iter().map(|result| GridCell {
            stage: si,
            stage_name: stage.name.clone(),
            result,
        }));
    }
    Ok(GridOutcome {
        best: frozen,
        best_cell,
        cells,
    })
}
