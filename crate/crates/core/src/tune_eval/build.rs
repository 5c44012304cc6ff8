//! Hyperparameter maps to concrete model configurations.

use super::encoders::Features;
use super::grid::{Hyperparams, ParamValue};
use crate::error::{Error, Result};
use crate::models::{
    fit_linear_svm, fit_logreg, fit_lstm, fit_lstm_sequences, fit_mlp, fit_random_forest, Activation, ForestParams,
    LogRegParams, LstmConfig, MlpConfig, ModelFamily, OptimizerKind, SvmParams, TrainedModel,
};

/// Keys each family accepts.
pub fn known_keys(family: ModelFamily) -> &'static [&'static str] {
    match family {
        ModelFamily::Svm => &["kernel", "c", "epochs"],
        ModelFamily::LogReg => &["c", "epochs", "lr"],
        ModelFamily::RandomForest => &[
            "n_estimators",
            "max_depth",
            "min_samples_split",
            "min_samples_leaf",
            "max_features",
            "bootstrap",
        ],
        ModelFamily::Mlp => &["hidden_layers", "neurons", "activation", "optimizer", "lr", "epochs", "batch_size"],
        ModelFamily::Lstm => &[
            "memcells",
            "hidden_layers",
            "neurons",
            "activation",
            "optimizer",
            "lr",
            "epochs",
            "batch_size",
            "dropout",
        ],
    }
}

struct Reader<'a> {
    family: ModelFamily,
    hp: &'a Hyperparams,
}

impl Reader<'_> {
    fn bad(&self, key: &str, want: &str) -> Error {
        Error::Config(format!(
            "{}: hyperparameter '{key}' must be {want}, got '{}'",
            self.family, self.hp[key]
        ))
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.hp.get(key) {
            None => Ok(default),
            Some(ParamValue::Float(x)) => Ok(*x),
            Some(ParamValue::Int(i)) => Ok(*i as f64),
            Some(_) => Err(self.bad(key, "a number")),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.hp.get(key) {
            None => Ok(default),
            Some(ParamValue::Int(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(self.bad(key, "a non-negative integer")),
        }
    }

    /// Integer, or the string "none" for no limit.
    fn opt_usize(&self, key: &str, default: Option<usize>) -> Result<Option<usize>> {
        match self.hp.get(key) {
            Some(ParamValue::Str(s)) if s.eq_ignore_ascii_case("none") => Ok(None),
            None => Ok(default),
            Some(_) => self.usize(key, 0).map(Some),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.hp.get(key) {
            None => Ok(default),
            Some(ParamValue::Bool(b)) => Ok(*b),
            Some(_) => Err(self.bad(key, "true or false")),
        }
    }

    fn str(&self, key: &str) -> Option<&str> {
        match self.hp.get(key) {
            Some(ParamValue::Str(s)) => Some(s),
            _ => None,
        }
    }

    fn activation(&self, default: Activation) -> Result<Activation> {
        match self.hp.get("activation") {
            None => Ok(default),
            Some(_) => self
                .str("activation")
                .and_then(Activation::parse)
                .ok_or_else(|| self.bad("activation", "relu, sigmoid or tanh")),
        }
    }

    fn optimizer(&self) -> Result<OptimizerKind> {
        match self.hp.get("optimizer") {
            None => Ok(OptimizerKind::Adam),
            Some(_) => self
                .str("optimizer")
                .and_then(OptimizerKind::parse)
                .ok_or_else(|| self.bad("optimizer", "adam or sgd")),
        }
    }

    /// Adam defaults to 1e-3 and plain SGD to 1e-2 unless `lr` is given.
    fn lr(&self, optimizer: OptimizerKind) -> Result<f64> {
        let default = match optimizer {
            OptimizerKind::Adam => 1e-3,
            OptimizerKind::Sgd => 1e-2,
        };
        self.f64("lr", default)
    }
}

pub fn check_keys(family: ModelFamily, hp: &Hyperparams) -> Result<()> {
    let known = known_keys(family);
    for key in hp.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "{family}: unknown hyperparameter '{key}' (expected one of {})",
                known.join(", ")
            )));
        }
    }
    Ok(())
}

pub fn svm_params(hp: &Hyperparams) -> Result<SvmParams> {
    check_keys(ModelFamily::Svm, hp)?;
    let r = Reader { family: ModelFamily::Svm, hp };
    if let Some(k) = hp.get("kernel") {
        if r.str("kernel") != Some("linear") {
            return Err(Error::Config(format!("svm: only the linear kernel is supported, got '{k}'")));
        }
    }
    let d = SvmParams::default();
    Ok(SvmParams {
        c: r.f64("c", d.c)?,
        epochs: r.usize("epochs", d.epochs)?,
    })
}

pub fn logreg_params(hp: &Hyperparams) -> Result<LogRegParams> {
    check_keys(ModelFamily::LogReg, hp)?;
    let r = Reader { family: ModelFamily::LogReg, hp };
    let d = LogRegParams::default();
    Ok(LogRegParams {
        c: r.f64("c", d.c)?,
        epochs: r.usize("epochs", d.epochs)?,
        lr: r.f64("lr", d.lr)?,
    })
}

pub fn forest_params(hp: &Hyperparams, seed: u64) -> Result<ForestParams> {
    check_keys(ModelFamily::RandomForest, hp)?;
    let r = Reader { family: ModelFamily::RandomForest, hp };
    let d = ForestParams::default();
    Ok(ForestParams {
        n_estimators: r.usize("n_estimators", d.n_estimators)?,
        max_depth: r.opt_usize("max_depth", d.max_depth)?,
        min_samples_split: r.usize("min_samples_split", d.min_samples_split)?,
        min_samples_leaf: r.usize("min_samples_leaf", d.min_samples_leaf)?,
        max_features: r.opt_usize("max_features", d.max_features)?,
        bootstrap: r.bool("bootstrap", d.bootstrap)?,
        seed,
    })
}

pub fn mlp_config(hp: &Hyperparams, seed: u64) -> Result<MlpConfig> {
    check_keys(ModelFamily::Mlp, hp)?;
    let r = Reader { family: ModelFamily::Mlp, hp };
    let d = MlpConfig::default();
    let optimizer = r.optimizer()?;
    Ok(MlpConfig {
        hidden_layers: r.usize("hidden_layers", d.hidden_layers)?,
        neurons: r.usize("neurons", d.neurons)?,
        activation: r.activation(d.activation)?,
        optimizer,
        lr: r.lr(optimizer)?,
        epochs: r.usize("epochs", d.epochs)?,
        batch_size: r.usize("batch_size", d.batch_size)?,
        seed,
    })
}

pub fn lstm_config(hp: &Hyperparams, timesteps: usize, seed: u64) -> Result<LstmConfig> {
    check_keys(ModelFamily::Lstm, hp)?;
    let r = Reader { family: ModelFamily::Lstm, hp };
    let d = LstmConfig::default();
    let optimizer = r.optimizer()?;
    Ok(LstmConfig {
        memcells: r.usize("memcells", d.memcells)?,
        hidden_layers: r.usize("hidden_layers", d.hidden_layers)?,
        neurons: r.usize("neurons", d.neurons)?,
        activation: r.activation(d.activation)?,
        optimizer,
        lr: r.lr(optimizer)?,
        epochs: r.usize("epochs", d.epochs)?,
        batch_size: r.usize("batch_size", d.batch_size)?,
        dropout: r.f64("dropout", d.dropout)?,
        timesteps,
        seed,
    })
}

/// Checks a hyperparameter map without fitting anything.
pub fn validate_hyperparams(family: ModelFamily, hp: &Hyperparams) -> Result<()> {
    match family {
        ModelFamily::Svm => svm_params(hp).map(drop),
        ModelFamily::LogReg => logreg_params(hp).map(drop),
        ModelFamily::RandomForest => forest_params(hp, 0).map(drop),
        ModelFamily::Mlp => mlp_config(hp, 0).map(drop),
        ModelFamily::Lstm => lstm_config(hp, 1, 0).map(drop),
    }
}

/// Trainable parameter count for `input_dim` features; the forest counts
/// its maximum possible node total. Used to break accuracy ties.
pub fn complexity(family: ModelFamily, hp: &Hyperparams, input_dim: usize) -> u64 {
    let n = input_dim as u64;
    match family {
        ModelFamily::Svm | ModelFamily::LogReg => n + 1,
        ModelFamily::RandomForest => {
            let p = forest_params(hp, 0).unwrap_or_default();
            let depth = p.max_depth.unwrap_or(32).min(32) as u32;
            (p.n_estimators as u64).saturating_mul((1u64 << (depth + 1)) - 1)
        }
        ModelFamily::Mlp => {
            let c = mlp_config(hp, 0).unwrap_or_default();
            let mut sizes = vec![n];
            sizes.extend(std::iter::repeat_n(c.neurons as u64, c.hidden_layers));
            sizes.push(1);
            sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
        }
        ModelFamily::Lstm => {
            let c = lstm_config(hp, 1, 0).unwrap_or_default();
            let h = c.memcells as u64;
            let mut sizes = vec![h];
            sizes.extend(std::iter::repeat_n(c.neurons as u64, c.hidden_layers));
            sizes.push(1);
            4 * h * (n + h + 1) + sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum::<u64>()
        }
    }
}

/// Fits one model. The LSTM reads sequences step by step; the other
/// families see sequences mean-pooled.
pub fn fit_model(family: ModelFamily, hp: &Hyperparams, train: &Features, seed: u64) -> Result<TrainedModel> {
    if let (ModelFamily::Lstm, Features::Seq(s)) = (family, train) {
        let cfg = lstm_config(hp, crate::models::lstm::SEQUENCE_TIMESTEPS, seed)?;
        return Ok(TrainedModel::Lstm(fit_lstm_sequences(&s.seqs, &s.labels, s.dim, &cfg)?));
    }
    let owned;
    let x = match train {
        Features::Dense(x) => x,
        Features::Seq(_) => {
            owned = train.pooled();
            &owned
        }
    };
    Ok(match family {
        ModelFamily::Svm => TrainedModel::Svm(fit_linear_svm(x, &svm_params(hp)?)?),
        ModelFamily::LogReg => TrainedModel::LogReg(fit_logreg(x, &logreg_params(hp)?)?),
        ModelFamily::RandomForest => TrainedModel::RandomForest(fit_random_forest(x, &forest_params(hp, seed)?)?),
        ModelFamily::Mlp => TrainedModel::Mlp(fit_mlp(x, &mlp_config(hp, seed)?)?),
        ModelFamily::Lstm => TrainedModel::Lstm(fit_lstm(x, &lstm_config(hp, 1, seed)?)?),
    })
}

/// Scores every row of `features` with a fitted model.
pub fn score_features(model: &TrainedModel, features: &Features) -> Vec<f64> {
    use crate::models::Classifier;
    match features {
        Features::Dense(x) => x.rows().map(|r| model.predict_score(r)).collect(),
        Features::Seq(s) => s
            .seqs
            .iter()
            .map(|seq| model.predict_score_sequence(seq, s.dim))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(pairs: &[(&str, ParamValue)]) -> Hyperparams {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        assert!(svm_params(&hp(&[("gamma", ParamValue::Float(1.0))])).is_err());
        assert!(svm_params(&hp(&[("kernel", ParamValue::Str("rbf".into()))])).is_err());
        assert!(logreg_params(&hp(&[("c", ParamValue::Str("big".into()))])).is_err());
        let p = svm_params(&hp(&[("kernel", ParamValue::Str("linear".into())), ("c", ParamValue::Int(2))])).unwrap();
        assert_eq!(p.c, 2.0);
    }

    #[test]
    fn forest_depth_none() {
        let p = forest_params(&hp(&[("max_depth", ParamValue::Str("none".into()))]), 3).unwrap();
        assert_eq!(p.max_depth, None);
        assert_eq!(p.seed, 3);
    }

    #[test]
    fn sgd_has_its_own_default_rate() {
        let c = mlp_config(&hp(&[("optimizer", ParamValue::Str("sgd".into()))]), 0).unwrap();
        assert_eq!(c.lr, 1e-2);
        let c = mlp_config(&Hyperparams::new(), 0).unwrap();
        assert_eq!(c.lr, 1e-3);
    }

    #[test]
    fn complexity_grows_with_width() {
        let small = complexity(ModelFamily::Mlp, &hp(&[("neurons", ParamValue::Int(4))]), 10);
        let big = complexity(ModelFamily::Mlp, &hp(&[("neurons", ParamValue::Int(8))]), 10);
        assert_eq!(small, 10 * 4 + 4 + 4 * 4 + 4 + 4 + 1);
        assert!(big > small);
    }
}
