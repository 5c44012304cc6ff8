//! Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fakenews_cli::config::RunConfig;
use fakenews_cli::pipeline;
use fakenews_core::models::mlp::mlp_loss;
use fakenews_core::models::tree::{DecisionTree, TreeParams};
use fakenews_core::models::{
    fit_linear_svm, fit_logreg, fit_random_forest, mlp_backward, Activation, Classifier, ForestParams,
    LogRegParams, LstmConfig, LstmModel, MlpConfig, MlpModel, ModelFamily, SvmParams,
};
use fakenews_core::outlier::{average_path_length, fit_isolation_forest, score_from_path, IsoForestParams};
use fakenews_core::synthetic::{planted_outliers, separable_blobs, synonym_corpus, xor};
use fakenews_core::tune_eval::{
    roc_curve, CvOptions, EncoderConfig, FoldCache, GridStage, ParamValue,
};
use fakenews_core::vectorize::word2vec::cosine;
use fakenews_core::vectorize::{build_vocab, count_vectorize, tfidf_vectorize, train_word2vec, W2VParams};
use fakenews_core::{CleanDoc, FeatureMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TFIDF_TOL: f64 = 1e-12;
const GRAD_STEP: f64 = 1e-5;
const GRAD_MAX_REL: f64 = 1e-4;
/// Denominator floor for the relative gradient error.
const GRAD_REL_FLOOR: f64 = 1e-6;
const AUC_TOL: f64 = 1e-9;
const RANDOM_CORPORA: u64 = 100;
const SEEDS: u64 = 10;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn within(elapsed: Duration, budget_s: u64) -> bool {
    elapsed < Duration::from_secs(budget_s)
}

fn doc(id: u64, words: &[&str]) -> CleanDoc {
    CleanDoc {
        id,
        tokens: words.iter().map(|s| s.to_string()).collect(),
        label: (id % 2) as u8,
    }
}

/// Up to 20 documents of 1 to 50 tokens over a small lexicon.
fn random_corpus(seed: u64) -> Vec<CleanDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = rng.gen_range(3..40);
    (0..rng.gen_range(1..=20))
        .map(|i| CleanDoc {
            id: i,
            tokens: (0..rng.gen_range(1..=50)).map(|_| format!("w{}", rng.gen_range(0..lexicon))).collect(),
            label: (i % 2) as u8,
        })
        .collect()
}

fn column(terms: &[String], term: &str) -> usize {
    terms.iter().position(|t| t == term).expect("term in vocabulary")
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let toy = vec![doc(0, &["cat", "sat", "mat"]), doc(1, &["cat", "cat", "ran"]), doc(2, &["dog", "ran"])];
    let vocab = build_vocab(&toy, 10_000).unwrap();
    let x = tfidf_vectorize(&toy, &vocab).unwrap();
    let toy_value = x.row(0)[column(vocab.terms(), "cat")];
    let toy_expected = (1.0 / 3.0) * (3.0f64 / 2.0).ln();
    let mut worst = (toy_value - toy_expected).abs();

    for seed in 0..RANDOM_CORPORA {
        let docs = random_corpus(seed);
        let vocab = build_vocab(&docs, 10_000).unwrap();
        let x = tfidf_vectorize(&docs, &vocab).unwrap();
        // two passes: document frequencies, then weights
        let n = docs.len() as f64;
        let mut df: BTreeMap<&str, f64> = BTreeMap::new();
        for d in &docs {
            for t in d.tokens.iter().map(String::as_str).collect::<BTreeSet<_>>() {
                *df.entry(t).or_default() += 1.0;
            }
        }
        if df.len() != vocab.len() {
            return Verdict::Fail(format!("corpus {seed}: vocabulary has {} terms, expected {}", vocab.len(), df.len()));
        }
        for (i, d) in docs.iter().enumerate() {
            for (&t, &dft) in &df {
                let count = d.tokens.iter().filter(|w| *w == t).count() as f64;
                let expected = count / d.tokens.len() as f64 * (n / dft).ln();
                let got = x.row(i)[column(vocab.terms(), t)];
                worst = worst.max((got - expected).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= TFIDF_TOL && within(elapsed, 5),
        format!("toy (d1,cat) = {toy_value:.15}, max |error| over toy + {RANDOM_CORPORA} corpora {worst:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut failures = 0;
    for seed in 0..RANDOM_CORPORA {
        let docs = random_corpus(1000 + seed);
        // cap below the lexicon so some tokens fall outside the vocabulary
        let vocab = build_vocab(&docs, 8).unwrap();
        let x = count_vectorize(&docs, &vocab).unwrap();
        let in_vocab: HashSet<&str> = vocab.terms().iter().map(String::as_str).collect();
        for (i, d) in docs.iter().enumerate() {
            let row_sum: f64 = x.row(i).iter().sum();
            let expected_sum = d.tokens.iter().filter(|t| in_vocab.contains(t.as_str())).count() as f64;
            let cells_ok = vocab.terms().iter().enumerate().all(|(j, term)| {
                x.row(i)[j] == d.tokens.iter().filter(|t| *t == term).count() as f64
            });
            if row_sum != expected_sum || !cells_ok {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        failures == 0 && within(elapsed, 5),
        format!("{failures} mismatched rows over {RANDOM_CORPORA} corpora, {elapsed:.2?}"),
    )
}

fn central_differences(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + GRAD_STEP;
            let up = f(&p);
            p[k] = orig - GRAD_STEP;
            let down = f(&p);
            p[k] = orig;
            (up - down) / (2.0 * GRAD_STEP)
        })
        .collect()
}

fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(GRAD_REL_FLOOR))
        .fold(0.0, f64::max)
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for act in [Activation::Relu, Activation::Sigmoid, Activation::Tanh] {
        let cfg = MlpConfig {
            hidden_layers: 1,
            neurons: 4,
            activation: act,
            ..Default::default()
        };
        let mut model = MlpModel::new(5, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        model.params.iter_mut().for_each(|p| *p = rng.gen_range(-1.0..1.0));
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let analytic = mlp_backward(&model, &x, 1).unwrap();
        let numeric = central_differences(&model.params, |p| mlp_loss(&model, p, &x, 1));
        worst = worst.max(max_rel_error(&analytic, &numeric));
    }
    let cfg = LstmConfig {
        memcells: 4,
        hidden_layers: 0,
        timesteps: fakenews_core::models::lstm::SEQUENCE_TIMESTEPS,
        ..Default::default()
    };
    let mut model = LstmModel::new(3, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    model.params.iter_mut().for_each(|p| *p = rng.gen_range(-0.8..0.8));
    let seq: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut analytic = vec![0.0; model.params.len()];
    model.accumulate_gradient(&model.params, &seq, 0, None, &mut analytic);
    let numeric = central_differences(&model.params, |p| model.loss(p, &seq, 0));
    worst = worst.max(max_rel_error(&analytic, &numeric));
    let elapsed = start.elapsed();
    verdict(
        worst < GRAD_MAX_REL && within(elapsed, 30),
        format!("max relative error {worst:.2e} (MLP relu/sigmoid/tanh, LSTM 3x4), {elapsed:.2?}"),
    )
}

fn training_accuracy(model: &impl Classifier, x: &FeatureMatrix) -> f64 {
    let correct = x.rows().zip(&x.labels).filter(|(r, &y)| model.predict(r) == y).count();
    correct as f64 / x.n_rows as f64
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let (mut logreg_ok, mut svm_ok) = (0, 0);
    for seed in 0..SEEDS {
        let x = separable_blobs(seed, 200, 2.0);
        let lr = fit_logreg(&x, &LogRegParams::default()).unwrap();
        let svm = fit_linear_svm(&x, &SvmParams::default()).unwrap();
        logreg_ok += usize::from(training_accuracy(&lr, &x) == 1.0);
        svm_ok += usize::from(training_accuracy(&svm, &x) == 1.0);
    }
    let elapsed = start.elapsed();
    verdict(
        logreg_ok == 10 && svm_ok == 10 && within(elapsed, 30),
        format!("100% training accuracy: logistic {logreg_ok}/10, svm {svm_ok}/10, {elapsed:.2?}"),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let (mut stump_ok, mut forest_ok) = (0, 0);
    let mut accs = Vec::new();
    for seed in 0..SEEDS {
        let train = xor(seed, 400);
        let test = xor(seed + 500, 400);
        let rows: Vec<usize> = (0..train.n_rows).collect();
        let stump_params = TreeParams {
            max_depth: Some(1),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stump = DecisionTree::fit(&train, &rows, &stump_params, &mut rng);
        let forest = fit_random_forest(
            &train,
            &ForestParams {
                n_estimators: 200,
                max_depth: Some(9),
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let (s, f) = (training_accuracy(&stump, &test), training_accuracy(&forest, &test));
        stump_ok += usize::from(s <= 0.75);
        forest_ok += usize::from(f >= 0.95);
        accs.push(format!("{s:.2}/{f:.2}"));
    }
    let elapsed = start.elapsed();
    verdict(
        stump_ok >= 9 && forest_ok >= 9 && within(elapsed, 60),
        format!(
            "held-out accuracy stump<=0.75 {stump_ok}/10, forest>=0.95 {forest_ok}/10 [{}], {elapsed:.2?}",
            accs.join(" ")
        ),
    )
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let mut found = 0;
    for seed in 0..SEEDS {
        let x = planted_outliers(seed, 95, 5);
        let forest = fit_isolation_forest(&x, &IsoForestParams { seed, ..Default::default() }).unwrap();
        let scores = forest.score_all(&x).unwrap();
        let mut order: Vec<usize> = (0..x.n_rows).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let top: HashSet<usize> = order[..10].iter().copied().collect();
        found += usize::from((95..100).all(|i| top.contains(&i)));
    }
    let c2 = average_path_length(2);
    let psi = 256;
    let s_at_mean = score_from_path(average_path_length(psi), psi);
    let elapsed = start.elapsed();
    verdict(
        found >= 9 && c2 == 1.0 && (s_at_mean - 0.5).abs() < 1e-12 && within(elapsed, 30),
        format!("planted outliers in top 10: {found}/10; c(2) = {c2}; s(E[h]=c(256)) = {s_at_mean}, {elapsed:.2?}"),
    )
}

fn pair_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (sp, _) in scores.iter().zip(labels).filter(|(_, &l)| l == 1) {
        for (sn, _) in scores.iter().zip(labels).filter(|(_, &l)| l == 0) {
            pairs += 1.0;
            wins += if sp > sn {
                1.0
            } else if sp == sn {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / pairs
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..RANDOM_CORPORA {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..200);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        // every third set draws from five score levels so ties dominate
        let levels = if seed % 3 == 0 { 5 } else { 1_000_000 };
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / levels as f64).collect();
        let roc = roc_curve(&scores, &labels).unwrap();
        worst = worst.max((roc.auc - pair_auc(&scores, &labels)).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= AUC_TOL && within(elapsed, 10),
        format!("max |trapezoid - pair count| {worst:.2e} over {RANDOM_CORPORA} sets, {elapsed:.2?}"),
    )
}

/// Every document carries a token of its own, so a vocabulary fitted on the
/// training folds alone has exactly as many terms as those folds have
/// distinct tokens.
fn criterion_8() -> Verdict {
    let docs: Vec<CleanDoc> = (0..60u64)
        .map(|i| CleanDoc {
            id: 500 + i,
            tokens: vec![format!("shared{}", i % 5), format!("only{i}"), format!("class{}", i % 2)],
            label: (i % 2) as u8,
        })
        .collect();
    let w2v = W2VParams {
        dim: 4,
        min_count: 1,
        epochs: 1,
        ..Default::default()
    };
    let encoders = [
        EncoderConfig::Count { max_features: 10_000 },
        EncoderConfig::Tfidf { max_features: 10_000 },
        EncoderConfig::W2v { params: w2v.clone() },
        EncoderConfig::W2vSeq { params: w2v, max_len: 5 },
    ];
    let opts = CvOptions {
        seed: 3,
        ..Default::default()
    };
    let mut problems = Vec::new();
    let mut audits = 0;
    for enc in &encoders {
        let cache = match FoldCache::new(enc, &docs, &opts) {
            Ok(c) => c,
            Err(e) => return Verdict::Fail(format!("{}: {e}", enc.tag())),
        };
        for fold in 0..cache.k() {
            let prepared = cache.get(fold).unwrap();
            let held: HashSet<u64> = cache.folds().test_indices(fold).iter().map(|&i| docs[i].id).collect();
            if prepared.train.ids().iter().any(|id| held.contains(id)) {
                problems.push(format!("{} fold {fold}: held-out id in training rows", enc.tag()));
            }
            for a in &prepared.audits {
                audits += 1;
                if a.overlap != 0 {
                    problems.push(format!("{} fold {fold}: {} audit overlap {}", enc.tag(), a.stage, a.overlap));
                }
            }
            if matches!(enc, EncoderConfig::Count { .. } | EncoderConfig::Tfidf { .. }) {
                let distinct: HashSet<&String> = cache
                    .folds()
                    .train_indices(fold)
                    .iter()
                    .flat_map(|&i| &docs[i].tokens)
                    .collect();
                if prepared.train.dim() != distinct.len() {
                    problems.push(format!(
                        "{} fold {fold}: vocabulary {} terms, training folds have {}",
                        enc.tag(),
                        prepared.train.dim(),
                        distinct.len()
                    ));
                }
            }
        }
    }
    // the same audits, as a full run reports them
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_file(&demo_config()).unwrap();
    cfg.output = Some(tmp.path().to_path_buf());
    cfg.save_models = false;
    match pipeline::run(&cfg, None) {
        Ok(_) => {
            let table = std::fs::read_to_string(tmp.path().join("reports/leakage.tsv")).unwrap();
            for line in table.lines().skip(1) {
                audits += 1;
                if line.rsplit('\t').next() != Some("0") {
                    problems.push(format!("demo run: {line}"));
                }
            }
        }
        Err(e) => problems.push(format!("demo run failed: {e}")),
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{audits} fold audits (4 encoders plus the demo run), zero overlap; vocabularies match training-fold tokens")
        } else {
            problems.join("; ")
        },
    )
}

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let mut ok = 0;
    let mut gaps = Vec::new();
    for seed in 0..SEEDS {
        let corpus = synonym_corpus(seed, 200);
        let params = W2VParams {
            dim: 50,
            window: 3,
            min_count: 1,
            epochs: 20,
            seed,
            ..Default::default()
        };
        let model = train_word2vec(&corpus.sentences, &params).unwrap();
        let v = |w: &str| model.word_vector(w).expect("word kept with min_count 1");
        let syn = cosine(v(&corpus.synonyms.0), v(&corpus.synonyms.1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 77);
        let random_mean = (0..100)
            .map(|_| {
                let pair: Vec<&String> = corpus.vocabulary.choose_multiple(&mut rng, 2).collect();
                cosine(v(pair[0]), v(pair[1]))
            })
            .sum::<f64>()
            / 100.0;
        let gap = syn - random_mean;
        ok += usize::from(gap >= 0.2);
        gaps.push(format!("{gap:.2}"));
    }
    let elapsed = start.elapsed();
    verdict(
        ok >= 8 && within(elapsed, 120),
        format!("synonym gap >= 0.2 for {ok}/10 seeds [{}], {elapsed:.2?}", gaps.join(" ")),
    )
}

fn criterion_10() -> Verdict {
    let Some(csv) = std::env::var_os("FAKENEWS_KAGGLE_CSV").map(PathBuf::from) else {
        return Verdict::Skip("FAKENEWS_KAGGLE_CSV not set".into());
    };
    let out = tempfile::tempdir().unwrap();
    let text = format!(
        "[data]\npath = {:?}\n[run]\nseed = 0\npaper_mode = true\nencoders = [\"count\", \"tfidf\"]\nmodels = [\"logistic\"]\noutput = {:?}\n",
        csv.display().to_string(),
        out.path().display().to_string()
    );
    let mut cfg = match RunConfig::parse(&text, Path::new(".")) {
        Ok(c) => c,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let grid = cfg.grids.get_mut(&ModelFamily::LogReg).unwrap();
    grid.stages = vec![GridStage::new("c", vec![("c", vec![ParamValue::Float(1.0), ParamValue::Float(21.544)])])];
    let start = Instant::now();
    let summary = match pipeline::run(&cfg, None) {
        Ok(s) => s,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let elapsed = start.elapsed();
    let accs: Vec<(String, f64)> = summary
        .cells
        .iter()
        .map(|c| (c.encoder.to_string(), c.grid.best_result().mean_accuracy))
        .collect();
    verdict(
        accs.len() == 2 && accs.iter().all(|(_, a)| *a >= 0.90) && within(elapsed, 30 * 60),
        format!("paper mode, logistic: {accs:?} on {} documents, {elapsed:.2?}", summary.drops.kept),
    )
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn demo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo/toy.toml")
}

fn criterion_11() -> Verdict {
    let config = demo_config();
    let tmp = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    let mut times = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_fakenews"))
            .args(["--threads", "1", "run"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .arg("--quiet")
            .output()
            .unwrap();
        times.push(start.elapsed());
        if !status.status.success() {
            return Verdict::Fail(format!("run {run} failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        trees.push(read_tree(&out));
    }
    let identical = trees[0] == trees[1];
    let has_scores = trees[0].contains_key(Path::new("reports/scores.tsv"));
    let slowest = times.iter().max().copied().unwrap();
    verdict(
        identical && has_scores && within(slowest, 60),
        format!(
            "{} files byte-identical across reruns: {identical}; slowest run {slowest:.2?}",
            trees[0].len()
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 11] = [
        (1, "tf-idf matches toy value and brute-force oracle", criterion_1),
        (2, "count vectorizer matches brute-force counting", criterion_2),
        (3, "MLP and LSTM gradients match central differences", criterion_3),
        (4, "logistic regression and SVM separate blobs", criterion_4),
        (5, "stump fails and forest solves XOR", criterion_5),
        (6, "isolation forest ranks planted outliers", criterion_6),
        (7, "trapezoid AUC equals pair-count AUC", criterion_7),
        (8, "no held-out ids reach any fitted stage", criterion_8),
        (9, "word2vec synonyms beat random pairs", criterion_9),
        (10, "paper-mode logistic accuracy on the Kaggle corpus", criterion_10),
        (11, "demo run is fast and byte-identical on rerun", criterion_11),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        match check() {
            Verdict::Pass(d) => println!("PASS {n:>2} {name}: {d}"),
            Verdict::Skip(d) => println!("SKIP {n:>2} {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
