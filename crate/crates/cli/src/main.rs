use std::io::{self, BufRead};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::mpsc;
use std::thread;

use clap::{Parser, Subcommand, ValueEnum};
use fakenews_cli::config::{Overrides, StopListSource, OUTPUT_ENV};
use fakenews_cli::{commands, exit_code, pipeline, RunConfig};
use fakenews_core::corpus_stats::ClassFilter;
use fakenews_core::models::ModelFamily;
use fakenews_core::tune_eval::Progress;
use fakenews_core::{CleanConfig, EncoderTag, Error, Result};

#[derive(Parser)]
#[command(name = "fakenews", version, about = "Fake-news text classification experiments")]
struct Cli {
    /// Worker threads; 1 gives the deterministic reference path.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Fake,
    Real,
    All,
    /// Fake and real tables, one after the other.
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a raw corpus into id,text,label rows and a drop report.
    Clean {
        input: PathBuf,
        output: PathBuf,
        /// "builtin", "none" or a word-list file.
        #[arg(long, default_value = "builtin")]
        stoplist: String,
        #[arg(long)]
        english_threshold: Option<f64>,
        /// Drop report path [default: <output>.drops.tsv]
        #[arg(long)]
        drops: Option<PathBuf>,
    },
    /// Top unigrams and bigrams per class.
    Stats {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        class: ClassArg,
        #[arg(long, default_value_t = 20)]
        top: usize,
        /// Tokenize the raw text instead of treating it as cleaned tokens.
        #[arg(long)]
        raw: bool,
    },
    /// Run the configured grid search and write reports.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        contamination: Option<f64>,
        /// Fit encoders on the whole corpus before splitting.
        #[arg(long)]
        paper_mode: bool,
        /// Output directory (overrides the config and the environment).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        encoders: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        /// Refit each winning configuration on the whole corpus and save it.
        #[arg(long)]
        save_models: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Classify texts with a saved model.
    Predict {
        model: PathBuf,
        texts: Vec<String>,
        /// Read one text per line from this file ("-" for stdin).
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Print a saved model, vocabulary or embedding file.
    Describe { path: PathBuf },
    /// Re-hash the config, dataset and artifacts recorded by a run.
    Verify {
        #[arg(env = OUTPUT_ENV, default_value = fakenews_cli::config::DEFAULT_OUTPUT)]
        dir: PathBuf,
    },
}

fn stoplist_source(s: &str) -> StopListSource {
    match s {
        "builtin" => StopListSource::Builtin,
        "none" => StopListSource::Disabled,
        path => StopListSource::File(PathBuf::from(path)),
    }
}

fn spawn_progress(quiet: bool) -> (Option<mpsc::Sender<Progress>>, Option<thread::JoinHandle<()>>) {
    if quiet {
        return (None, None);
    }
    let (tx, rx) = mpsc::channel::<Progress>();
    let handle = thread::spawn(move || {
        for p in rx {
            eprint!("\r{} + {}: {}/{} fits", p.encoder, p.family, p.done, p.total);
            if p.done == p.total {
                eprintln!();
            }
        }
    });
    (Some(tx), Some(handle))
}

fn execute(cli: Cli) -> Result<bool> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Clean {
            input,
            output,
            stoplist,
            english_threshold,
            drops,
        } => {
            let stoplist = stoplist_source(&stoplist).load()?;
            let config = CleanConfig {
                english_threshold: english_threshold.unwrap_or(CleanConfig::default().english_threshold),
            };
            let drops = drops.unwrap_or_else(|| {
                let mut p = output.clone().into_os_string();
                p.push(".drops.tsv");
                PathBuf::from(p)
            });
            let report = commands::clean(&input, &output, &drops, &stoplist, &config)?;
            eprint!("{}", report.to_tsv());
        }
        Command::Stats { input, class, top, raw } => {
            let classes = match class {
                ClassArg::Fake => vec![ClassFilter::Fake],
                ClassArg::Real => vec![ClassFilter::Real],
                ClassArg::All => vec![ClassFilter::All],
                ClassArg::Both => vec![ClassFilter::Fake, ClassFilter::Real],
            };
            commands::stats(&input, &classes, top, raw, &mut stdout)?;
        }
        Command::Run {
            config,
            seed,
            k,
            contamination,
            paper_mode,
            out,
            encoders,
            models,
            save_models,
            quiet,
        } => {
            let mut cfg = RunConfig::from_file(&config).map_err(|e| match e {
                Error::FileNotFound(p) => Error::Config(format!("config file not found: {}", p.display())),
                other => other,
            })?;
            let encoders = encoders
                .map(|v| v.iter().map(|s| s.parse()).collect::<Result<Vec<EncoderTag>>>())
                .transpose()?;
            let models = models
                .map(|v| v.iter().map(|s| s.parse()).collect::<Result<Vec<ModelFamily>>>())
                .transpose()?;
            cfg.apply(&Overrides {
                seed,
                k,
                contamination,
                paper_mode,
                output: out,
                encoders,
                models,
                save_models,
            });
            let (tx, handle) = spawn_progress(quiet);
            let result = pipeline::run(&cfg, tx.as_ref());
            drop(tx);
            if let Some(h) = handle {
                let _ = h.join();
            }
            let summary = result?;
            for c in &summary.cells {
                let best = c.grid.best_result();
                let auc = c.roc.as_ref().map_or("NA".to_string(), |r| format!("{:.4}", r.auc));
                println!(
                    "{:<8} {:<14} accuracy {:.4}  auc {auc}  {}",
                    c.encoder,
                    c.family,
                    best.mean_accuracy,
                    fakenews_core::tune_eval::canonical(&c.grid.best)
                );
            }
            println!("reports written to {}", summary.out_dir.display());
        }
        Command::Predict { model, mut texts, file } => {
            if let Some(f) = file {
                let lines: Vec<String> = if f.as_os_str() == "-" {
                    io::stdin().lock().lines().collect::<io::Result<_>>()
                } else {
                    std::fs::read_to_string(&f).map(|t| t.lines().map(str::to_string).collect())
                }
                .map_err(|e| Error::io(&f, e))?;
                texts.extend(lines);
            }
            if texts.is_empty() {
                return Err(Error::InvalidArgument("no texts given".into()));
            }
            commands::predict(&model, &texts, &mut stdout)?;
        }
        Command::Describe { path } => commands::describe(&path, &mut stdout)?,
        Command::Verify { dir } => {
            let mismatches = pipeline::verify(&dir)?;
            if !mismatches.is_empty() {
                for m in &mismatches {
                    eprintln!("mismatch: {} {}", m.what, m.path);
                }
                return Ok(false);
            }
            println!("ok: configuration, dataset and artifacts match {}", dir.join(pipeline::MANIFEST).display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
