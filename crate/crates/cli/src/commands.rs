//! Subcommand bodies. Each writes its normal output to `out` so tests can
//! capture it.

use std::fs;
use std::io::Write;
use std::path::Path;

use fakenews_core::codec;
use fakenews_core::corpus_stats::{raw_tokens, top_ngrams_filtered, ClassFilter};
use fakenews_core::ingest::{format_csv_row, load_csv};
use fakenews_core::preprocess::{clean_corpus, DropReport};
use fakenews_core::{CleanConfig, Error, Result, StopList, Vocabulary, W2VModel};

use crate::bundle::{self, ModelBundle};

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

/// Cleans a raw corpus into `id,text,label` rows (tokens joined by single
/// spaces) and writes the drop report next to it.
pub fn clean(
    input: &Path,
    output: &Path,
    drops_path: &Path,
    stoplist: &StopList,
    config: &CleanConfig,
) -> Result<DropReport> {
    let records = load_csv(input)?;
    if records.is_empty() {
        return Err(Error::Empty(format!("{} has no records", input.display())));
    }
    let (docs, report) = clean_corpus(&records, stoplist, config);
    let mut csv = format_csv_row(&["id", "text", "label"]);
    for d in &docs {
        csv.push_str(&format_csv_row(&[d.id.to_string(), d.tokens.join(" "), d.label.to_string()]));
    }
    fs::write(output, csv).map_err(|e| Error::io(output, e))?;
    fs::write(drops_path, report.to_tsv()).map_err(|e| Error::io(drops_path, e))?;
    Ok(report)
}

/// Unigram and bigram tables for each requested class. With `raw`, texts
/// are only lowercased and stripped of digits and punctuation, so stop
/// words stay in.
pub fn stats(input: &Path, classes: &[ClassFilter], top: usize, raw: bool, out: &mut dyn Write) -> Result<()> {
    let records = load_csv(input)?;
    if records.is_empty() {
        return Err(Error::Empty(format!("{} has no records", input.display())));
    }
    let docs: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            if raw {
                raw_tokens(&r.text)
            } else {
                r.text.split_whitespace().map(str::to_string).collect()
            }
        })
        .collect();
    let labels: Vec<u8> = records.iter().map(|r| r.label).collect();
    for &class in classes {
        for n in [1, 2] {
            let table = top_ngrams_filtered(&docs, Some(&labels), n, top, class)?;
            let name = if n == 1 { "unigrams" } else { "bigrams" };
            emit(out, &format!("# {} {name}\n{}\n", class.as_str(), table.to_tsv()))?;
        }
    }
    Ok(())
}

/// Scores each text and prints `label<TAB>score`, one line per text.
pub fn predict(model: &Path, texts: &[String], out: &mut dyn Write) -> Result<()> {
    let bundle = ModelBundle::load(model)?;
    for text in texts {
        let p = bundle.predict(text)?;
        emit(out, &format!("{}\t{:.6}\n", p.label(), p.score()))?;
    }
    Ok(())
}

/// Human-readable summary of any saved model, vocabulary or embedding file.
pub fn describe(path: &Path, out: &mut dyn Write) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = match &codec::peek_kind(&bytes)? {
        bundle::KIND => codec::decode::<ModelBundle>(bundle::KIND, &bytes)?.describe(),
        b"VOCB" => {
            let v = Vocabulary::load(path)?;
            let preview: Vec<&str> = v.terms().iter().take(10).map(String::as_str).collect();
            format!(
                "vocabulary: {} terms (cap {}), {} documents\nfirst terms: {}\n",
                v.len(),
                v.max_features(),
                v.total_docs(),
                preview.join(" ")
            )
        }
        b"W2VM" => {
            let m = W2VModel::load(path)?;
            format!(
                "word2vec: {} words, dimension {}, window {}, {} epochs\n",
                m.vocab_size(),
                m.dim,
                m.params.window,
                m.params.epochs
            )
        }
        other => {
            return Err(Error::ModelFormat(format!(
                "unknown file kind {}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    emit(out, &text)
}
