//! Rule-based text cleaning: digits, punctuation, special characters,
//! social-media tags, spacing, an English gate, and stop words.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Label, Labeled, RawRecord};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Minimum share of alphabetic characters that must be ASCII letters.
pub const DEFAULT_ENGLISH_THRESHOLD: f64 = 0.99;

/// Characters removed outright besides ASCII punctuation: en dash, curly and
/// CJK quotation marks, ellipsis, bullet.
const SPECIAL_CHARS: &[char] = &[
    '\u{2013}', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '\u{300C}', '\u{300D}', '\u{300E}',
    '\u{300F}', '\u{2026}', '\u{2022}',
];
const EM_DASH: char = '\u{2014}';

/// A cleaned, tokenized document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanDoc {
    pub id: u64,
    pub tokens: Vec<String>,
    pub label: Label,
}

impl Labeled for CleanDoc {
    fn label(&self) -> Label {
        self.label
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopList {
    pub words: HashSet<String>,
    pub source_name: String,
}

impl StopList {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS, "builtin:english")
    }

    pub fn empty() -> Self {
        StopList {
            words: HashSet::new(),
            source_name: "none".into(),
        }
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, source_name: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopList {
            words,
            source_name: source_name.to_string(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text, &path.display().to_string()))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub english_threshold: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            english_threshold: DEFAULT_ENGLISH_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DropReason {
    NonEnglish,
    Empty,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NonEnglish => "non-English",
            DropReason::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CleanOutcome {
    Kept(CleanDoc),
    Dropped { id: u64, reason: DropReason },
}

pub fn strip_digits(text: &str) -> String {
    text.chars().filter(|c| !c.is_ascii_digit()).collect()
}

/// Removes ASCII punctuation except `#` and `@`, removes the special
/// characters above, and turns em dashes into a single space.
pub fn strip_punct_and_special(text: &str) -> String {
    text.chars()
        .filter_map(|c| match c {
            EM_DASH => Some(' '),
            '#' | '@' => Some(c),
            c if c.is_ascii_punctuation() || SPECIAL_CHARS.contains(&c) => None,
            c => Some(c),
        })
        .collect()
}

/// Deletes every run that starts at `#` or `@` and extends up to (not
/// including) the next whitespace character.
pub fn strip_social_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_tag = false;
    for c in text.chars() {
        if c == '#' || c == '@' {
            in_tag = true;
        } else if c.is_whitespace() {
            in_tag = false;
        }
        if !in_tag {
            out.push(c);
        }
    }
    out
}

/// Collapses runs of spaces to one and trims spaces at both ends.
pub fn collapse_spaces(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev_space = false;
    for c in text.trim_matches(' ').chars() {
        if c == ' ' {
            if !prev_space {
                out.push(c);
            }
            prev_space = true;
        } else {
            out.push(c);
            prev_space = false;
        }
    }
    out
}

fn alphabetic_counts(text: &str) -> (usize, usize) {
    text.chars()
        .filter(|c| c.is_alphabetic())
        .fold((0, 0), |(all, ascii), c| {
            (all + 1, ascii + usize::from(c.is_ascii_alphabetic()))
        })
}

pub fn is_english_with(text: &str, threshold: f64) -> bool {
    let (all, ascii) = alphabetic_counts(text);
    all > 0 && ascii as f64 / all as f64 >= threshold
}

pub fn is_english(text: &str) -> bool {
    is_english_with(text, DEFAULT_ENGLISH_THRESHOLD)
}

pub fn remove_stopwords(tokens: Vec<String>, stoplist: &StopList) -> Vec<String> {
    tokens.into_iter().filter(|t| !stoplist.contains(t)).collect()
}

fn is_clean_token(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_lowercase())
}

/// Cleans raw text up to (but excluding) the English gate, so that callers
/// can share the character-level rules.
pub fn normalize_text(text: &str) -> String {
    let text = strip_digits(text);
    let text = strip_punct_and_special(&text);
    let text = strip_social_tags(&text);
    collapse_spaces(&text).to_lowercase()
}

/// Cleans one text into tokens, or reports why it was dropped. A text with no
/// alphabetic characters left counts as empty rather than non-English.
pub fn clean_text(
    text: &str,
    stoplist: &StopList,
    config: &CleanConfig,
) -> std::result::Result<Vec<String>, DropReason> {
    let text = normalize_text(text);
    let (all, _) = alphabetic_counts(&text);
    if all == 0 {
        return Err(DropReason::Empty);
    }
    if !is_english_with(&text, config.english_threshold) {
        return Err(DropReason::NonEnglish);
    }
    let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    let tokens: Vec<String> = remove_stopwords(tokens, stoplist)
        .into_iter()
        .filter(|t| is_clean_token(t))
        .collect();
    if tokens.is_empty() {
        Err(DropReason::Empty)
    } else {
        Ok(tokens)
    }
}

pub fn clean_pipeline(record: &RawRecord, stoplist: &StopList, config: &CleanConfig) -> CleanOutcome {
    match clean_text(&record.text, stoplist, config) {
        Ok(tokens) => CleanOutcome::Kept(CleanDoc {
            id: record.id,
            tokens,
            label: record.label,
        }),
        Err(reason) => CleanOutcome::Dropped {
            id: record.id,
            reason,
        },
    }
}

/// Drop accounting for a cleaned corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub input: usize,
    pub kept: usize,
    pub non_english: usize,
    pub empty: usize,
}

impl DropReport {
    pub fn to_tsv(&self) -> String {
        format!(
            "reason\tcount\ninput\t{}\nkept\t{}\nnon-English\t{}\nempty\t{}\n",
            self.input, self.kept, self.non_english, self.empty
        )
    }
}

/// Cleans a corpus in parallel. Output order follows input order.
pub fn clean_corpus(
    records: &[RawRecord],
    stoplist: &StopList,
    config: &CleanConfig,
) -> (Vec<CleanDoc>, DropReport) {
    let outcomes: Vec<CleanOutcome> = records
        .par_iter()
        .map(|r| clean_pipeline(r, stoplist, config))
        .collect();
    let mut report = DropReport {
        input: records.len(),
        ..Default::default()
    };
    let mut docs = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        match outcome {
            CleanOutcome::Kept(doc) => docs.push(doc),
            CleanOutcome::Dropped { reason, .. } => match reason {
                DropReason::NonEnglish => report.non_english += 1,
                DropReason::Empty => report.empty += 1,
            },
        }
    }
    report.kept = docs.len();
    (docs, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(text: &str) -> RawRecord {
        RawRecord {
            id: 1,
            title: String::new(),
            author: String::new(),
            text: text.into(),
            label: 1,
        }
    }

    fn tokens(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn digits() {
        assert_eq!(strip_digits("Call 911 now"), "Call  now");
        assert_eq!(strip_digits("abc"), "abc");
        assert_eq!(strip_digits("2020 vision 20/20"), " vision /");
    }

    #[test]
    fn punctuation_and_specials() {
        assert_eq!(strip_punct_and_special("wins!!"), "wins");
        assert_eq!(strip_punct_and_special("Breaking\u{2014}news"), "Breaking news");
        assert_eq!(strip_punct_and_special("he said\u{2026}\u{2022}done"), "he saiddone");
        assert_eq!(strip_punct_and_special("#tag @who"), "#tag @who");
        assert_eq!(strip_punct_and_special("\u{201C}quoted\u{201D} \u{2013}"), "quoted ");
    }

    #[test]
    fn social_tags() {
        assert_eq!(strip_social_tags("win #MAGA today"), "win  today");
        assert_eq!(strip_social_tags("@user1 @user2 hi"), "  hi");
        assert_eq!(strip_social_tags("no tags here"), "no tags here");
        assert_eq!(strip_social_tags("end #tag"), "end ");
    }

    #[test]
    fn spaces() {
        assert_eq!(collapse_spaces("a   b"), "a b");
        assert_eq!(collapse_spaces(" a b "), "a b");
        assert_eq!(collapse_spaces("a b"), "a b");
    }

    #[test]
    fn english_gate() {
        assert!(is_english("plain english text"));
        assert!(!is_english("новости сегодня"));
        assert!(!is_english("café menu items listed here today"));
        assert!(!is_english("123"));
    }

    #[test]
    fn stopwords() {
        let sl = StopList::english();
        assert_eq!(
            remove_stopwords(tokens(&["the", "cat", "is", "on", "the", "mat"]), &sl),
            tokens(&["cat", "mat"])
        );
        assert!(remove_stopwords(vec![], &sl).is_empty());
        assert_eq!(remove_stopwords(tokens(&["cat", "mat"]), &sl), tokens(&["cat", "mat"]));
    }

    #[test]
    fn stoplist_file_format() {
        let sl = StopList::parse("# comment\nThe\n\n  of \n", "inline");
        assert_eq!(sl.words.len(), 2);
        assert!(sl.contains("the") && sl.contains("of"));
    }

    #[test]
    fn pipeline_examples() {
        let sl = StopList::english();
        let cfg = CleanConfig::default();
        match clean_pipeline(&record("Trump\u{2014}2020 #MAGA wins!!"), &sl, &cfg) {
            CleanOutcome::Kept(doc) => assert_eq!(doc.tokens, tokens(&["trump", "wins"])),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            clean_pipeline(&record("новости"), &sl, &cfg),
            CleanOutcome::Dropped { id: 1, reason: DropReason::NonEnglish }
        );
        assert_eq!(
            clean_pipeline(&record("111 222"), &sl, &cfg),
            CleanOutcome::Dropped { id: 1, reason: DropReason::Empty }
        );
        assert_eq!(
            clean_pipeline(&record("the of and"), &sl, &cfg),
            CleanOutcome::Dropped { id: 1, reason: DropReason::Empty }
        );
    }

    #[test]
    fn non_ascii_tokens_dropped_when_gate_passes() {
        let text = "a long english sentence with one naïve word in the middle of many other words here";
        let got = clean_text(text, &StopList::empty(), &CleanConfig::default());
        // 1 of ~70 letters is non-ASCII: below the gate threshold
        assert!(got.is_err());
        let got = clean_text(text, &StopList::empty(), &CleanConfig { english_threshold: 0.9 }).unwrap();
        assert!(!got.contains(&"naïve".to_string()));
        assert!(got.contains(&"english".to_string()));
    }

    #[test]
    fn corpus_report_counts() {
        let recs = vec![record("hello world"), record("новости"), record(""), record("дом")];
        let (docs, report) = clean_corpus(&recs, &StopList::english(), &CleanConfig::default());
        assert_eq!(docs.len(), 1);
        assert_eq!(report, DropReport { input: 4, kept: 1, non_english: 2, empty: 1 });
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn tokens_are_lowercase_ascii(text in "\\PC{0,80}") {
            if let Ok(toks) = clean_text(&text, &StopList::english(), &CleanConfig::default()) {
                for t in toks {
                    prop_assert!(is_clean_token(&t), "bad token {t:?}");
                }
            }
        }

        #[test]
        fn pipeline_is_idempotent(text in "[a-zA-Z0-9 #@!.,\u{2014}\u{2026}é]{0,60}", use_stop in any::<bool>()) {
            let sl = if use_stop { StopList::english() } else { StopList::empty() };
            let cfg = CleanConfig::default();
            if let Ok(first) = clean_text(&text, &sl, &cfg) {
                let second = clean_text(&first.join(" "), &sl, &cfg).unwrap();
                prop_assert_eq!(first, second);
            }
        }
    }
}
