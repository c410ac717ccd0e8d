//! Corpus loading, frequency counting, and segmentation reference files.
//!
//! All inputs are UTF-8 text. A corpus file holds one sentence per line with
//! space-separated tokens; a gold file holds `word<TAB>morphs(, morphs)*`
//! lines; an analysis file holds `word<TAB>stem<TAB>suffix1 suffix2 ...`
//! lines. Everything here is immutable after loading.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// A tokenized corpus: sentences of whitespace-free tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedCorpus {
    sentences: Vec<Vec<String>>,
    lowercased: bool,
}

impl TokenizedCorpus {
    /// Builds a corpus from pre-tokenized sentences, validating that no
    /// token is empty or contains whitespace.
    pub fn from_sentences(sentences: Vec<Vec<String>>, lowercased: bool) -> Result<Self> {
        for sent in &sentences {
            for tok in sent {
                if tok.is_empty() {
                    return Err(Error::InvalidInput("empty token".into()));
                }
                if tok.chars().any(char::is_whitespace) {
                    return Err(Error::InvalidInput(format!(
                        "token {tok:?} contains whitespace"
                    )));
                }
                if lowercased && *tok != tok.to_lowercase() {
                    return Err(Error::InvalidInput(format!(
                        "token {tok:?} is not lowercase in a lowercased corpus"
                    )));
                }
            }
        }
        Ok(TokenizedCorpus {
            sentences,
            lowercased,
        })
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn lowercased(&self) -> bool {
        self.lowercased
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Total number of tokens across all sentences.
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Serializes the corpus back to the one-sentence-per-line format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for sent in &self.sentences {
            let _ = writeln!(out, "{}", sent.join(" "));
        }
        out
    }
}

/// Word frequency table derived from a tokenized corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    entries: BTreeMap<String, u64>,
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` occurrences of `word`. Zero counts are ignored.
    pub fn add(&mut self, word: &str, count: u64) {
        if count > 0 {
            *self.entries.entry(word.to_string()).or_insert(0) += count;
        }
    }

    pub fn get(&self, word: &str) -> u64 {
        self.entries.get(word).copied().unwrap_or(0)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(w, &c)| (w.as_str(), c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all counts; equals the token count of the source corpus.
    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    /// Sums two tables, e.g. to learn a joint source+target vocabulary.
    pub fn merged(&self, other: &FrequencyTable) -> FrequencyTable {
        let mut out = self.clone();
        for (w, c) in other.iter() {
            out.add(w, c);
        }
        out
    }
}

impl<'a> FromIterator<(&'a str, u64)> for FrequencyTable {
    fn from_iter<I: IntoIterator<Item = (&'a str, u64)>>(it: I) -> Self {
        let mut t = FrequencyTable::new();
        for (w, c) in it {
            t.add(w, c);
        }
        t
    }
}

/// Gold-standard segmentations: each word maps to one or more alternative
/// analyses, each a sequence of morphs that concatenates back to the word.
#[derive(Debug, Clone, Default)]
pub struct GoldSegmentations {
    entries: BTreeMap<String, Vec<Vec<String>>>,
}

impl GoldSegmentations {
    pub fn get(&self, word: &str) -> Option<&[Vec<String>]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Vec<String>])> {
        self.entries.iter().map(|(w, a)| (w.as_str(), a.as_slice()))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts an entry, checking the concatenation invariant.
    pub fn insert(&mut self, word: &str, analyses: Vec<Vec<String>>) -> Result<()> {
        if analyses.is_empty() {
            return Err(Error::InvalidInput(format!("{word:?}: no analyses")));
        }
        for analysis in &analyses {
            check_concat(word, analysis)?;
        }
        self.entries.insert(word.to_string(), analyses);
        Ok(())
    }
}

fn check_concat(word: &str, morphs: &[String]) -> Result<()> {
    if morphs.is_empty() || morphs.iter().any(String::is_empty) {
        return Err(Error::InvalidInput(format!(
            "{word:?}: empty morph in analysis"
        )));
    }
    let joined: String = morphs.concat();
    if joined != word {
        return Err(Error::InvalidInput(format!(
            "analysis {morphs:?} does not concatenate to {word:?}"
        )));
    }
    Ok(())
}

/// One stem+suffix analysis of a surface word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub stem: String,
    pub suffixes: Vec<String>,
}

/// Stem+suffix analyses keyed by surface word.
#[derive(Debug, Clone, Default)]
pub struct AnalysisTable {
    entries: BTreeMap<String, Analysis>,
}

impl AnalysisTable {
    pub fn get(&self, word: &str) -> Option<&Analysis> {
        self.entries.get(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Analysis)> {
        self.entries.iter().map(|(w, a)| (w.as_str(), a))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts an analysis, checking that stem + suffixes == word.
    pub fn insert(&mut self, word: &str, stem: &str, suffixes: Vec<String>) -> Result<()> {
        if stem.is_empty() {
            return Err(Error::InvalidInput(format!("{word:?}: empty stem")));
        }
        let mut joined = stem.to_string();
        for s in &suffixes {
            joined.push_str(s);
        }
        if joined != word {
            return Err(Error::InvalidInput(format!(
                "stem {stem:?} + suffixes {suffixes:?} does not concatenate to {word:?}"
            )));
        }
        self.entries.insert(
            word.to_string(),
            Analysis {
                stem: stem.to_string(),
                suffixes,
            },
        );
        Ok(())
    }

    /// Serializes to the `word<TAB>stem<TAB>suffixes` format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (word, a) in &self.entries {
            let _ = writeln!(out, "{word}\t{}\t{}", a.stem, a.suffixes.join(" "));
        }
        out
    }
}

/// Reads a file and returns its lines, reporting the line number of any
/// invalid UTF-8.
fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for (idx, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        match std::str::from_utf8(raw) {
            Ok(s) => lines.push(s.to_string()),
            Err(_) => {
                return Err(Error::parse(path, idx + 1, "invalid UTF-8"));
            }
        }
    }
    // A trailing newline produces one empty trailing element; drop it so that
    // "a\n" is a single line.
    if lines.last().is_some_and(String::is_empty) {
        lines.pop();
    }
    Ok(lines)
}

/// Loads a tokenized corpus, optionally lowercasing every line.
pub fn load_corpus(path: impl AsRef<Path>, lowercase: bool) -> Result<TokenizedCorpus> {
    let path = path.as_ref();
    let mut sentences = Vec::new();
    for line in read_lines(path)? {
        let line = if lowercase { line.to_lowercase() } else { line };
        sentences.push(line.split_whitespace().map(str::to_string).collect());
    }
    TokenizedCorpus::from_sentences(sentences, lowercase)
}

/// Writes a corpus in the same one-sentence-per-line format `load_corpus`
/// reads.
pub fn write_corpus(corpus: &TokenizedCorpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, corpus.to_text()).map_err(|e| Error::io(path, e))
}

/// Counts word frequencies over a corpus.
pub fn count_frequencies(corpus: &TokenizedCorpus) -> FrequencyTable {
    let mut table = FrequencyTable::new();
    for sent in corpus.sentences() {
        for tok in sent {
            table.add(tok, 1);
        }
    }
    table
}

/// Strips the `+` segmentation markers some gold files carry at morph edges.
fn strip_markers(morph: &str) -> &str {
    morph.trim_matches('+')
}

/// Loads gold segmentations. Each line is `word<TAB>analysis(, analysis)*`
/// with morphs separated by spaces; alternatives are kept in file order.
pub fn load_gold(path: impl AsRef<Path>) -> Result<GoldSegmentations> {
    let path = path.as_ref();
    let mut gold = GoldSegmentations::default();
    for (idx, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (word, rest) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, idx + 1, "expected word<TAB>analyses"))?;
        let mut analyses = Vec::new();
        for alt in rest.split(", ") {
            let morphs: Vec<String> = alt
                .split_whitespace()
                .map(|m| strip_markers(m).to_string())
                .collect();
            analyses.push(morphs);
        }
        gold.insert(word, analyses)
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
    }
    Ok(gold)
}

/// Loads stem+suffix analyses. Each line is
/// `word<TAB>stem<TAB>suffix1 suffix2 ...`; the suffix field may be empty.
pub fn load_analyses(path: impl AsRef<Path>) -> Result<AnalysisTable> {
    let path = path.as_ref();
    let mut table = AnalysisTable::default();
    for (idx, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let word = fields.next().unwrap_or("");
        let stem = fields
            .next()
            .ok_or_else(|| Error::parse(path, idx + 1, "expected word<TAB>stem<TAB>suffixes"))?;
        let suffixes: Vec<String> = fields
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(str::to_string)
            .collect();
        table
            .insert(word, stem, suffixes)
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
    }
    Ok(table)
}
