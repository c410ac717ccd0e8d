//! Byte-pair encoding in two flavors.
//!
//! Token mode learns merges from a word frequency table and marks
//! continuation pieces with a trailing `@@` (`s@@ low@@ ly`). Sentence mode
//! learns from whole sentences: every word is prefixed with a reserved
//! boundary marker before character splitting, so pieces carry the marker on
//! word-initial position (`▁sl ow ly`) and detokenization is lossless.
//!
//! Learning is the greedy loop: repeatedly merge the most frequent adjacent
//! symbol pair, breaking ties lexicographically by (left, right), stopping
//! early once no pair occurs at least twice. Token-mode learning attaches an
//! end-of-word sentinel to the final character of each word so that
//! word-final pairs are counted separately; the sentinel is stripped from
//! the emitted merge rules.

use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{FrequencyTable, TokenizedCorpus};
use crate::{Error, Result};

/// Continuation marker appended to non-final pieces of a word in token mode.
pub const CONTINUATION_MARKER: &str = "@@";

/// Default word-boundary marker prefixed to word-initial pieces in sentence
/// mode (U+2581, the convention popularized by SentencePiece).
pub const DEFAULT_BOUNDARY_MARKER: char = '\u{2581}';

/// End-of-word sentinel used internally during token-mode learning.
const WORD_END: &str = "</w>";

/// Which marker convention a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpeMode {
    Token,
    Sentence,
}

impl BpeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BpeMode::Token => "token",
            BpeMode::Sentence => "sentence",
        }
    }
}

impl std::str::FromStr for BpeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(BpeMode::Token),
            "sentence" => Ok(BpeMode::Sentence),
            other => Err(Error::InvalidInput(format!("unknown BPE mode {other:?}"))),
        }
    }
}

/// One merge: replace adjacent (left, right) with their concatenation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MergeRule {
    pub left: String,
    pub right: String,
}

/// A trained BPE model: an ordered merge list plus the marker convention.
#[derive(Debug, Clone)]
pub struct BpeModel {
    mode: BpeMode,
    merges: Vec<MergeRule>,
    requested_symbols: usize,
    marker: char,
    /// Distinct pieces produced on the training data, in emitted (marked)
    /// form. `None` for models loaded from a file, where the training data
    /// is no longer available.
    vocabulary: Option<BTreeSet<String>>,
}

/// Interned symbol sequences with shared pair statistics, the working state
/// of the greedy merge loop.
struct Learner {
    arena: Vec<String>,
    intern: HashMap<String, u32>,
    units: Vec<(Vec<u32>, u64)>,
    pair_counts: HashMap<(u32, u32), i64>,
    pair_units: HashMap<(u32, u32), HashSet<usize>>,
    heap: BinaryHeap<HeapEntry>,
}

/// Max-heap entry ordered by count, then by lexicographically *smallest*
/// (left, right) symbol pair.
struct HeapEntry {
    count: i64,
    left: String,
    right: String,
    pair: (u32, u32),
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| (&other.left, &other.right).cmp(&(&self.left, &self.right)))
    }
}

impl Learner {
    fn new(units: Vec<(Vec<String>, u64)>) -> Self {
        let mut learner = Learner {
            arena: Vec::new(),
            intern: HashMap::new(),
            units: Vec::new(),
            pair_counts: HashMap::new(),
            pair_units: HashMap::new(),
            heap: BinaryHeap::new(),
        };
        for (syms, count) in units {
            let ids: Vec<u32> = syms.into_iter().map(|s| learner.intern(s)).collect();
            learner.units.push((ids, count));
        }
        for idx in 0..learner.units.len() {
            learner.add_unit_pairs(idx);
        }
        let pairs: Vec<(u32, u32)> = learner.pair_counts.keys().copied().collect();
        for pair in pairs {
            learner.push_heap(pair);
        }
        learner
    }

    fn intern(&mut self, s: String) -> u32 {
        if let Some(&id) = self.intern.get(&s) {
            return id;
        }
        let id = self.arena.len() as u32;
        self.arena.push(s.clone());
        self.intern.insert(s, id);
        id
    }

    fn add_unit_pairs(&mut self, idx: usize) {
        let (syms, count) = &self.units[idx];
        for w in syms.windows(2) {
            let pair = (w[0], w[1]);
            *self.pair_counts.entry(pair).or_insert(0) += *count as i64;
            self.pair_units.entry(pair).or_default().insert(idx);
        }
    }

    fn remove_unit_pairs(&mut self, idx: usize) {
        let (syms, count) = self.units[idx].clone();
        for w in syms.windows(2) {
            let pair = (w[0], w[1]);
            *self.pair_counts.entry(pair).or_insert(0) -= count as i64;
            if let Some(set) = self.pair_units.get_mut(&pair) {
                set.remove(&idx);
            }
        }
    }

    fn push_heap(&mut self, pair: (u32, u32)) {
        let count = self.pair_counts.get(&pair).copied().unwrap_or(0);
        if count > 0 {
            self.heap.push(HeapEntry {
                count,
                left: self.arena[pair.0 as usize].clone(),
                right: self.arena[pair.1 as usize].clone(),
                pair,
            });
        }
    }

    /// Pops the current most frequent pair, skipping stale heap entries.
    /// Returns `None` once no pair occurs at least twice.
    fn best_pair(&mut self) -> Option<(u32, u32)> {
        while let Some(entry) = self.heap.pop() {
            let current = self.pair_counts.get(&entry.pair).copied().unwrap_or(0);
            if current != entry.count {
                continue; // stale
            }
            if entry.count < 2 {
                return None;
            }
            return Some(entry.pair);
        }
        None
    }

    fn merge(&mut self, pair: (u32, u32)) {
        let new_sym = format!(
            "{}{}",
            self.arena[pair.0 as usize], self.arena[pair.1 as usize]
        );
        let new_id = self.intern(new_sym);
        let affected: Vec<usize> = self
            .pair_units
            .get(&pair)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        let mut touched: HashSet<(u32, u32)> = HashSet::new();
        for idx in affected {
            let before: Vec<(u32, u32)> =
                self.units[idx].0.windows(2).map(|w| (w[0], w[1])).collect();
            touched.extend(before);
            self.remove_unit_pairs(idx);
            merge_in_place(&mut self.units[idx].0, pair, new_id);
            self.add_unit_pairs(idx);
            let after: Vec<(u32, u32)> =
                self.units[idx].0.windows(2).map(|w| (w[0], w[1])).collect();
            touched.extend(after);
        }
        for p in touched {
            if self.pair_counts.get(&p).copied().unwrap_or(0) <= 0 {
                self.pair_counts.remove(&p);
                self.pair_units.remove(&p);
            } else {
                self.push_heap(p);
            }
        }
    }

    fn run(&mut self, num_merges: usize) -> Vec<(String, String)> {
        let mut merges = Vec::new();
        while merges.len() < num_merges {
            let Some(pair) = self.best_pair() else { break };
            merges.push((
                self.arena[pair.0 as usize].clone(),
                self.arena[pair.1 as usize].clone(),
            ));
            self.merge(pair);
        }
        merges
    }
}

/// Merges every left-to-right, non-overlapping occurrence of `pair`.
fn merge_in_place(syms: &mut Vec<u32>, pair: (u32, u32), new_id: u32) {
    let mut i = 0;
    while i + 1 < syms.len() {
        if syms[i] == pair.0 && syms[i + 1] == pair.1 {
            syms[i] = new_id;
            syms.remove(i + 1);
        }
        i += 1;
    }
}

/// String-symbol variant of [`merge_in_place`], used when replaying merges.
fn replay_rule(syms: &mut Vec<String>, rule: &MergeRule) {
    let mut i = 0;
    while i + 1 < syms.len() {
        if syms[i] == rule.left && syms[i + 1] == rule.right {
            let joined = format!("{}{}", syms[i], syms[i + 1]);
            syms[i] = joined;
            syms.remove(i + 1);
        }
        i += 1;
    }
}

fn check_no_reserved(token: &str, mode: BpeMode, marker: char) -> Result<()> {
    match mode {
        BpeMode::Token => {
            if token.contains(CONTINUATION_MARKER) || token.contains(WORD_END) {
                return Err(Error::InvalidInput(format!(
                    "token {token:?} contains a reserved marker string"
                )));
            }
        }
        BpeMode::Sentence => {
            if token.contains(marker) {
                return Err(Error::InvalidInput(format!(
                    "token {token:?} contains the boundary marker {marker:?}"
                )));
            }
        }
    }
    Ok(())
}

fn token_unit(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let last = chars.len() - 1;
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == last {
                format!("{c}{WORD_END}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

fn sentence_unit(word: &str, marker: char) -> Vec<String> {
    let mut syms = Vec::new();
    for (i, c) in word.chars().enumerate() {
        if i == 0 {
            syms.push(format!("{marker}{c}"));
        } else {
            syms.push(c.to_string());
        }
    }
    syms
}

fn strip_word_end(sym: &str) -> &str {
    sym.strip_suffix(WORD_END).unwrap_or(sym)
}

impl BpeModel {
    /// Learns token-level merges from a word frequency table.
    ///
    /// `num_merges` bounds the merge list; learning stops early once no
    /// adjacent pair occurs at least twice. Zero merges yields a model that
    /// splits every word into single characters.
    pub fn learn_token(freq: &FrequencyTable, num_merges: usize) -> Result<Self> {
        if freq.is_empty() {
            return Err(Error::InvalidInput(
                "cannot learn BPE from an empty frequency table".into(),
            ));
        }
        let mut units = Vec::new();
        for (word, count) in freq.iter() {
            check_no_reserved(word, BpeMode::Token, DEFAULT_BOUNDARY_MARKER)?;
            units.push((token_unit(word), count));
        }
        let raw = Learner::new(units).run(num_merges);

        // Strip the end-of-word sentinel from emitted symbols; rules that
        // collide after stripping keep their earliest position.
        let mut merges = Vec::new();
        let mut seen = HashSet::new();
        for (l, r) in raw {
            let rule = MergeRule {
                left: strip_word_end(&l).to_string(),
                right: strip_word_end(&r).to_string(),
            };
            if !rule.left.is_empty() && !rule.right.is_empty() && seen.insert(rule.clone()) {
                merges.push(rule);
            }
        }

        let mut model = BpeModel {
            mode: BpeMode::Token,
            merges,
            requested_symbols: num_merges,
            marker: DEFAULT_BOUNDARY_MARKER,
            vocabulary: None,
        };
        let mut vocab = BTreeSet::new();
        for (word, _) in freq.iter() {
            vocab.extend(model.segment_word(word)?);
        }
        model.vocabulary = Some(vocab);
        Ok(model)
    }

    /// Learns sentence-level merges: every word is prefixed with the
    /// boundary marker before splitting, so merges never cross a word
    /// boundary and pieces carry the marker word-initially.
    pub fn learn_sentence(corpus: &TokenizedCorpus, num_merges: usize) -> Result<Self> {
        Self::learn_sentence_with_marker(corpus, num_merges, DEFAULT_BOUNDARY_MARKER)
    }

    pub fn learn_sentence_with_marker(
        corpus: &TokenizedCorpus,
        num_merges: usize,
        marker: char,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidInput(
                "cannot learn BPE from an empty corpus".into(),
            ));
        }
        let mut freq = FrequencyTable::new();
        for sent in corpus.sentences() {
            for tok in sent {
                check_no_reserved(tok, BpeMode::Sentence, marker)?;
                freq.add(tok, 1);
            }
        }
        let mut units = Vec::new();
        for (word, count) in freq.iter() {
            units.push((sentence_unit(word, marker), count));
        }
        let raw = Learner::new(units).run(num_merges);
        let merges = raw
            .into_iter()
            .map(|(left, right)| MergeRule { left, right })
            .collect();

        let mut model = BpeModel {
            mode: BpeMode::Sentence,
            merges,
            requested_symbols: num_merges,
            marker,
            vocabulary: None,
        };
        let mut vocab = BTreeSet::new();
        for (word, _) in freq.iter() {
            vocab.extend(model.segment_word(word)?);
        }
        model.vocabulary = Some(vocab);
        Ok(model)
    }

    pub fn mode(&self) -> BpeMode {
        self.mode
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    pub fn requested_symbols(&self) -> usize {
        self.requested_symbols
    }

    pub fn marker(&self) -> char {
        self.marker
    }

    pub fn vocabulary(&self) -> Option<&BTreeSet<String>> {
        self.vocabulary.as_ref()
    }

    /// Segments a single word into marked pieces.
    ///
    /// Merges are replayed in learned order. Characters unseen in training
    /// pass through as singleton pieces. Token mode attaches `@@` to every
    /// non-final piece; sentence mode prefixes the boundary marker to the
    /// word-initial piece.
    pub fn segment_word(&self, word: &str) -> Result<Vec<String>> {
        if word.is_empty() {
            return Err(Error::InvalidInput("cannot segment an empty word".into()));
        }
        check_no_reserved(word, self.mode, self.marker)?;
        let mut syms = match self.mode {
            BpeMode::Token => word.chars().map(|c| c.to_string()).collect::<Vec<_>>(),
            BpeMode::Sentence => sentence_unit(word, self.marker),
        };

        // A presence set lets us skip rules whose symbols cannot occur.
        let mut present: HashSet<String> = syms.iter().cloned().collect();
        for rule in &self.merges {
            if !present.contains(&rule.left) || !present.contains(&rule.right) {
                continue;
            }
            let before = syms.len();
            replay_rule(&mut syms, rule);
            if syms.len() != before {
                present = syms.iter().cloned().collect();
            }
        }

        if self.mode == BpeMode::Token {
            let last = syms.len() - 1;
            for (i, s) in syms.iter_mut().enumerate() {
                if i != last {
                    s.push_str(CONTINUATION_MARKER);
                }
            }
        }
        Ok(syms)
    }

    /// Segments a whitespace-tokenized line, returning the concatenated
    /// piece sequence for all tokens.
    pub fn segment_line(&self, line: &str) -> Result<Vec<String>> {
        let mut pieces = Vec::new();
        for tok in line.split_whitespace() {
            pieces.extend(self.segment_word(tok)?);
        }
        Ok(pieces)
    }

    /// Inverts [`segment_line`] output using this model's marker convention.
    pub fn detokenize<S: AsRef<str>>(&self, pieces: &[S]) -> Result<String> {
        detokenize_with_marker(pieces, self.mode, self.marker)
    }

    /// Serializes to the model file format: a header line followed by one
    /// merge per line in application order.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "#subwordbench-bpe v1 mode={} merges={}",
            self.mode.as_str(),
            self.merges.len()
        );
        if self.mode == BpeMode::Sentence && self.marker != DEFAULT_BOUNDARY_MARKER {
            let _ = write!(out, " marker={}", self.marker);
        }
        out.push('\n');
        for rule in &self.merges {
            let _ = writeln!(out, "{} {}", rule.left, rule.right);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file_string(&text).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::parse(path, 1, msg),
            other => other,
        })
    }

    pub fn from_file_string(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty model file".into()))?;
        let rest = header
            .strip_prefix("#subwordbench-bpe v1")
            .ok_or_else(|| Error::InvalidInput(format!("bad BPE model header: {header:?}")))?;
        let mut mode = None;
        let mut declared = None;
        let mut marker = DEFAULT_BOUNDARY_MARKER;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("mode", v)) => mode = Some(v.parse::<BpeMode>()?),
                Some(("merges", v)) => {
                    declared = Some(v.parse::<usize>().map_err(|_| {
                        Error::InvalidInput(format!("bad merge count {v:?} in header"))
                    })?)
                }
                Some(("marker", v)) => {
                    marker = v
                        .chars()
                        .next()
                        .ok_or_else(|| Error::InvalidInput("empty marker in header".into()))?
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "unrecognized header field {field:?}"
                    )))
                }
            }
        }
        let mode = mode.ok_or_else(|| Error::InvalidInput("header missing mode=<...>".into()))?;
        let mut merges = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let (left, right) = line.split_once(' ').ok_or_else(|| {
                Error::InvalidInput(format!("bad merge line {line:?} (expected `left right`)"))
            })?;
            if left.is_empty() || right.is_empty() || right.contains(' ') {
                return Err(Error::InvalidInput(format!("bad merge line {line:?}")));
            }
            merges.push(MergeRule {
                left: left.to_string(),
                right: right.to_string(),
            });
        }
        if let Some(n) = declared {
            if n != merges.len() {
                return Err(Error::InvalidInput(format!(
                    "header declares {n} merges but file has {}",
                    merges.len()
                )));
            }
        }
        let requested = merges.len();
        Ok(BpeModel {
            mode,
            merges,
            requested_symbols: requested,
            marker,
            vocabulary: None,
        })
    }
}

/// Inverts a piece sequence produced under `mode` with the default boundary
/// marker.
pub fn detokenize<S: AsRef<str>>(pieces: &[S], mode: BpeMode) -> Result<String> {
    detokenize_with_marker(pieces, mode, DEFAULT_BOUNDARY_MARKER)
}

fn detokenize_with_marker<S: AsRef<str>>(
    pieces: &[S],
    mode: BpeMode,
    marker: char,
) -> Result<String> {
    let mut words: Vec<String> = Vec::new();
    match mode {
        BpeMode::Token => {
            let mut current = String::new();
            for (i, piece) in pieces.iter().enumerate() {
                let piece = piece.as_ref();
                if let Some(stripped) = piece.strip_suffix(CONTINUATION_MARKER) {
                    if i == pieces.len() - 1 {
                        return Err(Error::Malformed(format!(
                            "final piece {piece:?} carries {CONTINUATION_MARKER:?}"
                        )));
                    }
                    current.push_str(stripped);
                } else {
                    current.push_str(piece);
                    words.push(std::mem::take(&mut current));
                }
            }
        }
        BpeMode::Sentence => {
            let mut current: Option<String> = None;
            for piece in pieces {
                let piece = piece.as_ref();
                if let Some(stripped) = piece.strip_prefix(marker) {
                    if let Some(word) = current.take() {
                        words.push(word);
                    }
                    current = Some(stripped.to_string());
                } else {
                    match current.as_mut() {
                        Some(word) => word.push_str(piece),
                        None => {
                            return Err(Error::Malformed(format!(
                                "piece {piece:?} lacks a boundary marker but starts a word"
                            )));
                        }
                    }
                }
            }
            if let Some(word) = current.take() {
                words.push(word);
            }
        }
    }
    if words.iter().any(String::is_empty) {
        return Err(Error::Malformed("empty word in piece sequence".into()));
    }
    Ok(words.join(" "))
}

/// Trains one token-mode model per requested merge count.
pub fn sweep_merge_counts_token(freq: &FrequencyTable, counts: &[usize]) -> Result<Vec<BpeModel>> {
    counts
        .iter()
        .map(|&n| BpeModel::learn_token(freq, n))
        .collect()
}

/// Trains one sentence-mode model per requested merge count.
pub fn sweep_merge_counts_sentence(
    corpus: &TokenizedCorpus,
    counts: &[usize],
) -> Result<Vec<BpeModel>> {
    counts
        .iter()
        .map(|&n| BpeModel::learn_sentence(corpus, n))
        .collect()
}
