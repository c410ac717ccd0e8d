//! MDL-based unsupervised morphological segmentation.
//!
//! The model stores a morph lexicon with token-weighted counts. Total cost
//! in nats is
//!
//! ```text
//! cost = corpus + α · lexicon
//! corpus  = Σ over morph tokens of −ln p(morph)        (MLE over counts)
//! lexicon = Σ over distinct morphs of len · (ln |Σ| + ln 2)
//! ```
//!
//! where |Σ| is the observed character alphabet and the `ln 2` term is a
//! geometric (p = 0.5) morph-length prior. The corpusweight α trades corpus
//! coding cost against lexicon coding cost.
//!
//! Training is greedy and monotone: word types are recursively re-split
//! whenever a binary split lowers the total cost, and whole-lexicon boundary
//! moves (splitting a shared suffix or prefix off every morph that carries
//! it) are applied when they lower the cost. The batch moves let morphs that
//! only pay off jointly, like `ed`/`ing` across several stems, be discovered
//! from whole-word initializations. Passes repeat until no accepted change
//! remains; the cost never increases across accepted steps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::corpus::{FrequencyTable, GoldSegmentations};
use crate::{Error, Result};

const IMPROVEMENT_EPS: f64 = 1e-9;
const MAX_PASSES: usize = 20;

/// Marker prefixed to non-initial morphs when rendering segmented output.
pub const SUFFIX_MARKER: char = '+';

/// How gold files with several alternative analyses are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlternativePolicy {
    /// Score each word against the alternative maximizing its F1.
    #[default]
    BestMatch,
    /// Score against the first listed alternative.
    First,
}

/// Boundary precision/recall/F1 against gold segmentations.
#[derive(Debug, Clone, PartialEq)]
pub struct F1Report {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted_boundaries: u64,
    pub gold_boundaries: u64,
    pub matched_boundaries: u64,
}

/// Mutable cost accounting shared by training and vocabulary constraining.
#[derive(Debug, Clone)]
struct CostState {
    counts: BTreeMap<String, u64>,
    total_tokens: u64,
    sum_c_ln_c: f64,
    lexicon_chars: u64,
    per_char_cost: f64,
    alpha: f64,
}

fn xlnx(x: u64) -> f64 {
    if x == 0 {
        0.0
    } else {
        let x = x as f64;
        x * x.ln()
    }
}

impl CostState {
    fn new(alphabet_size: usize, alpha: f64) -> Self {
        CostState {
            counts: BTreeMap::new(),
            total_tokens: 0,
            sum_c_ln_c: 0.0,
            lexicon_chars: 0,
            per_char_cost: (alphabet_size.max(1) as f64).ln() + std::f64::consts::LN_2,
            alpha,
        }
    }

    fn add(&mut self, morph: &str, count: u64) {
        let entry = self.counts.entry(morph.to_string()).or_insert(0);
        let old = *entry;
        if old == 0 {
            self.lexicon_chars += morph.chars().count() as u64;
        }
        *entry = old + count;
        self.sum_c_ln_c += xlnx(old + count) - xlnx(old);
        self.total_tokens += count;
    }

    fn remove(&mut self, morph: &str, count: u64) {
        let entry = self
            .counts
            .get_mut(morph)
            .unwrap_or_else(|| panic!("removing unknown morph {morph:?}"));
        let old = *entry;
        assert!(
            old >= count,
            "removing {count} of {morph:?} with count {old}"
        );
        *entry = old - count;
        self.sum_c_ln_c += xlnx(old - count) - xlnx(old);
        self.total_tokens -= count;
        if old == count {
            self.counts.remove(morph);
            self.lexicon_chars -= morph.chars().count() as u64;
        }
    }

    fn corpus_cost(&self) -> f64 {
        xlnx(self.total_tokens) - self.sum_c_ln_c
    }

    fn lexicon_cost(&self) -> f64 {
        self.lexicon_chars as f64 * self.per_char_cost
    }

    fn total_cost(&self) -> f64 {
        self.corpus_cost() + self.alpha * self.lexicon_cost()
    }

    /// Recomputes the running sums from the counts, shedding float drift.
    fn resync(&mut self) {
        self.sum_c_ln_c = self.counts.values().map(|&c| xlnx(c)).sum();
        self.lexicon_chars = self.counts.keys().map(|m| m.chars().count() as u64).sum();
    }
}

/// A trained MDL segmentation model.
#[derive(Debug, Clone)]
pub struct MdlModel {
    state: CostState,
    segmentations: BTreeMap<String, Vec<String>>,
    word_freq: BTreeMap<String, u64>,
    alphabet: BTreeSet<char>,
    total_cost: f64,
}

impl MdlModel {
    /// Trains a model on a word frequency table with corpusweight `alpha`.
    /// The seed controls the order word types are visited in.
    pub fn train(freq: &FrequencyTable, alpha: f64, seed: u64) -> Result<Self> {
        if freq.is_empty() {
            return Err(Error::InvalidInput(
                "cannot train an MDL model on an empty frequency table".into(),
            ));
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "corpusweight must be positive, got {alpha}"
            )));
        }
        let mut alphabet = BTreeSet::new();
        for (word, _) in freq.iter() {
            alphabet.extend(word.chars());
        }
        let mut state = CostState::new(alphabet.len(), alpha);
        let mut segmentations = BTreeMap::new();
        let mut word_freq = BTreeMap::new();
        for (word, count) in freq.iter() {
            state.add(word, count);
            segmentations.insert(word.to_string(), vec![word.to_string()]);
            word_freq.insert(word.to_string(), count);
        }

        let mut order: Vec<String> = word_freq.keys().cloned().collect();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for _ in 0..MAX_PASSES {
            order.shuffle(&mut rng);
            let mut improved = false;
            for word in &order {
                improved |= resplit_word(&mut state, &mut segmentations, word, word_freq[word]);
            }
            while apply_best_batch_move(&mut state, &mut segmentations) {
                improved = true;
            }
            if !improved {
                break;
            }
        }

        state.resync();
        let total_cost = state.total_cost();
        Ok(MdlModel {
            state,
            segmentations,
            word_freq,
            alphabet,
            total_cost,
        })
    }

    pub fn corpusweight(&self) -> f64 {
        self.state.alpha
    }

    /// Total model cost in nats: corpus cost plus α times the lexicon cost.
    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    pub fn lexicon(&self) -> impl Iterator<Item = (&str, u64)> {
        self.state.counts.iter().map(|(m, &c)| (m.as_str(), c))
    }

    pub fn lexicon_size(&self) -> usize {
        self.state.counts.len()
    }

    /// Total morph tokens in the stored segmentation of the training data.
    pub fn total_morph_tokens(&self) -> u64 {
        self.state.total_tokens
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn training_segmentations(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.segmentations
            .iter()
            .map(|(w, s)| (w.as_str(), s.as_slice()))
    }

    /// Negative log probability of a lexicon morph, if present.
    fn morph_cost(&self, morph: &str) -> Option<f64> {
        self.state
            .counts
            .get(morph)
            .map(|&c| -((c as f64 / self.state.total_tokens as f64).ln()))
    }

    /// Smoothed cost charged to a single character absent from the lexicon.
    fn fallback_cost(&self) -> f64 {
        -((0.5 / (self.state.total_tokens as f64 + 0.5)).ln())
    }

    /// Segments a word: training words keep their stored segmentation,
    /// anything else gets the minimal-cost segmentation under the fixed
    /// lexicon. Unknown characters fall back to single-character morphs at a
    /// smoothed cost, so every word is segmentable.
    pub fn segment(&self, word: &str) -> Vec<String> {
        if let Some(seg) = self.segmentations.get(word) {
            return seg.clone();
        }
        self.viterbi_segment(word).0
    }

    /// Minimal-cost segmentation by dynamic programming over split points,
    /// with the total cost in nats.
    pub fn viterbi_segment(&self, word: &str) -> (Vec<String>, f64) {
        let chars: Vec<char> = word.chars().collect();
        let n = chars.len();
        if n == 0 {
            return (Vec::new(), 0.0);
        }
        let fallback = self.fallback_cost();
        let mut best: Vec<f64> = vec![f64::INFINITY; n + 1];
        let mut back: Vec<usize> = vec![0; n + 1];
        best[0] = 0.0;
        for j in 1..=n {
            for i in 0..j {
                let piece: String = chars[i..j].iter().collect();
                let cost = match self.morph_cost(&piece) {
                    Some(c) => c,
                    None if j - i == 1 => fallback,
                    None => continue,
                };
                let cand = best[i] + cost;
                if cand < best[j] {
                    best[j] = cand;
                    back[j] = i;
                }
            }
        }
        let mut cuts = Vec::new();
        let mut j = n;
        while j > 0 {
            cuts.push(j);
            j = back[j];
        }
        cuts.reverse();
        let mut morphs = Vec::new();
        let mut start = 0;
        for cut in cuts {
            morphs.push(chars[start..cut].iter().collect());
            start = cut;
        }
        (morphs, best[n])
    }

    /// Shrinks the lexicon to at most `max_vocab` distinct morphs. The
    /// lowest-frequency morph is removed first (ties: longest, then
    /// lexicographically smallest) and the words that used it are
    /// re-segmented with the remaining lexicon; single-character fallback
    /// keeps every word coverable.
    pub fn constrain_vocab(&self, max_vocab: usize) -> Result<MdlModel> {
        if max_vocab < self.alphabet.len() {
            return Err(Error::InvalidInput(format!(
                "vocabulary budget {max_vocab} is below the alphabet size {}",
                self.alphabet.len()
            )));
        }
        let mut model = self.clone();
        while model.state.counts.len() > max_vocab {
            // Single-character morphs are the coverage backstop; never
            // remove them.
            let victim = model
                .state
                .counts
                .iter()
                .filter(|(m, _)| m.chars().count() > 1)
                .min_by(|(am, ac), (bm, bc)| {
                    ac.cmp(bc)
                        .then_with(|| bm.chars().count().cmp(&am.chars().count()))
                        .then_with(|| am.cmp(bm))
                })
                .map(|(m, _)| m.clone());
            let Some(victim) = victim else { break };

            let affected: Vec<String> = model
                .segmentations
                .iter()
                .filter(|(_, seg)| seg.contains(&victim))
                .map(|(w, _)| w.clone())
                .collect();
            // Remove every affected word's contribution first so the victim
            // morph leaves the lexicon entirely.
            for word in &affected {
                let f = model.word_freq[word];
                for m in &model.segmentations[word] {
                    model.state.remove(m, f);
                }
            }
            if model.state.counts.contains_key(&victim) {
                // Loaded models have counts but no stored segmentations.
                let c = model.state.counts[&victim];
                model.state.remove(&victim, c);
            }
            for word in &affected {
                let f = model.word_freq[word];
                let (seg, _) = model.viterbi_segment(word);
                for m in &seg {
                    model.state.add(m, f);
                }
                model.segmentations.insert(word.clone(), seg);
            }
        }
        model.state.resync();
        model.total_cost = model.state.total_cost();
        Ok(model)
    }

    /// Serializes to the model file format: header plus `morph<TAB>count`
    /// lines sorted by descending count, then lexicographically.
    pub fn to_file_string(&self) -> String {
        let mut entries: Vec<(&String, &u64)> = self.state.counts.iter().collect();
        entries.sort_by(|(am, ac), (bm, bc)| bc.cmp(ac).then_with(|| am.cmp(bm)));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#subwordbench-mdl v1 alpha={} vocab={}",
            self.state.alpha,
            entries.len()
        );
        for (m, c) in entries {
            let _ = writeln!(out, "{m}\t{c}");
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    /// Loads a model file. Loaded models segment by dynamic programming
    /// only, since training segmentations are not persisted.
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
            .strip_prefix("#subwordbench-mdl v1")
            .ok_or_else(|| Error::InvalidInput(format!("bad MDL model header: {header:?}")))?;
        let mut alpha = None;
        let mut declared = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("alpha", v)) => {
                    alpha =
                        Some(v.parse::<f64>().map_err(|_| {
                            Error::InvalidInput(format!("bad alpha {v:?} in header"))
                        })?)
                }
                Some(("vocab", v)) => {
                    declared =
                        Some(v.parse::<usize>().map_err(|_| {
                            Error::InvalidInput(format!("bad vocab {v:?} in header"))
                        })?)
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "unrecognized header field {field:?}"
                    )))
                }
            }
        }
        let alpha =
            alpha.ok_or_else(|| Error::InvalidInput("header missing alpha=<...>".into()))?;
        let mut alphabet = BTreeSet::new();
        let mut entries = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let (morph, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::InvalidInput(format!("bad lexicon line {line:?}")))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad count in {line:?}")))?;
            if morph.is_empty() || count == 0 {
                return Err(Error::InvalidInput(format!("bad lexicon line {line:?}")));
            }
            alphabet.extend(morph.chars());
            entries.push((morph.to_string(), count));
        }
        if let Some(n) = declared {
            if n != entries.len() {
                return Err(Error::InvalidInput(format!(
                    "header declares {n} morphs but file has {}",
                    entries.len()
                )));
            }
        }
        let mut state = CostState::new(alphabet.len(), alpha);
        for (m, c) in &entries {
            state.add(m, *c);
        }
        let total_cost = state.total_cost();
        Ok(MdlModel {
            state,
            segmentations: BTreeMap::new(),
            word_freq: BTreeMap::new(),
            alphabet,
            total_cost,
        })
    }
}

/// Recursively picks the best segmentation of `s`, mutating the cost state.
/// The chosen morphs are left added to the state and pushed onto `out`.
fn optimize(state: &mut CostState, s: &str, freq: u64, out: &mut Vec<String>) {
    let chars: Vec<char> = s.chars().collect();
    state.add(s, freq);
    let whole_cost = state.total_cost();
    state.remove(s, freq);

    let mut best: Option<(f64, usize)> = None;
    for i in 1..chars.len() {
        let left: String = chars[..i].iter().collect();
        let right: String = chars[i..].iter().collect();
        state.add(&left, freq);
        state.add(&right, freq);
        let cost = state.total_cost();
        state.remove(&right, freq);
        state.remove(&left, freq);
        if best.is_none() || cost < best.unwrap().0 {
            best = Some((cost, i));
        }
    }

    match best {
        Some((cost, i)) if cost < whole_cost - IMPROVEMENT_EPS => {
            let left: String = chars[..i].iter().collect();
            let right: String = chars[i..].iter().collect();
            optimize(state, &left, freq, out);
            optimize(state, &right, freq, out);
        }
        _ => {
            state.add(s, freq);
            out.push(s.to_string());
        }
    }
}

/// Removes a word's morphs and re-splits it from scratch, keeping the new
/// segmentation only if it lowers the total cost.
fn resplit_word(
    state: &mut CostState,
    segmentations: &mut BTreeMap<String, Vec<String>>,
    word: &str,
    freq: u64,
) -> bool {
    let old = segmentations[word].clone();
    let before = state.total_cost();
    for m in &old {
        state.remove(m, freq);
    }
    let mut new_seg = Vec::new();
    optimize(state, word, freq, &mut new_seg);
    let after = state.total_cost();
    if after < before - IMPROVEMENT_EPS && new_seg != old {
        segmentations.insert(word.to_string(), new_seg);
        true
    } else {
        for m in &new_seg {
            state.remove(m, freq);
        }
        for m in &old {
            state.add(m, freq);
        }
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum BoundaryKind {
    Suffix,
    Prefix,
}

/// Evaluates splitting a shared boundary string off every lexicon morph that
/// carries it, and applies the best such move if it lowers the cost.
/// Returns whether a move was applied.
fn apply_best_batch_move(
    state: &mut CostState,
    segmentations: &mut BTreeMap<String, Vec<String>>,
) -> bool {
    // candidate boundary string -> morphs that would be split by it
    let mut groups: BTreeMap<(BoundaryKind, String), Vec<String>> = BTreeMap::new();
    for morph in state.counts.keys() {
        let chars: Vec<char> = morph.chars().collect();
        if chars.len() < 2 {
            continue;
        }
        for i in 1..chars.len() {
            let prefix: String = chars[..i].iter().collect();
            let suffix: String = chars[i..].iter().collect();
            groups
                .entry((BoundaryKind::Suffix, suffix))
                .or_default()
                .push(morph.clone());
            groups
                .entry((BoundaryKind::Prefix, prefix))
                .or_default()
                .push(morph.clone());
        }
    }

    let base_cost = state.total_cost();
    let mut best: Option<(f64, (BoundaryKind, String), Vec<String>)> = None;
    for (key, morphs) in &groups {
        let parts: Vec<(String, String, u64)> = morphs
            .iter()
            .map(|m| {
                let count = state.counts[m];
                (m.clone(), split_off(m, &key.1, key.0), count)
            })
            .collect();
        for (m, _, c) in &parts {
            state.remove(m, *c);
        }
        for (_, half, c) in &parts {
            state.add(half, *c);
            state.add(&key.1, *c);
        }
        let cost = state.total_cost();
        for (_, half, c) in &parts {
            state.remove(half, *c);
            state.remove(&key.1, *c);
        }
        for (m, _, c) in &parts {
            state.add(m, *c);
        }
        if cost < base_cost - IMPROVEMENT_EPS
            && best
                .as_ref()
                .is_none_or(|(bc, bk, _)| cost < *bc || (cost == *bc && key < bk))
        {
            best = Some((cost, key.clone(), morphs.clone()));
        }
    }

    let Some((_, key, morphs)) = best else {
        return false;
    };

    for m in &morphs {
        let count = state.counts[m];
        let half = split_off(m, &key.1, key.0);
        state.remove(m, count);
        state.add(&half, count);
        state.add(&key.1, count);
        let replacement = match key.0 {
            BoundaryKind::Suffix => [half.clone(), key.1.clone()],
            BoundaryKind::Prefix => [key.1.clone(), half.clone()],
        };
        for seg in segmentations.values_mut() {
            if seg.iter().any(|x| x == m) {
                *seg = seg
                    .iter()
                    .flat_map(|x| {
                        if x == m {
                            replacement.to_vec()
                        } else {
                            vec![x.clone()]
                        }
                    })
                    .collect();
            }
        }
    }
    true
}

/// The remainder of `morph` after removing `boundary` from the given side.
fn split_off(morph: &str, boundary: &str, kind: BoundaryKind) -> String {
    match kind {
        BoundaryKind::Suffix => morph[..morph.len() - boundary.len()].to_string(),
        BoundaryKind::Prefix => morph[boundary.len()..].to_string(),
    }
}

/// Internal boundary offsets (in characters) of a morph sequence.
fn boundaries(morphs: &[String]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut pos = 0;
    for m in &morphs[..morphs.len().saturating_sub(1)] {
        pos += m.chars().count();
        out.insert(pos);
    }
    out
}

fn word_f1(matched: usize, predicted: usize, gold: usize) -> f64 {
    if predicted == 0 && gold == 0 {
        return 1.0;
    }
    if predicted == 0 || gold == 0 {
        return 0.0;
    }
    let p = matched as f64 / predicted as f64;
    let r = matched as f64 / gold as f64;
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Micro-averaged boundary F1 of predicted segmentations against gold.
///
/// Boundaries are internal split positions in character offsets. Words whose
/// predicted and gold boundary sets are both empty count as perfect; words
/// where exactly one side is empty count as zero.
pub fn boundary_f1(
    predicted: &BTreeMap<String, Vec<String>>,
    gold: &GoldSegmentations,
    policy: AlternativePolicy,
) -> Result<F1Report> {
    let mut total_matched = 0u64;
    let mut total_predicted = 0u64;
    let mut total_gold = 0u64;
    for (word, alternatives) in gold.iter() {
        let pred = predicted
            .get(word)
            .ok_or_else(|| Error::MissingPrediction(word.to_string()))?;
        let pred_bounds = boundaries(pred);
        let considered: &[Vec<String>] = match policy {
            AlternativePolicy::First => &alternatives[..1],
            AlternativePolicy::BestMatch => alternatives,
        };
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for alt in considered {
            let gold_bounds = boundaries(alt);
            let matched = pred_bounds.intersection(&gold_bounds).count();
            let f1 = word_f1(matched, pred_bounds.len(), gold_bounds.len());
            if best.is_none_or(|(bf, ..)| f1 > bf) {
                best = Some((f1, matched, pred_bounds.len(), gold_bounds.len()));
            }
        }
        let (_, matched, predicted_n, gold_n) = best.expect("gold entries are non-empty");
        total_matched += matched as u64;
        total_predicted += predicted_n as u64;
        total_gold += gold_n as u64;
    }

    let (precision, recall) = if total_predicted == 0 && total_gold == 0 {
        (1.0, 1.0)
    } else {
        let p = if total_predicted > 0 {
            total_matched as f64 / total_predicted as f64
        } else {
            0.0
        };
        let r = if total_gold > 0 {
            total_matched as f64 / total_gold as f64
        } else {
            0.0
        };
        (p, r)
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(F1Report {
        precision,
        recall,
        f1,
        predicted_boundaries: total_predicted,
        gold_boundaries: total_gold,
        matched_boundaries: total_matched,
    })
}

/// Trains one model per corpusweight in `grid` and returns the value
/// maximizing boundary F1 on the gold words, with the per-α reports in grid
/// order. Ties prefer the smallest α.
pub fn tune_corpusweight(
    freq: &FrequencyTable,
    gold: &GoldSegmentations,
    grid: &[f64],
    seed: u64,
    policy: AlternativePolicy,
) -> Result<(f64, Vec<(f64, F1Report)>)> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty corpusweight grid".into()));
    }
    let reports: Vec<(f64, F1Report)> = grid
        .par_iter()
        .map(|&alpha| {
            let model = MdlModel::train(freq, alpha, seed)?;
            let mut predicted = BTreeMap::new();
            for word in gold.words() {
                predicted.insert(word.to_string(), model.segment(word));
            }
            let report = boundary_f1(&predicted, gold, policy)?;
            Ok((alpha, report))
        })
        .collect::<Result<_>>()?;
    let mut best = &reports[0];
    for r in &reports[1..] {
        if r.1.f1 > best.1.f1 + 1e-15 || (r.1.f1 == best.1.f1 && r.0 < best.0) {
            best = r;
        }
    }
    Ok((best.0, reports.clone()))
}

/// The default corpusweight grid used when none is given.
pub const DEFAULT_ALPHA_GRID: [f64; 7] = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

/// Marks non-initial morphs with a `+` prefix: `[s, low, ly]` becomes
/// `s +low +ly`.
pub fn render_lmvr_style(morphs: &[String]) -> Vec<String> {
    morphs
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if i == 0 {
                m.clone()
            } else {
                format!("{SUFFIX_MARKER}{m}")
            }
        })
        .collect()
}

/// Inverts [`render_lmvr_style`] over a whole line: every piece without the
/// `+` prefix starts a new word.
pub fn detokenize_lmvr<S: AsRef<str>>(pieces: &[S]) -> Result<String> {
    let mut words: Vec<String> = Vec::new();
    for piece in pieces {
        let piece = piece.as_ref();
        match piece.strip_prefix(SUFFIX_MARKER) {
            Some(rest) => match words.last_mut() {
                Some(word) => word.push_str(rest),
                None => {
                    return Err(Error::Malformed(format!(
                        "continuation piece {piece:?} with no preceding word"
                    )))
                }
            },
            None => words.push(piece.to_string()),
        }
    }
    Ok(words.join(" "))
}

/// Segments every token of a line and renders the `+`-marked pieces.
pub fn segment_line_lmvr(model: &MdlModel, line: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for tok in line.split_whitespace() {
        if tok.starts_with(SUFFIX_MARKER) {
            return Err(Error::InvalidInput(format!(
                "token {tok:?} starts with the reserved {SUFFIX_MARKER:?} marker"
            )));
        }
        out.extend(render_lmvr_style(&model.segment(tok)));
    }
    Ok(out)
}
