//! Corpus-level lowercased BLEU and CHRF3.
//!
//! BLEU is the standard corpus score: clipped modified n-gram precisions
//! over whitespace tokens for orders 1..4, geometric mean, exponential
//! brevity penalty, no smoothing (any zero precision zeroes the score),
//! single reference. CHRF3 is a character n-gram F-score with recall
//! weighted 9x precision, macro-averaged over sentences.
//!
//! Both metrics return values in [0, 100].

use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result};

/// Hypotheses paired with one reference each.
#[derive(Debug, Clone)]
pub struct EvalPair {
    hypotheses: Vec<String>,
    references: Vec<String>,
}

impl EvalPair {
    pub fn new(hypotheses: Vec<String>, references: Vec<String>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::InvalidInput("empty hypothesis list".into()));
        }
        if hypotheses.len() != references.len() {
            return Err(Error::InvalidInput(format!(
                "{} hypotheses vs {} references",
                hypotheses.len(),
                references.len()
            )));
        }
        Ok(EvalPair {
            hypotheses,
            references,
        })
    }

    /// Reads hypothesis and reference files, one sentence per line.
    pub fn from_files(hyp: impl AsRef<Path>, reference: impl AsRef<Path>) -> Result<Self> {
        let read = |path: &Path| -> Result<Vec<String>> {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok(text.lines().map(str::to_string).collect())
        };
        Self::new(read(hyp.as_ref())?, read(reference.as_ref())?)
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.hypotheses
            .iter()
            .zip(self.references.iter())
            .map(|(h, r)| (h.as_str(), r.as_str()))
    }
}

fn ngram_counts(tokens: &[&str], n: usize) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window.join(" ")).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus-level BLEU in [0, 100].
pub fn corpus_bleu(pair: &EvalPair, max_n: usize, lowercase: bool) -> f64 {
    let max_n = max_n.max(1);
    let mut matches = vec![0u64; max_n];
    let mut totals = vec![0u64; max_n];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;

    for (hyp, reference) in pair.iter() {
        let (hyp, reference) = if lowercase {
            (hyp.to_lowercase(), reference.to_lowercase())
        } else {
            (hyp.to_string(), reference.to_string())
        };
        let hyp_tokens: Vec<&str> = hyp.split_whitespace().collect();
        let ref_tokens: Vec<&str> = reference.split_whitespace().collect();
        hyp_len += hyp_tokens.len() as u64;
        ref_len += ref_tokens.len() as u64;
        for n in 1..=max_n {
            let hyp_counts = ngram_counts(&hyp_tokens, n);
            let ref_counts = ngram_counts(&ref_tokens, n);
            for (gram, &count) in &hyp_counts {
                totals[n - 1] += count;
                matches[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            }
        }
    }

    let mut log_prec_sum = 0.0;
    for n in 0..max_n {
        if matches[n] == 0 || totals[n] == 0 {
            return 0.0;
        }
        log_prec_sum += (matches[n] as f64 / totals[n] as f64).ln();
    }
    if hyp_len == 0 {
        return 0.0;
    }
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    100.0 * bp * (log_prec_sum / max_n as f64).exp()
}

/// Collapses whitespace runs to single internal spaces; spaces then count
/// as characters in the n-grams.
fn chrf_normalize(sentence: &str, lowercase: bool) -> Vec<char> {
    let joined = sentence.split_whitespace().collect::<Vec<_>>().join(" ");
    if lowercase {
        joined.to_lowercase().chars().collect()
    } else {
        joined.chars().collect()
    }
}

fn char_ngram_counts(chars: &[char], n: usize) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for window in chars.windows(n) {
            *counts.entry(window.iter().collect::<String>()).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level character F-beta for orders 1..max_char_n, averaged over
/// the orders where either side has n-grams.
fn chrf_sentence(hyp: &[char], reference: &[char], beta: f64, max_char_n: usize) -> f64 {
    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_char_n {
        let hyp_counts = char_ngram_counts(hyp, n);
        let ref_counts = char_ngram_counts(reference, n);
        let hyp_total: u64 = hyp_counts.values().sum();
        let ref_total: u64 = ref_counts.values().sum();
        if hyp_total == 0 && ref_total == 0 {
            continue;
        }
        let matched: u64 = hyp_counts
            .iter()
            .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        if hyp_total > 0 {
            precision_sum += matched as f64 / hyp_total as f64;
        }
        if ref_total > 0 {
            recall_sum += matched as f64 / ref_total as f64;
        }
        orders += 1;
    }
    if orders == 0 {
        // both sides empty: identical
        return 1.0;
    }
    let precision = precision_sum / orders as f64;
    let recall = recall_sum / orders as f64;
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom > 0.0 {
        (1.0 + b2) * precision * recall / denom
    } else {
        0.0
    }
}

/// Corpus CHRF in [0, 100]: macro-average of sentence F-beta scores.
pub fn chrf(pair: &EvalPair, beta: f64, max_char_n: usize, lowercase: bool) -> f64 {
    let mut sum = 0.0;
    for (hyp, reference) in pair.iter() {
        let h = chrf_normalize(hyp, lowercase);
        let r = chrf_normalize(reference, lowercase);
        sum += chrf_sentence(&h, &r, beta, max_char_n);
    }
    100.0 * sum / pair.len() as f64
}

/// CHRF3 with the standard settings: beta = 3, character orders 1..6,
/// lowercased.
pub fn chrf3(pair: &EvalPair) -> f64 {
    chrf(pair, 3.0, 6, true)
}

/// Lowercased BLEU with the standard settings: orders 1..4.
pub fn bleu_lowercased(pair: &EvalPair) -> f64 {
    corpus_bleu(pair, 4, true)
}
