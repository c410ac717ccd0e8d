//! Shared test oracles and fixtures.
//!
//! Everything here is deliberately independent of the library's
//! implementation paths: the BPE oracle recounts pair statistics from
//! scratch every iteration, the MDL oracles enumerate segmentations
//! exhaustively, and the rank oracle computes ranks directly from sorted
//! positions.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use subwordbench::stats::{Metric, ScoreRecord, ScoreTable, SummaryCell};

// ---------------------------------------------------------------------
// BPE oracle: full recount of pair statistics at every iteration.
// ---------------------------------------------------------------------

const WORD_END: &str = "</w>";

/// Greedy BPE reference: recounts all adjacent pairs each iteration,
/// merges the most frequent pair with lexicographic (left, right)
/// tie-breaking, stops when no pair occurs at least twice, strips the
/// end-of-word sentinel from the emitted rules and drops post-strip
/// duplicates.
pub fn bpe_oracle_token(freq: &[(String, u64)], num_merges: usize) -> Vec<(String, String)> {
    let mut units: Vec<(Vec<String>, u64)> = freq
        .iter()
        .map(|(w, c)| {
            let chars: Vec<char> = w.chars().collect();
            let mut syms: Vec<String> = chars.iter().map(|ch| ch.to_string()).collect();
            let last = syms.len() - 1;
            syms[last] = format!("{}{WORD_END}", syms[last]);
            (syms, *c)
        })
        .collect();

    let mut merges: Vec<(String, String)> = Vec::new();
    while merges.len() < num_merges {
        // recount everything
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (syms, c) in &units {
            for w in syms.windows(2) {
                *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += c;
            }
        }
        // max count, ties by smallest (left, right)
        let best = counts
            .iter()
            .max_by(|(ak, av), (bk, bv)| av.cmp(bv).then_with(|| bk.cmp(ak)))
            .map(|(k, &v)| (k.clone(), v));
        let Some(((left, right), count)) = best else {
            break;
        };
        if count < 2 {
            break;
        }
        merges.push((left.clone(), right.clone()));
        let joined = format!("{left}{right}");
        for (syms, _) in units.iter_mut() {
            let mut i = 0;
            while i + 1 < syms.len() {
                if syms[i] == left && syms[i + 1] == right {
                    syms[i] = joined.clone();
                    syms.remove(i + 1);
                }
                i += 1;
            }
        }
    }

    let strip = |s: &str| s.strip_suffix(WORD_END).unwrap_or(s).to_string();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (l, r) in merges {
        let rule = (strip(&l), strip(&r));
        if !rule.0.is_empty() && !rule.1.is_empty() && seen.insert(rule.clone()) {
            out.push(rule);
        }
    }
    out
}

// ---------------------------------------------------------------------
// MDL oracles: exhaustive enumeration of the cost function.
// ---------------------------------------------------------------------

fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// All segmentations of a word by split-point bitmask.
pub fn all_segmentations(word: &str) -> Vec<Vec<String>> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let mut seg = Vec::new();
        let mut start = 0;
        for j in 1..=n {
            if j == n || mask & (1 << (j - 1)) != 0 {
                seg.push(chars[start..j].iter().collect::<String>());
                start = j;
            }
        }
        out.push(seg);
    }
    out
}

/// Total cost of one joint segmentation assignment, computed from scratch:
/// corpus cost (token-weighted negative log morph probabilities) plus
/// `alpha` times the lexicon cost (per-character code length at the uniform
/// alphabet distribution plus a geometric length prior).
pub fn mdl_assignment_cost(
    words: &[(String, u64)],
    segs: &[&Vec<String>],
    alphabet_size: usize,
    alpha: f64,
) -> f64 {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for ((_, f), seg) in words.iter().zip(segs) {
        for m in seg.iter() {
            *counts.entry(m.as_str()).or_insert(0) += f;
        }
    }
    let total: u64 = counts.values().sum();
    let corpus = xlnx(total as f64) - counts.values().map(|&c| xlnx(c as f64)).sum::<f64>();
    let per_char = (alphabet_size.max(1) as f64).ln() + std::f64::consts::LN_2;
    let lexicon: f64 = counts.keys().map(|m| m.chars().count() as f64).sum::<f64>() * per_char;
    corpus + alpha * lexicon
}

/// Exhaustive minimum of the MDL cost over all joint segmentations of a
/// small word set. Exponential in total word length; keep inputs tiny.
pub fn mdl_exhaustive_minimum(words: &[(String, u64)], alpha: f64) -> f64 {
    let alphabet: BTreeSet<char> = words.iter().flat_map(|(w, _)| w.chars()).collect();
    let options: Vec<Vec<Vec<String>>> = words.iter().map(|(w, _)| all_segmentations(w)).collect();

    let mut best = f64::INFINITY;
    let mut chosen: Vec<&Vec<String>> = Vec::with_capacity(words.len());
    fn recurse<'a>(
        idx: usize,
        options: &'a [Vec<Vec<String>>],
        chosen: &mut Vec<&'a Vec<String>>,
        words: &[(String, u64)],
        alphabet_size: usize,
        alpha: f64,
        best: &mut f64,
    ) {
        if idx == options.len() {
            let cost = mdl_assignment_cost(words, chosen, alphabet_size, alpha);
            if cost < *best {
                *best = cost;
            }
            return;
        }
        for seg in &options[idx] {
            chosen.push(seg);
            recurse(idx + 1, options, chosen, words, alphabet_size, alpha, best);
            chosen.pop();
        }
    }
    recurse(
        0,
        &options,
        &mut chosen,
        words,
        alphabet.len(),
        alpha,
        &mut best,
    );
    best
}

/// Brute-force minimal Viterbi cost of a word over a fixed lexicon with the
/// smoothed single-character fallback.
pub fn viterbi_brute_force(lexicon: &BTreeMap<String, u64>, total_tokens: u64, word: &str) -> f64 {
    let total = total_tokens as f64;
    let fallback = -((0.5 / (total + 0.5)).ln());
    let cost_of = |piece: &str| -> Option<f64> {
        match lexicon.get(piece) {
            Some(&c) => Some(-((c as f64 / total).ln())),
            None if piece.chars().count() == 1 => Some(fallback),
            None => None,
        }
    };
    let mut best = f64::INFINITY;
    for seg in all_segmentations(word) {
        let mut cost = 0.0;
        let mut ok = true;
        for piece in &seg {
            match cost_of(piece) {
                Some(c) => cost += c,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && cost < best {
            best = cost;
        }
    }
    best
}

// ---------------------------------------------------------------------
// Rank-statistics oracle: direct rank computation.
// ---------------------------------------------------------------------

pub struct RankOracle {
    pub h: f64,
    pub p: f64,
    /// (mean rank, n) per group in input order.
    pub group_ranks: Vec<(f64, usize)>,
    pub tie_term: f64,
    pub n: usize,
}

/// Computes pooled average ranks directly: each observation's rank is the
/// count of strictly smaller values plus half the ties plus the midpoint
/// offset. This avoids the library's sort-based path entirely.
pub fn rank_oracle(groups: &[Vec<f64>]) -> RankOracle {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len();
    let rank_of = |v: f64| -> f64 {
        let below = pooled.iter().filter(|&&x| x < v).count() as f64;
        let equal = pooled.iter().filter(|&&x| x == v).count() as f64;
        below + (equal + 1.0) / 2.0
    };

    let mut group_ranks = Vec::new();
    for group in groups {
        let mean = group.iter().map(|&v| rank_of(v)).sum::<f64>() / group.len() as f64;
        group_ranks.push((mean, group.len()));
    }

    // tie term over distinct values
    let distinct: BTreeSet<u64> = pooled.iter().map(|v| v.to_bits()).collect();
    let mut tie_term = 0.0;
    for bits in distinct {
        let v = f64::from_bits(bits);
        let t = pooled.iter().filter(|&&x| x == v).count() as f64;
        tie_term += t * t * t - t;
    }

    let nf = n as f64;
    let mut h = 0.0;
    for (mean_rank, gn) in &group_ranks {
        let rank_sum = mean_rank * *gn as f64;
        h += rank_sum * rank_sum / *gn as f64;
    }
    h = 12.0 / (nf * (nf + 1.0)) * h - 3.0 * (nf + 1.0);
    let correction = 1.0 - tie_term / (nf * nf * nf - nf);
    let (h, p) = if correction <= 0.0 {
        (0.0, 1.0)
    } else {
        let h = (h / correction).max(0.0);
        let chi2 = ChiSquared::new((groups.len() - 1) as f64).unwrap();
        (h, (1.0 - chi2.cdf(h)).clamp(0.0, 1.0))
    };
    RankOracle {
        h,
        p,
        group_ranks,
        tie_term,
        n,
    }
}

/// Dunn z and two-sided p of group `idx` against group `best_idx`,
/// computed from the oracle ranks.
pub fn dunn_oracle(oracle: &RankOracle, best_idx: usize, idx: usize) -> (f64, f64) {
    let n = oracle.n as f64;
    let variance = n * (n + 1.0) / 12.0 - oracle.tie_term / (12.0 * (n - 1.0));
    let (rb, nb) = oracle.group_ranks[best_idx];
    let (rm, nm) = oracle.group_ranks[idx];
    let se = (variance * (1.0 / nb as f64 + 1.0 / nm as f64)).sqrt();
    if se <= 0.0 {
        return (0.0, 1.0);
    }
    let z = (rb - rm) / se;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let p = (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0);
    (z, p)
}

// ---------------------------------------------------------------------
// Published aggregates (mean, sd) per translation task and method.
// ---------------------------------------------------------------------

pub const METHODS: [&str; 4] = ["LMVR", "MORSEL", "SentencePiece", "Subword-NMT"];

/// (task, method, BLEU mean, BLEU sd, CHRF3 mean, CHRF3 sd)
#[allow(clippy::approx_constant)] // 3.14 is a real score, not pi
pub const REFERENCE_SUMMARY: [(&str, &str, f64, f64, f64, f64); 32] = [
    ("EN-KK (train120k)", "LMVR", 1.00, 0.12, 21.98, 0.41),
    ("EN-KK (train120k)", "MORSEL", 0.94, 0.11, 21.24, 0.89),
    (
        "EN-KK (train120k)",
        "SentencePiece",
        1.04,
        0.09,
        21.48,
        0.47,
    ),
    ("EN-KK (train120k)", "Subword-NMT", 1.32, 0.08, 22.12, 0.28),
    ("EN-KK (train220k)", "LMVR", 1.82, 0.13, 22.74, 0.84),
    ("EN-KK (train220k)", "MORSEL", 2.06, 0.11, 22.88, 0.40),
    (
        "EN-KK (train220k)",
        "SentencePiece",
        2.18,
        0.08,
        22.78,
        0.43,
    ),
    ("EN-KK (train220k)", "Subword-NMT", 1.94, 0.22, 22.62, 0.88),
    ("KK-EN (train120k)", "LMVR", 1.70, 0.07, 23.72, 0.44),
    ("KK-EN (train120k)", "MORSEL", 2.62, 0.08, 26.26, 0.36),
    (
        "KK-EN (train120k)",
        "SentencePiece",
        2.34,
        0.21,
        24.64,
        0.81,
    ),
    ("KK-EN (train120k)", "Subword-NMT", 3.14, 0.18, 25.92, 0.54),
    ("KK-EN (train220k)", "LMVR", 9.42, 0.26, 33.88, 0.76),
    ("KK-EN (train220k)", "MORSEL", 10.44, 0.48, 34.58, 0.88),
    (
        "KK-EN (train220k)",
        "SentencePiece",
        10.02,
        0.29,
        33.50,
        0.54,
    ),
    ("KK-EN (train220k)", "Subword-NMT", 10.68, 0.34, 35.52, 0.41),
    ("EN-NE", "LMVR", 4.32, 0.04, 31.00, 0.29),
    ("EN-NE", "MORSEL", 4.38, 0.16, 31.28, 0.47),
    ("EN-NE", "SentencePiece", 4.58, 0.15, 31.36, 0.35),
    ("EN-NE", "Subword-NMT", 4.42, 0.16, 30.96, 0.34),
    ("NE-EN", "LMVR", 7.84, 0.11, 34.10, 0.16),
    ("NE-EN", "MORSEL", 5.30, 0.30, 28.18, 0.97),
    ("NE-EN", "SentencePiece", 8.42, 0.23, 34.40, 0.73),
    ("NE-EN", "Subword-NMT", 8.46, 0.15, 34.18, 0.13),
    ("EN-SI", "LMVR", 1.44, 0.32, 28.22, 0.30),
    ("EN-SI", "MORSEL", 1.12, 0.13, 27.44, 0.34),
    ("EN-SI", "SentencePiece", 1.08, 0.31, 27.56, 0.43),
    ("EN-SI", "Subword-NMT", 0.88, 0.13, 26.78, 0.51),
    ("SI-EN", "LMVR", 7.24, 0.22, 32.16, 0.63),
    ("SI-EN", "MORSEL", 7.78, 0.16, 34.32, 0.30),
    ("SI-EN", "SentencePiece", 7.52, 0.08, 33.58, 0.43),
    ("SI-EN", "Subword-NMT", 7.76, 0.25, 34.38, 0.38),
];

/// Summary cells for one metric of the reference table.
pub fn reference_cells(metric: Metric) -> Vec<SummaryCell> {
    REFERENCE_SUMMARY
        .iter()
        .map(|&(task, method, bm, bs, cm, cs)| {
            let (mean, sd) = match metric {
                Metric::Bleu => (bm, bs),
                Metric::Chrf3 => (cm, cs),
            };
            SummaryCell {
                task: task.to_string(),
                method: method.to_string(),
                metric,
                mean,
                sd,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------
// Synthetic corpora.
// ---------------------------------------------------------------------

/// Morphology-flavored random corpus: stems crossed with a small suffix
/// inventory, sampled with Zipf-ish repetition.
pub fn synthetic_corpus(
    n_tokens: usize,
    n_stems: usize,
    seed: u64,
) -> (Vec<Vec<String>>, Vec<String>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let alphabet: Vec<char> = "abcdefghij".chars().collect();
    let suffixes = ["", "ed", "ing", "s", "ly", "er"];
    let mut vocab: BTreeSet<String> = BTreeSet::new();
    while vocab.len() < n_stems {
        let len = rng.gen_range(3..=6);
        let stem: String = (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect();
        let suffix = suffixes[rng.gen_range(0..suffixes.len())];
        vocab.insert(format!("{stem}{suffix}"));
    }
    let words: Vec<String> = vocab.into_iter().collect();

    let mut sentences = Vec::new();
    let mut emitted = 0;
    while emitted < n_tokens {
        let len = rng.gen_range(3..=12).min(n_tokens - emitted);
        if len == 0 {
            break;
        }
        let mut sent = Vec::with_capacity(len);
        for _ in 0..len {
            // mild skew toward early vocabulary entries
            let idx = (rng.gen_range(0..words.len()) * rng.gen_range(1..=2)) % words.len();
            sent.push(words[idx].clone());
        }
        emitted += sent.len();
        sentences.push(sent);
    }
    (sentences, words)
}

/// Random score table: `methods` groups of `seeds` observations around the
/// given centers, with optional value rounding to force rank ties.
pub fn random_score_groups(
    centers: &[f64],
    seeds: usize,
    spread: f64,
    round_to_force_ties: bool,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    centers
        .iter()
        .map(|&c| {
            (0..seeds)
                .map(|_| {
                    let v = c + spread * (rng.gen::<f64>() - 0.5);
                    if round_to_force_ties {
                        (v * 4.0).round() / 4.0
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

/// Builds a ScoreTable from per-method groups for one task.
pub fn table_from_groups(task: &str, groups: &[(String, Vec<f64>)], metric: Metric) -> ScoreTable {
    let mut table = ScoreTable::new();
    for (method, scores) in groups {
        for (seed, &score) in scores.iter().enumerate() {
            table
                .push(ScoreRecord {
                    task: task.to_string(),
                    method: method.clone(),
                    seed: seed as u64,
                    metric,
                    score,
                })
                .unwrap();
        }
    }
    table
}

/// Draws (task, method) effects and noise scales from the model priors and
/// emits observations; returns (table, eta truth).
pub fn simulate_from_model(
    n_tasks: usize,
    n_methods: usize,
    seeds: usize,
    eta_mean: f64,
    eta_sd: f64,
    seed: u64,
) -> (ScoreTable, Vec<f64>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let etas: Vec<f64> = (0..n_tasks)
        .map(|_| eta_mean + eta_sd * rng.sample(normal))
        .collect();
    let taus: Vec<f64> = (0..n_methods).map(|_| rng.sample(normal)).collect();
    let epses: Vec<f64> = (0..n_tasks)
        .map(|_| {
            let u: f64 = rng.gen_range(0.0..1.0);
            5.0 * (std::f64::consts::FRAC_PI_2 * u).tan()
        })
        .collect();

    let mut table = ScoreTable::new();
    for (l, &eta) in etas.iter().enumerate() {
        for (m, &tau) in taus.iter().enumerate() {
            for s in 0..seeds {
                table
                    .push(ScoreRecord {
                        task: format!("task{l:02}"),
                        method: format!("method{m}"),
                        seed: s as u64,
                        metric: Metric::Bleu,
                        score: eta + tau + epses[l] * rng.sample(normal),
                    })
                    .unwrap();
            }
        }
    }
    (table, etas)
}
