//! Browser bindings for the segmentation toolkit.
//!
//! Three operations back the demo page in `www/index.html`:
//! [`segment_text`] trains a model on pasted text and segments an input
//! live, [`model_summary`] shows what the trained model looks like, and
//! [`score_pair`] computes BLEU/CHRF3 between two texts.
//!
//! Training corpora in a browser textarea are tiny, so models are retrained
//! on every call; that keeps the API stateless.

use wasm_bindgen::prelude::*;

use subwordbench::bpe::BpeModel;
use subwordbench::corpus::{count_frequencies, FrequencyTable, TokenizedCorpus};
use subwordbench::hybrid::{learn_fallback_analyzer, HybridModel};
use subwordbench::metrics::{chrf, corpus_bleu, EvalPair};
use subwordbench::morph::{segment_line_lmvr, MdlModel};

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn parse_corpus(text: &str) -> Result<TokenizedCorpus, JsError> {
    let sentences: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    TokenizedCorpus::from_sentences(sentences, false).map_err(err)
}

enum Demo {
    Bpe(BpeModel),
    Mdl(MdlModel),
    Hybrid(HybridModel),
}

fn train(
    corpus_text: &str,
    scheme: &str,
    merges: u32,
    alpha: f64,
    budget: u32,
    seed: u64,
) -> Result<Demo, JsError> {
    let corpus = parse_corpus(corpus_text)?;
    let freq: FrequencyTable = count_frequencies(&corpus);
    match scheme {
        "bpe-token" => Ok(Demo::Bpe(
            BpeModel::learn_token(&freq, merges as usize).map_err(err)?,
        )),
        "bpe-sentence" => Ok(Demo::Bpe(
            BpeModel::learn_sentence(&corpus, merges as usize).map_err(err)?,
        )),
        "mdl" => Ok(Demo::Mdl(MdlModel::train(&freq, alpha, seed).map_err(err)?)),
        "mdl-constrained" => Ok(Demo::Mdl(
            MdlModel::train(&freq, alpha, seed)
                .and_then(|m| m.constrain_vocab(budget as usize))
                .map_err(err)?,
        )),
        "hybrid" => {
            let analyses = learn_fallback_analyzer(&freq, 200);
            Ok(Demo::Hybrid(
                HybridModel::build(&analyses, &freq, budget as usize).map_err(err)?,
            ))
        }
        other => Err(JsError::new(&format!("unknown scheme {other:?}"))),
    }
}

/// Trains the chosen scheme on `corpus_text` and segments `input_text`,
/// returning one space-joined piece sequence per input line.
#[wasm_bindgen]
pub fn segment_text(
    corpus_text: &str,
    scheme: &str,
    merges: u32,
    alpha: f64,
    budget: u32,
    seed: u64,
    input_text: &str,
) -> Result<String, JsError> {
    let model = train(corpus_text, scheme, merges, alpha, budget, seed)?;
    let mut out = Vec::new();
    for line in input_text.lines() {
        let pieces: Vec<String> = match &model {
            Demo::Bpe(m) => m.segment_line(line).map_err(err)?,
            Demo::Mdl(m) => segment_line_lmvr(m, line).map_err(err)?,
            Demo::Hybrid(m) => m.segment_line(line).map_err(err)?,
        };
        out.push(pieces.join(" "));
    }
    Ok(out.join("\n"))
}

/// Trains the chosen scheme and describes the resulting model: headline
/// statistics plus the first lines of its model file.
#[wasm_bindgen]
pub fn model_summary(
    corpus_text: &str,
    scheme: &str,
    merges: u32,
    alpha: f64,
    budget: u32,
    seed: u64,
) -> Result<String, JsError> {
    let model = train(corpus_text, scheme, merges, alpha, budget, seed)?;
    let (stats, file) = match &model {
        Demo::Bpe(m) => (
            format!(
                "{} merges, {} producible pieces",
                m.merges().len(),
                m.vocabulary().map(|v| v.len()).unwrap_or(0)
            ),
            m.to_file_string(),
        ),
        Demo::Mdl(m) => (
            format!(
                "{} lexicon morphs, total cost {:.1} nats",
                m.lexicon_size(),
                m.total_cost()
            ),
            m.to_file_string(),
        ),
        Demo::Hybrid(m) => (
            format!(
                "{} stem merges, {} suffixes, {} producible symbols",
                m.stem_bpe().merges().len(),
                m.suffixes().len(),
                m.producible_symbols().unwrap_or(0)
            ),
            m.to_file_string(),
        ),
    };
    let preview: Vec<&str> = file.lines().take(30).collect();
    let truncated = if file.lines().count() > 30 {
        "\n..."
    } else {
        ""
    };
    Ok(format!("{stats}\n\n{}{truncated}", preview.join("\n")))
}

/// Scores hypothesis lines against reference lines with lowercased BLEU and
/// CHRF3, two decimals each.
#[wasm_bindgen]
pub fn score_pair(hyp_text: &str, ref_text: &str) -> Result<String, JsError> {
    let hyps: Vec<String> = hyp_text.lines().map(str::to_string).collect();
    let refs: Vec<String> = ref_text.lines().map(str::to_string).collect();
    let pair = EvalPair::new(hyps, refs).map_err(err)?;
    let bleu = corpus_bleu(&pair, 4, true);
    let chrf3 = chrf(&pair, 3.0, 6, true);
    Ok(format!("BLEU = {bleu:.2}\nCHRF3 = {chrf3:.2}"))
}
