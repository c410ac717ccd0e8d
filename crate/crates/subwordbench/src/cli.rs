//! Command-line driver.
//!
//! Subcommands: `learn`, `apply`, `detok`, `tune`, `score`, `compare`,
//! `bayes`, `report`. Options can also come from a `key = value` config
//! file (`--config`); explicit flags win. All randomness flows from
//! `--seed` (falling back to `$SUBWORDBENCH_SEED`, then 0), and identical
//! invocations with the same seed produce byte-identical outputs.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation or
//! convergence failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bpe::BpeModel;
use crate::corpus::{self, FrequencyTable, TokenizedCorpus};
use crate::hybrid::{self, HybridModel};
use crate::metrics::{self, EvalPair};
use crate::morph::{self, AlternativePolicy, MdlModel};
use crate::stats::{self, Metric, ScoreTable};
use crate::Error;

const ENV_SEED: &str = "SUBWORDBENCH_SEED";

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(
    name = "subwordbench",
    version,
    about = "Subword segmentation training, application, scoring, and score comparison"
)]
struct Cli {
    /// Config file with one `key = value` per line; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// RNG seed (default: $SUBWORDBENCH_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a segmentation model and write its model file.
    Learn(LearnArgs),
    /// Segment text line by line with a trained model.
    Apply(ApplyArgs),
    /// Invert segmented text back to the original tokens.
    Detok(DetokArgs),
    /// Tune the MDL corpusweight by boundary F1 against gold segmentations.
    Tune(TuneArgs),
    /// Score hypothesis files against references with BLEU and CHRF3.
    Score(ScoreArgs),
    /// Compare methods per task with Dunn's test.
    Compare(CompareArgs),
    /// Fit the Bayesian score model and report posterior effects.
    Bayes(BayesArgs),
    /// Emit the full comparison report (means, best counts, Dunn p-values).
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Scheme {
    BpeToken,
    BpeSentence,
    Mdl,
    MdlConstrained,
    Hybrid,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bpe-token" => Ok(Scheme::BpeToken),
            "bpe-sentence" => Ok(Scheme::BpeSentence),
            "mdl" => Ok(Scheme::Mdl),
            "mdl-constrained" => Ok(Scheme::MdlConstrained),
            "hybrid" => Ok(Scheme::Hybrid),
            other => Err(format!("unknown scheme {other:?}")),
        }
    }
}

#[derive(Args, Debug)]
struct LearnArgs {
    /// bpe-token | bpe-sentence | mdl | mdl-constrained | hybrid
    #[arg(long, value_enum)]
    scheme: Option<Scheme>,
    /// Merge budget for BPE schemes (default: 5000, as a joint vocabulary).
    #[arg(long)]
    merges: Option<usize>,
    /// Vocabulary budget for mdl-constrained and hybrid (default: 2500).
    #[arg(long)]
    vocab_budget: Option<usize>,
    /// Corpusweight for the MDL schemes (default: 1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Learn one joint vocabulary over all input files.
    #[arg(long)]
    joint: bool,
    /// Lowercase the training text while loading.
    #[arg(long)]
    lowercase: bool,
    /// Stem+suffix analysis file for the hybrid scheme.
    #[arg(long, value_name = "FILE")]
    analyses: Option<PathBuf>,
    /// Suffix inventory size for the induced analyzer when no analysis
    /// file is given (default: 200).
    #[arg(long)]
    max_suffixes: Option<usize>,
    /// Tokenized training corpora, one sentence per line.
    #[arg(value_name = "CORPUS", required = true)]
    inputs: Vec<PathBuf>,
    /// Output model file.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    /// Trained model file (scheme is detected from the header).
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Input text; stdin when omitted.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Stem+suffix analyses to attach to a hybrid model.
    #[arg(long, value_name = "FILE")]
    analyses: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DetokArgs {
    /// Model file whose marker convention is inverted.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Segmented text; stdin when omitted.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TuneArgs {
    /// Only `mdl` supports tuning.
    #[arg(long, value_enum)]
    scheme: Option<Scheme>,
    /// Gold segmentation file (`word<TAB>morphs(, morphs)*`).
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,
    /// Comma-separated corpusweight grid (default: 0.01,0.1,0.5,1,2,5,10).
    #[arg(long, value_name = "LIST")]
    alpha_grid: Option<String>,
    /// Scoring against multiple gold analyses: best-match | first.
    #[arg(long, value_name = "POLICY")]
    alternatives: Option<String>,
    /// Lowercase the training text while loading.
    #[arg(long)]
    lowercase: bool,
    /// Write the model trained at the best corpusweight here.
    #[arg(long, value_name = "FILE")]
    save_model: Option<PathBuf>,
    /// Tokenized training corpus.
    #[arg(value_name = "CORPUS", required = true)]
    inputs: Vec<PathBuf>,
    /// Report output file; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// BLEU | CHRF3 | both (default: both).
    #[arg(long)]
    metric: Option<String>,
    /// Hypothesis file, one sentence per line.
    #[arg(long, value_name = "FILE")]
    hyp: Option<PathBuf>,
    /// Reference file, one sentence per line.
    #[arg(long = "ref", value_name = "FILE")]
    reference: Option<PathBuf>,
    /// Keep the original casing instead of lowercased scoring.
    #[arg(long)]
    no_lowercase: bool,
    /// Full-precision output file; stdout keeps two decimals.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Score table CSV (`task,method,seed,metric,score`).
    #[arg(long, value_name = "FILE")]
    scores: Option<PathBuf>,
    /// BLEU | CHRF3.
    #[arg(long)]
    metric: Option<String>,
    /// Restrict to one task label.
    #[arg(long)]
    task: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BayesArgs {
    /// Score table CSV (`task,method,seed,metric,score`).
    #[arg(long, value_name = "FILE")]
    scores: Option<PathBuf>,
    /// BLEU | CHRF3.
    #[arg(long)]
    metric: Option<String>,
    /// Independent MCMC chains (default: 4).
    #[arg(long)]
    chains: Option<usize>,
    /// Retained draws per chain (default: 2000).
    #[arg(long)]
    draws: Option<usize>,
    /// Warmup iterations per chain (default: 2000).
    #[arg(long)]
    warmup: Option<usize>,
    /// Baseline method for pairwise contrasts (default: Subword-NMT).
    #[arg(long)]
    baseline: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Score table CSV (`task,method,seed,metric,score`).
    #[arg(long, value_name = "FILE")]
    scores: Option<PathBuf>,
    /// Machine-readable records CSV mirroring the report tables.
    #[arg(long, value_name = "FILE")]
    records: Option<PathBuf>,
    /// Plain-text report; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// `key = value` option file; lookups are typed and flag values win.
struct Config(BTreeMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    usage(format!(
                        "{}:{}: expected `key = value`, got {line:?}",
                        path.display(),
                        idx + 1
                    ))
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Config(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| usage(format!("config key {key:?} has invalid value {raw:?}"))),
        }
    }
}

fn resolve<T: std::str::FromStr>(flag: Option<T>, cfg: &Config, key: &str) -> CliResult<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

fn required<T>(value: Option<T>, what: &str) -> CliResult<T> {
    value.ok_or_else(|| usage(format!("missing required {what}")))
}

fn resolve_seed(flag: Option<u64>, cfg: &Config) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = cfg.get::<u64>("seed")? {
        return Ok(s);
    }
    match std::env::var(ENV_SEED) {
        Ok(raw) => raw
            .parse()
            .map_err(|_| usage(format!("${ENV_SEED} has invalid value {raw:?}"))),
        Err(_) => Ok(0),
    }
}

/// Writes a file atomically: content is staged in a temp file in the target
/// directory and renamed into place only on success.
fn write_atomic(path: &Path, content: &str) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))
        .map_err(|e| Error::io(path, e))?;
    tmp.write_all(content.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

enum AnyModel {
    Bpe(BpeModel),
    Mdl(MdlModel),
    Hybrid(HybridModel),
}

fn load_any_model(path: &Path) -> CliResult<AnyModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.contains("#suffixes\n") {
        return Ok(AnyModel::Hybrid(HybridModel::from_file_string(&text)?));
    }
    if text.starts_with("#subwordbench-bpe") {
        return Ok(AnyModel::Bpe(BpeModel::from_file_string(&text)?));
    }
    if text.starts_with("#subwordbench-mdl") {
        return Ok(AnyModel::Mdl(MdlModel::from_file_string(&text)?));
    }
    Err(CliError::Lib(Error::parse(
        path,
        1,
        "unrecognized model file header",
    )))
}

fn load_joint_frequencies(inputs: &[PathBuf], lowercase: bool) -> CliResult<FrequencyTable> {
    let mut freq = FrequencyTable::new();
    for path in inputs {
        let corpus = corpus::load_corpus(path, lowercase)?;
        freq = freq.merged(&corpus::count_frequencies(&corpus));
    }
    Ok(freq)
}

fn load_concatenated_corpus(inputs: &[PathBuf], lowercase: bool) -> CliResult<TokenizedCorpus> {
    let mut sentences = Vec::new();
    for path in inputs {
        sentences.extend(corpus::load_corpus(path, lowercase)?.sentences().to_vec());
    }
    Ok(TokenizedCorpus::from_sentences(sentences, lowercase)?)
}

fn run_learn(args: LearnArgs, cfg: &Config, seed: u64) -> CliResult<()> {
    let scheme = match args.scheme {
        Some(s) => s,
        None => required(
            cfg.get::<String>("scheme")?
                .map(|s| s.parse::<Scheme>().map_err(usage))
                .transpose()?,
            "--scheme",
        )?,
    };
    let out = required(resolve(args.out, cfg, "out")?, "--out model file")?;
    let merges = resolve(args.merges, cfg, "merges")?.unwrap_or(5000);
    let budget = resolve(args.vocab_budget, cfg, "vocab-budget")?.unwrap_or(2500);
    let alpha = resolve(args.alpha, cfg, "alpha")?.unwrap_or(1.0);
    let lowercase = args.lowercase || cfg.get("lowercase")?.unwrap_or(false);

    let content = match scheme {
        Scheme::BpeToken => {
            let freq = load_joint_frequencies(&args.inputs, lowercase)?;
            BpeModel::learn_token(&freq, merges)?.to_file_string()
        }
        Scheme::BpeSentence => {
            let corpus = load_concatenated_corpus(&args.inputs, lowercase)?;
            BpeModel::learn_sentence(&corpus, merges)?.to_file_string()
        }
        Scheme::Mdl => {
            let freq = load_joint_frequencies(&args.inputs, lowercase)?;
            MdlModel::train(&freq, alpha, seed)?.to_file_string()
        }
        Scheme::MdlConstrained => {
            let freq = load_joint_frequencies(&args.inputs, lowercase)?;
            MdlModel::train(&freq, alpha, seed)?
                .constrain_vocab(budget)?
                .to_file_string()
        }
        Scheme::Hybrid => {
            let freq = load_joint_frequencies(&args.inputs, lowercase)?;
            let analyses = match resolve(args.analyses, cfg, "analyses")? {
                Some(path) => corpus::load_analyses(path)?,
                None => {
                    let max = resolve(args.max_suffixes, cfg, "max-suffixes")?.unwrap_or(200);
                    hybrid::learn_fallback_analyzer(&freq, max)
                }
            };
            HybridModel::build(&analyses, &freq, budget)?.to_file_string()
        }
    };
    write_atomic(&out, &content)
}

/// Applies `transform` to every input line, writing to the output file
/// atomically (or streaming to stdout).
fn stream_lines(
    input: Option<&Path>,
    out: Option<&Path>,
    mut transform: impl FnMut(&str) -> CliResult<String>,
) -> CliResult<()> {
    let reader: Box<dyn BufRead> = match input {
        Some(path) => Box::new(std::io::BufReader::new(
            std::fs::File::open(path).map_err(|e| Error::io(path, e))?,
        )),
        None => Box::new(std::io::BufReader::new(std::io::stdin())),
    };
    let in_name: PathBuf = input
        .map(Path::to_path_buf)
        .unwrap_or_else(|| "<stdin>".into());

    match out {
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            let tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))
                .map_err(|e| Error::io(path, e))?;
            let mut writer = BufWriter::new(tmp);
            for line in reader.lines() {
                let line = line.map_err(|e| Error::io(&in_name, e))?;
                writeln!(writer, "{}", transform(&line)?).map_err(|e| Error::io(path, e))?;
            }
            let tmp = writer
                .into_inner()
                .map_err(|e| Error::io(path, e.into_error()))?;
            tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut writer = BufWriter::new(stdout.lock());
            for line in reader.lines() {
                let line = line.map_err(|e| Error::io(&in_name, e))?;
                writeln!(writer, "{}", transform(&line)?).map_err(|e| Error::io("<stdout>", e))?;
            }
            writer.flush().map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn run_apply(args: ApplyArgs, cfg: &Config) -> CliResult<()> {
    let model_path = required(resolve(args.model, cfg, "model")?, "--model file")?;
    let model = load_any_model(&model_path)?;
    let model = match (model, resolve(args.analyses, cfg, "analyses")?) {
        (AnyModel::Hybrid(h), Some(path)) => {
            AnyModel::Hybrid(h.with_analyses(corpus::load_analyses(path)?)?)
        }
        (m, _) => m,
    };
    let input = resolve(args.input, cfg, "in")?;
    let out = resolve(args.out, cfg, "out")?;

    // Segmentations are cached per token; corpora repeat words heavily.
    let mut cache: BTreeMap<String, String> = BTreeMap::new();
    stream_lines(input.as_deref(), out.as_deref(), move |line| {
        let mut pieces: Vec<String> = Vec::new();
        for tok in line.split_whitespace() {
            if let Some(hit) = cache.get(tok) {
                pieces.push(hit.clone());
                continue;
            }
            let segmented = match &model {
                AnyModel::Bpe(m) => m.segment_word(tok)?.join(" "),
                AnyModel::Mdl(m) => morph::segment_line_lmvr(m, tok)?.join(" "),
                AnyModel::Hybrid(m) => m.segment(tok)?.join(" "),
            };
            cache.insert(tok.to_string(), segmented.clone());
            pieces.push(segmented);
        }
        Ok(pieces.join(" "))
    })
}

fn run_detok(args: DetokArgs, cfg: &Config) -> CliResult<()> {
    let model_path = required(resolve(args.model, cfg, "model")?, "--model file")?;
    let model = load_any_model(&model_path)?;
    let input = resolve(args.input, cfg, "in")?;
    let out = resolve(args.out, cfg, "out")?;

    stream_lines(input.as_deref(), out.as_deref(), move |line| {
        let pieces: Vec<&str> = line.split_whitespace().collect();
        if pieces.is_empty() {
            return Ok(String::new());
        }
        let text = match &model {
            AnyModel::Bpe(m) => m.detokenize(&pieces)?,
            AnyModel::Mdl(_) => morph::detokenize_lmvr(&pieces)?,
            AnyModel::Hybrid(_) => hybrid::detokenize_hybrid(&pieces)?,
        };
        Ok(text)
    })
}

fn parse_alpha_grid(raw: &str) -> CliResult<Vec<f64>> {
    let mut grid = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        grid.push(
            part.parse::<f64>()
                .map_err(|_| usage(format!("bad alpha value {part:?} in grid")))?,
        );
    }
    if grid.is_empty() {
        return Err(usage("empty --alpha-grid"));
    }
    Ok(grid)
}

fn run_tune(args: TuneArgs, cfg: &Config, seed: u64) -> CliResult<()> {
    let scheme = resolve(args.scheme, cfg, "scheme")?.unwrap_or(Scheme::Mdl);
    if scheme != Scheme::Mdl {
        return Err(usage("tune supports --scheme mdl only"));
    }
    let gold_path = required(resolve(args.gold, cfg, "gold")?, "--gold file")?;
    let lowercase = args.lowercase || cfg.get("lowercase")?.unwrap_or(false);
    let grid = match resolve(args.alpha_grid, cfg, "alpha-grid")? {
        Some(raw) => parse_alpha_grid(&raw)?,
        None => morph::DEFAULT_ALPHA_GRID.to_vec(),
    };
    let policy = match resolve(args.alternatives, cfg, "alternatives")?.as_deref() {
        None | Some("best-match") => AlternativePolicy::BestMatch,
        Some("first") => AlternativePolicy::First,
        Some(other) => return Err(usage(format!("unknown alternatives policy {other:?}"))),
    };

    let freq = load_joint_frequencies(&args.inputs, lowercase)?;
    let gold = corpus::load_gold(&gold_path)?;
    let (best, reports) = morph::tune_corpusweight(&freq, &gold, &grid, seed, policy)?;

    let mut text = String::from("alpha      precision recall    f1        pred  gold  match\n");
    for (alpha, r) in &reports {
        let _ = writeln!(
            text,
            "{:<10} {:<9.4} {:<9.4} {:<9.4} {:<5} {:<5} {:<5}",
            alpha,
            r.precision,
            r.recall,
            r.f1,
            r.predicted_boundaries,
            r.gold_boundaries,
            r.matched_boundaries
        );
    }
    let _ = writeln!(text, "best alpha: {best}");

    if let Some(model_out) = resolve(args.save_model, cfg, "save-model")? {
        let model = MdlModel::train(&freq, best, seed)?;
        write_atomic(&model_out, &model.to_file_string())?;
    }
    match resolve(args.out, cfg, "out")? {
        Some(path) => write_atomic(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_score(args: ScoreArgs, cfg: &Config) -> CliResult<()> {
    let hyp = required(resolve(args.hyp, cfg, "hyp")?, "--hyp file")?;
    let reference = required(resolve(args.reference, cfg, "ref")?, "--ref file")?;
    let metric = resolve(args.metric, cfg, "metric")?.unwrap_or_else(|| "both".to_string());
    let lowercase = !(args.no_lowercase || cfg.get("no-lowercase")?.unwrap_or(false));

    let pair = EvalPair::from_files(&hyp, &reference)?;
    let mut rows: Vec<(Metric, f64)> = Vec::new();
    match metric.to_ascii_lowercase().as_str() {
        "both" => {
            rows.push((Metric::Bleu, metrics::corpus_bleu(&pair, 4, lowercase)));
            rows.push((Metric::Chrf3, metrics::chrf(&pair, 3.0, 6, lowercase)));
        }
        m => {
            let metric: Metric = m.parse().map_err(|e: Error| usage(e.to_string()))?;
            let score = match metric {
                Metric::Bleu => metrics::corpus_bleu(&pair, 4, lowercase),
                Metric::Chrf3 => metrics::chrf(&pair, 3.0, 6, lowercase),
            };
            rows.push((metric, score));
        }
    }

    for (metric, score) in &rows {
        println!("{metric} = {score:.2}");
    }
    if let Some(path) = resolve(args.out, cfg, "out")? {
        let mut text = String::new();
        for (metric, score) in &rows {
            let _ = writeln!(text, "{metric}\t{score}");
        }
        write_atomic(&path, &text)?;
    }
    Ok(())
}

fn dunn_report_text(report: &stats::DunnReport) -> String {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "task: {} [{}]  best: {}",
        report.task, report.metric, report.best_method
    );
    let _ = writeln!(
        text,
        "  {:<24} {:>10} {:>10} {:>8} {:>8}",
        "method", "mean", "mean rank", "z", "p"
    );
    for e in &report.entries {
        let _ = writeln!(
            text,
            "  {:<24} {:>10.2} {:>10.2} {:>8.3} {:>8.3}",
            e.method, e.mean_score, e.mean_rank, e.z, e.p
        );
    }
    text
}

fn run_compare(args: CompareArgs, cfg: &Config) -> CliResult<()> {
    let scores = required(resolve(args.scores, cfg, "scores")?, "--scores file")?;
    let metric: Metric = required(resolve(args.metric, cfg, "metric")?, "--metric")?
        .parse::<Metric>()
        .map_err(|e| usage(e.to_string()))?;
    let table = ScoreTable::load_csv(&scores)?;
    let tasks = match resolve(args.task, cfg, "task")? {
        Some(t) => vec![t],
        None => table.tasks(metric),
    };
    if tasks.is_empty() {
        return Err(CliError::Lib(Error::InvalidInput(format!(
            "no {metric} records in {}",
            scores.display()
        ))));
    }

    let mut text = String::new();
    for task in &tasks {
        let report = stats::dunns_test(&table, task, metric)?;
        text.push_str(&dunn_report_text(&report));
    }
    match resolve(args.out, cfg, "out")? {
        Some(path) => write_atomic(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_bayes(args: BayesArgs, cfg: &Config, seed: u64) -> CliResult<()> {
    let scores = required(resolve(args.scores, cfg, "scores")?, "--scores file")?;
    let metric: Metric = required(resolve(args.metric, cfg, "metric")?, "--metric")?
        .parse::<Metric>()
        .map_err(|e| usage(e.to_string()))?;
    let table = ScoreTable::load_csv(&scores)?;
    let config = stats::SamplerConfig {
        chains: resolve(args.chains, cfg, "chains")?.unwrap_or(4),
        warmup: resolve(args.warmup, cfg, "warmup")?.unwrap_or(2000),
        draws: resolve(args.draws, cfg, "draws")?.unwrap_or(2000),
        seed,
        rhat_threshold: 1.05,
    };
    let baseline =
        resolve(args.baseline, cfg, "baseline")?.unwrap_or_else(|| "Subword-NMT".to_string());

    let priors = stats::PriorConfig::for_metric(metric);
    let summary = stats::fit_bayes_linear(&table, metric, &priors, &config)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "model: score ~ Normal(eta[task] + tau[method], eps[task])  [{metric}]"
    );
    let _ = writeln!(
        text,
        "chains: {}  warmup: {}  draws: {}  max R-hat: {:.4}",
        config.chains,
        config.warmup,
        config.draws,
        summary.max_rhat()
    );
    let _ = writeln!(
        text,
        "{:<40} {:>10} {:>10} {:>8} {:>10}",
        "parameter", "mean", "sd", "R-hat", "ESS"
    );
    for p in &summary.params {
        let _ = writeln!(
            text,
            "{:<40} {:>10.3} {:>10.3} {:>8.3} {:>10.0}",
            p.name, p.mean, p.sd, p.rhat, p.ess
        );
    }
    let _ = writeln!(text, "\npairwise tau differences vs {baseline}:");
    for (method, mean, sd) in stats::pairwise_tau(&summary, &baseline)? {
        if method != baseline {
            let _ = writeln!(text, "{method} - {baseline}: {mean:.3} +/- {sd:.3}");
        }
    }

    match resolve(args.out, cfg, "out")? {
        Some(path) => write_atomic(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_report(args: ReportArgs, cfg: &Config) -> CliResult<()> {
    let scores = required(resolve(args.scores, cfg, "scores")?, "--scores file")?;
    let table = ScoreTable::load_csv(&scores)?;

    let mut text = String::new();
    let mut records = String::from("table,task,method,metric,field,value\n");
    let mut reports = Vec::new();

    for metric in [Metric::Bleu, Metric::Chrf3] {
        let tasks = table.tasks(metric);
        if tasks.is_empty() {
            continue;
        }
        let _ = writeln!(text, "== mean \u{b1} sd per cell [{metric}] ==");
        for task in &tasks {
            let _ = writeln!(text, "{task}:");
            for (method, cell) in table.groups(task, metric) {
                let mean = cell.iter().sum::<f64>() / cell.len() as f64;
                let sd = if cell.len() > 1 {
                    (cell.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
                        / (cell.len() - 1) as f64)
                        .sqrt()
                } else {
                    0.0
                };
                let _ = writeln!(text, "  {method:<24} {mean:>8.2} \u{b1} {sd:.2}");
                let _ = writeln!(records, "summary,{task},{method},{metric},mean,{mean}");
                let _ = writeln!(records, "summary,{task},{method},{metric},sd,{sd}");
            }
            reports.push(stats::dunns_test(&table, task, metric)?);
        }
        text.push('\n');
    }

    let _ = writeln!(text, "== Dunn's test p-values vs best ==");
    for report in &reports {
        text.push_str(&dunn_report_text(report));
        for e in &report.entries {
            let _ = writeln!(
                records,
                "dunn,{},{},{},p,{}",
                report.task, e.method, report.metric, e.p
            );
            let _ = writeln!(
                records,
                "dunn,{},{},{},z,{}",
                report.task, e.method, report.metric, e.z
            );
        }
    }

    let _ = writeln!(text, "\n== best or tied with best (p > 0.05) ==");
    let counts = stats::best_count_report(&reports, 0.05);
    for ((method, metric), count) in &counts {
        let _ = writeln!(text, "{method:<24} [{metric}] {count}");
        let _ = writeln!(records, "best_counts,,{method},{metric},count,{count}");
    }

    if let Some(path) = resolve(args.records, cfg, "records")? {
        write_atomic(&path, &records)?;
    }
    match resolve(args.out, cfg, "out")? {
        Some(path) => write_atomic(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses argv and runs the selected subcommand, returning the process exit
/// code (0 success, 1 usage, 2 I/O, 3 validation/convergence).
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not usage errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };

    let result = (|| -> CliResult<()> {
        let cfg = Config::load(cli.config.as_deref())?;
        let seed = resolve_seed(cli.seed, &cfg)?;
        match cli.command {
            Command::Learn(args) => run_learn(args, &cfg, seed),
            Command::Apply(args) => run_apply(args, &cfg),
            Command::Detok(args) => run_detok(args, &cfg),
            Command::Tune(args) => run_tune(args, &cfg, seed),
            Command::Score(args) => run_score(args, &cfg),
            Command::Compare(args) => run_compare(args, &cfg),
            Command::Bayes(args) => run_bayes(args, &cfg, seed),
            Command::Report(args) => run_report(args, &cfg),
        }
    })();

    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } | Error::Parse { .. } => 2,
                _ => 3,
            }
        }
    }
}
