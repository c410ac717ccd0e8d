//! End-to-end tests of the command-line interface.

mod common;

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use common::{reference_cells, synthetic_corpus};
use subwordbench::stats::{self, Metric};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subwordbench"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_corpus(dir: &Path, name: &str, seed: u64) -> std::path::PathBuf {
    let (sentences, _) = synthetic_corpus(1_500, 120, seed);
    let text: String = sentences
        .iter()
        .map(|s| format!("{}\n", s.join(" ")))
        .collect();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn learn_writes_model_files_with_expected_headers() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), "src.txt", 1);
    write_corpus(dir.path(), "tgt.txt", 2);

    let out = run_in(
        dir.path(),
        &[
            "learn",
            "--scheme",
            "bpe-token",
            "--merges",
            "5000",
            "--joint",
            "src.txt",
            "tgt.txt",
            "-o",
            "model.bpe",
        ],
    );
    assert_ok(&out);
    let text = std::fs::read_to_string(dir.path().join("model.bpe")).unwrap();
    assert!(text.starts_with("#subwordbench-bpe v1 mode=token merges="));
    let merges = text.lines().count() - 1;
    assert!(merges <= 5000);

    let out = run_in(
        dir.path(),
        &[
            "learn",
            "--scheme",
            "bpe-sentence",
            "--merges",
            "200",
            "src.txt",
            "-o",
            "model.spm",
        ],
    );
    assert_ok(&out);
    let text = std::fs::read_to_string(dir.path().join("model.spm")).unwrap();
    assert!(text.starts_with("#subwordbench-bpe v1 mode=sentence"));

    let out = run_in(
        dir.path(),
        &[
            "learn",
            "--scheme",
            "mdl-constrained",
            "--alpha",
            "0.5",
            "--vocab-budget",
            "300",
            "--seed",
            "3",
            "src.txt",
            "-o",
            "model.mdl",
        ],
    );
    assert_ok(&out);
    let text = std::fs::read_to_string(dir.path().join("model.mdl")).unwrap();
    assert!(text.starts_with("#subwordbench-mdl v1 alpha=0.5 vocab="));
    let vocab = text.lines().count() - 1;
    assert!(vocab <= 300, "constrained lexicon {vocab} > 300");

    let out = run_in(
        dir.path(),
        &[
            "learn",
            "--scheme",
            "hybrid",
            "--vocab-budget",
            "400",
            "src.txt",
            "-o",
            "model.hyb",
        ],
    );
    assert_ok(&out);
    let text = std::fs::read_to_string(dir.path().join("model.hyb")).unwrap();
    assert!(text.contains("#suffixes\n"));
}

#[test]
fn apply_detok_round_trips_every_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "corpus.txt", 5);
    let original = std::fs::read_to_string(&corpus).unwrap();

    for (scheme, model) in [
        ("bpe-token", "m1"),
        ("bpe-sentence", "m2"),
        ("mdl", "m3"),
        ("hybrid", "m4"),
    ] {
        let out = run_in(
            dir.path(),
            &[
                "learn",
                "--scheme",
                scheme,
                "--merges",
                "150",
                "--vocab-budget",
                "500",
                "--seed",
                "9",
                "corpus.txt",
                "-o",
                model,
            ],
        );
        assert_ok(&out);
        let out = run_in(
            dir.path(),
            &[
                "apply",
                "--model",
                model,
                "--in",
                "corpus.txt",
                "-o",
                "segmented.txt",
            ],
        );
        assert_ok(&out);
        let out = run_in(
            dir.path(),
            &[
                "detok",
                "--model",
                model,
                "--in",
                "segmented.txt",
                "-o",
                "restored.txt",
            ],
        );
        assert_ok(&out);
        let restored = std::fs::read_to_string(dir.path().join("restored.txt")).unwrap();
        assert_eq!(restored, original, "{scheme} did not round-trip");
    }
}

#[test]
fn apply_detok_pipe_via_stdin() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), "corpus.txt", 6);
    assert_ok(&run_in(
        dir.path(),
        &[
            "learn",
            "--scheme",
            "bpe-token",
            "--merges",
            "100",
            "corpus.txt",
            "-o",
            "model.bpe",
        ],
    ));

    let mut apply = bin()
        .args(["apply", "--model", "model.bpe"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    apply
        .stdin
        .take()
        .unwrap()
        .write_all(b"ababa cedjh\n")
        .unwrap();
    let segmented = apply.wait_with_output().unwrap();
    assert!(segmented.status.success());

    let mut detok = bin()
        .args(["detok", "--model", "model.bpe"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    detok
        .stdin
        .take()
        .unwrap()
        .write_all(&segmented.stdout)
        .unwrap();
    let restored = detok.wait_with_output().unwrap();
    assert!(restored.status.success());
    assert_eq!(String::from_utf8_lossy(&restored.stdout), "ababa cedjh\n");
}

#[test]
fn score_prints_two_decimal_metrics() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hyp.txt"), "the cat sat on the mat\n").unwrap();
    std::fs::write(dir.path().join("ref.txt"), "the cat sat on the mat\n").unwrap();
    let out = run_in(
        dir.path(),
        &[
            "score",
            "--hyp",
            "hyp.txt",
            "--ref",
            "ref.txt",
            "-o",
            "scores.txt",
        ],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("BLEU = 100.00"), "{stdout}");
    assert!(stdout.contains("CHRF3 = 100.00"), "{stdout}");
    // the file carries full precision
    let file = std::fs::read_to_string(dir.path().join("scores.txt")).unwrap();
    assert!(file.contains("BLEU\t100"), "{file}");
}

#[test]
fn tune_reports_grid_and_saves_model() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("corpus.txt"),
        "walked walking talked talking\nwalked talking\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("gold.tsv"),
        "walked\twalk ed\nwalking\twalk ing\ntalked\ttalk ed\ntalking\ttalk ing\n",
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "tune",
            "--scheme",
            "mdl",
            "--gold",
            "gold.tsv",
            "--alpha-grid",
            "0.1,2,10",
            "--seed",
            "7",
            "--save-model",
            "best.mdl",
            "corpus.txt",
        ],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let grid_rows = stdout
        .lines()
        .filter(|l| l.starts_with(char::is_numeric))
        .count();
    assert_eq!(grid_rows, 3, "{stdout}");
    assert!(stdout.contains("best alpha:"), "{stdout}");
    assert!(dir.path().join("best.mdl").exists());
}

#[test]
fn compare_emits_dunn_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = stats::resample_from_summary(&reference_cells(Metric::Bleu), 5, 31).unwrap();
    table.save_csv(dir.path().join("scores.csv")).unwrap();

    let out = run_in(
        dir.path(),
        &["compare", "--scores", "scores.csv", "--metric", "BLEU"],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    // one block per task, one row per method
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("task: ")).count(),
        8,
        "{stdout}"
    );
    assert_eq!(
        stdout
            .lines()
            .filter(|l| l.trim_start().starts_with("LMVR"))
            .count(),
        8,
        "{stdout}"
    );
    assert!(stdout.contains("best:"), "{stdout}");

    let out = run_in(
        dir.path(),
        &[
            "compare",
            "--scores",
            "scores.csv",
            "--metric",
            "BLEU",
            "--task",
            "NE-EN",
        ],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("task: ").count(), 1);
}

#[test]
fn report_writes_text_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut cells = reference_cells(Metric::Bleu);
    cells.extend(reference_cells(Metric::Chrf3));
    let table = stats::resample_from_summary(&cells, 5, 33).unwrap();
    table.save_csv(dir.path().join("scores.csv")).unwrap();

    let out = run_in(
        dir.path(),
        &[
            "report",
            "--scores",
            "scores.csv",
            "-o",
            "report.txt",
            "--records",
            "records.csv",
        ],
    );
    assert_ok(&out);
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(text.contains("mean \u{b1} sd per cell [BLEU]"));
    assert!(text.contains("Dunn's test p-values"));
    assert!(text.contains("best or tied with best"));

    let records = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert!(records.starts_with("table,task,method,metric,field,value\n"));
    // 32 cells x 2 metrics x (mean, sd)
    assert_eq!(records.matches("\nsummary,").count(), 128);
    assert!(records.contains("\ndunn,"));
    assert!(records.contains("\nbest_counts,"));
}

#[test]
fn bayes_reports_posterior_and_pairwise() {
    let dir = tempfile::tempdir().unwrap();
    let table = stats::resample_from_summary(&reference_cells(Metric::Bleu), 5, 41).unwrap();
    table.save_csv(dir.path().join("scores.csv")).unwrap();

    let out = run_in(
        dir.path(),
        &[
            "bayes",
            "--scores",
            "scores.csv",
            "--metric",
            "BLEU",
            "--seed",
            "2",
        ],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("eta[KK-EN (train220k)]"), "{stdout}");
    assert!(stdout.contains("tau[LMVR]"), "{stdout}");
    assert!(stdout.contains("pairwise tau differences vs Subword-NMT:"));
    assert!(stdout.contains("LMVR - Subword-NMT:"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), "corpus.txt", 8);
    std::fs::write(
        dir.path().join("bench.conf"),
        "scheme = bpe-token\nmerges = 50\nout = from_config.bpe\n",
    )
    .unwrap();

    let out = run_in(
        dir.path(),
        &["learn", "--config", "bench.conf", "corpus.txt"],
    );
    assert_ok(&out);
    let text = std::fs::read_to_string(dir.path().join("from_config.bpe")).unwrap();
    assert!(text.lines().count() - 1 <= 50);

    // a flag overrides the config value
    let out = run_in(
        dir.path(),
        &[
            "learn",
            "--config",
            "bench.conf",
            "--merges",
            "10",
            "-o",
            "flag_wins.bpe",
            "corpus.txt",
        ],
    );
    assert_ok(&out);
    let text = std::fs::read_to_string(dir.path().join("flag_wins.bpe")).unwrap();
    assert!(text.lines().count() - 1 <= 10);
}

#[test]
fn seed_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), "corpus.txt", 12);
    for out_name in ["env1.mdl", "env2.mdl"] {
        let out = bin()
            .args([
                "learn",
                "--scheme",
                "mdl",
                "--alpha",
                "2",
                "corpus.txt",
                "-o",
                out_name,
            ])
            .env("SUBWORDBENCH_SEED", "123")
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_ok(&out);
    }
    let a = std::fs::read(dir.path().join("env1.mdl")).unwrap();
    let b = std::fs::read(dir.path().join("env2.mdl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();

    // usage: unknown subcommand
    let out = run_in(dir.path(), &["unknown-subcommand"]);
    assert_eq!(out.status.code(), Some(1));

    // usage: missing required option
    write_corpus(dir.path(), "corpus.txt", 14);
    let out = run_in(dir.path(), &["learn", "corpus.txt", "-o", "m.bpe"]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "missing --scheme should be usage"
    );

    // i/o: nonexistent input file
    let out = run_in(
        dir.path(),
        &[
            "learn",
            "--scheme",
            "bpe-token",
            "missing.txt",
            "-o",
            "m.bpe",
        ],
    );
    assert_eq!(out.status.code(), Some(2));

    // validation: model needs every (task, method) cell filled
    let mut csv = String::from("task,method,seed,metric,score\n");
    for s in 0..5 {
        csv.push_str(&format!("t1,m1,{s},BLEU,1.{s}\n"));
        csv.push_str(&format!("t1,m2,{s},BLEU,2.{s}\n"));
        csv.push_str(&format!("t2,m1,{s},BLEU,3.{s}\n"));
    }
    std::fs::write(dir.path().join("sparse.csv"), csv).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "bayes",
            "--scores",
            "sparse.csv",
            "--metric",
            "BLEU",
            "--chains",
            "2",
            "--warmup",
            "100",
            "--draws",
            "100",
        ],
    );
    assert_eq!(out.status.code(), Some(3));

    // no partial output file on mid-stream failure
    std::fs::write(dir.path().join("bad.txt"), "x@@ y@@\n").unwrap();
    assert_ok(&run_in(
        dir.path(),
        &[
            "learn",
            "--scheme",
            "bpe-token",
            "--merges",
            "10",
            "corpus.txt",
            "-o",
            "model.bpe",
        ],
    ));
    let out = run_in(
        dir.path(),
        &[
            "detok",
            "--model",
            "model.bpe",
            "--in",
            "bad.txt",
            "-o",
            "never.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("never.txt").exists());

    // help is not an error
    let out = run_in(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn apply_hybrid_with_external_analyses() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("corpus.txt"),
        "walked talked walked sun\nwalked talked\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("morsel.tsv"),
        "walked\twalk\ted\ntalked\ttalk\ted\n",
    )
    .unwrap();
    assert_ok(&run_in(
        dir.path(),
        &[
            "learn",
            "--scheme",
            "hybrid",
            "--analyses",
            "morsel.tsv",
            "--vocab-budget",
            "100",
            "corpus.txt",
            "-o",
            "model.hyb",
        ],
    ));
    let out = run_in(
        dir.path(),
        &[
            "apply",
            "--model",
            "model.hyb",
            "--analyses",
            "morsel.tsv",
            "--in",
            "corpus.txt",
        ],
    );
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("+ed"), "{stdout}");
}
