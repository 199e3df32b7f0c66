use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bidibeam"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic corpus plus trained models in a fresh directory.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let f = Self { dir };
        ok(&["synth", "--out", s(&f.data()), "--count", "300"]);
        ok(&[
            "train",
            "--corpus",
            s(&f.data().join("corpus.tsv")),
            "--out",
            s(&f.models()),
        ]);
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn data(&self) -> PathBuf {
        self.path("data")
    }

    fn models(&self) -> PathBuf {
        self.path("models")
    }

    fn embeddings(&self) -> PathBuf {
        self.data().join("embeddings.txt")
    }
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn resolved(dir: &Path) -> String {
    fs::read_to_string(dir.join("config.resolved")).unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["decode", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let out = run(&["decode", "--B", "abc", "--out", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("B"));
}

#[test]
fn unreadable_corpus_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.tsv");
    let out = run(&["train", "--corpus", s(&missing), "--out", s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.tsv"));
}

#[test]
fn malformed_corpus_reports_the_line() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("bad.tsv");
    fs::write(&corpus, "hi\thello\nno tab here\n").unwrap();
    let out = run(&["train", "--corpus", s(&corpus), "--out", s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.tsv:2"));
}

#[test]
fn training_is_deterministic() {
    let f = Fixture::new();
    let again = f.path("again");
    ok(&["train", "--corpus", s(&f.data().join("corpus.tsv")), "--out", s(&again)]);
    for name in [
        "vocab.txt",
        "regular.lm",
        "reverse.lm",
        "train.tsv",
        "validation.tsv",
        "test.tsv",
    ] {
        assert_eq!(
            fs::read(f.models().join(name)).unwrap(),
            fs::read(again.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn decode_writes_one_row_per_test_pair() {
    let f = Fixture::new();
    let out = f.path("vbs");
    ok(&[
        "decode",
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
        "--B",
        "3",
        "--T",
        "12",
    ]);
    let tests = fs::read_to_string(f.models().join("test.tsv")).unwrap().lines().count();
    let rows = csv_rows(&out.join("decodes.csv"));
    assert_eq!(rows.len(), tests);
    assert_eq!(csv_rows(&out.join("decodes.complexity.csv")).len(), tests);
    assert!(!out.join("decodes.beams.jsonl").exists());
    let config = resolved(&out);
    assert!(config.contains("B=3\n") && config.contains("T=12\n") && config.contains("alpha=0.6\n"));
}

#[test]
fn bidis_records_the_validated_lambda() {
    let f = Fixture::new();
    let out = f.path("bidis");
    ok(&[
        "decode",
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
        "--algorithm",
        "bidis",
        "--B",
        "4",
        "--lambda-grid",
        "0,0.5,2",
    ]);
    let config = resolved(&out);
    let lambda = config
        .lines()
        .find_map(|l| l.strip_prefix("lambda="))
        .unwrap()
        .parse::<f64>()
        .unwrap();
    assert!([0.0, 0.5, 2.0].contains(&lambda));
    let rows = csv_rows(&out.join("decodes.csv"));
    assert!(rows.iter().all(|r| r[7].parse::<f64>().unwrap() == lambda));
}

#[test]
fn plan_errors_stop_before_decoding() {
    let f = Fixture::new();
    let out = f.path("odd");
    let r = run(&[
        "decode",
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
        "--algorithm",
        "bidia-bleu",
        "--B",
        "3",
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.join("decodes.csv").exists());

    let r = run(&[
        "decode",
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
        "--algorithm",
        "bidia-wmd",
        "--B",
        "4",
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("embeddings"));

    let r = run(&[
        "sweep",
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
        "--nb",
        "2,3",
        "--algorithms",
        "vbs,bidia-bleu",
    ]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let f = Fixture::new();
    let cfg = f.path("run.conf");
    fs::write(&cfg, "# decode settings\nB=4\nT=9\nalgorithm=bidia-bleu\n").unwrap();
    let out = f.path("cfg");
    ok(&[
        "decode",
        "--config",
        s(&cfg),
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
        "--B",
        "6",
    ]);
    let config = resolved(&out);
    assert!(config.contains("B=6\n") && config.contains("T=9\n") && config.contains("algorithm=bidia-bleu\n"));
    let rows = csv_rows(&out.join("decodes.csv"));
    assert!(rows.iter().all(|r| &r[6] == "3"));

    fs::write(&cfg, "beam=4\n").unwrap();
    let r = run(&[
        "decode",
        "--config",
        s(&cfg),
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
    ]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn sweep_shapes() {
    let f = Fixture::new();
    let out = f.path("vbs-sweep");
    ok(&[
        "sweep",
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
        "--algorithms",
        "vbs",
        "--nb",
        "1,6,10,50",
        "--T",
        "8",
    ]);
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(
        rows.iter().map(|r| r[0].to_string()).collect::<Vec<_>>(),
        ["1", "6", "10", "50"]
    );

    let out = f.path("all");
    ok(&[
        "sweep",
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
        "--nb",
        "2",
        "--embeddings",
        s(&f.embeddings()),
    ]);
    let rows = csv_rows(&out.join("sweep.csv"));
    let algorithms: Vec<&str> = rows.iter().map(|r| r.get(1).unwrap()).collect();
    assert_eq!(algorithms, ["vbs", "bidis", "bidia-bleu", "bidia-wmd"]);
    assert!(rows
        .iter()
        .all(|r| (5..8).all(|i| r[i].parse::<f64>().unwrap().is_finite())));
}

#[test]
fn sweep_is_identical_across_job_counts() {
    let f = Fixture::new();
    let one = f.path("one");
    let four = f.path("four");
    for (dir, jobs) in [(&one, "1"), (&four, "4")] {
        ok(&[
            "sweep",
            "--models",
            s(&f.models()),
            "--out",
            s(dir),
            "--nb",
            "2,4",
            "--embeddings",
            s(&f.embeddings()),
            "--jobs",
            jobs,
        ]);
    }
    assert_eq!(
        fs::read(one.join("sweep.csv")).unwrap(),
        fs::read(four.join("sweep.csv")).unwrap()
    );
    for entry in fs::read_dir(one.join("decodes")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(one.join("decodes").join(&name)).unwrap(),
            fs::read(four.join("decodes").join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn analyze_needs_persisted_beams() {
    let f = Fixture::new();
    let out = f.path("plain");
    ok(&["decode", "--models", s(&f.models()), "--out", s(&out), "--B", "2"]);
    let r = run(&[
        "analyze",
        "--models",
        s(&f.models()),
        "--decodes",
        s(&out.join("decodes.csv")),
        "--out",
        s(&f.path("analysis")),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("--persist-beams"));

    ok(&[
        "decode",
        "--models",
        s(&f.models()),
        "--out",
        s(&out),
        "--B",
        "2",
        "--persist-beams",
    ]);
    let analysis = f.path("analysis");
    ok(&[
        "analyze",
        "--models",
        s(&f.models()),
        "--decodes",
        s(&out.join("decodes.csv")),
        "--out",
        s(&analysis),
    ]);
    let best = csv_rows(&analysis.join("best_hypothesis.csv"));
    assert_eq!(best.len(), 1);
    assert!(best[0][6].parse::<f64>().unwrap() >= best[0][5].parse::<f64>().unwrap());
    let histogram = csv_rows(&analysis.join("rank_histogram.csv"));
    let tests = fs::read_to_string(f.models().join("test.tsv")).unwrap().lines().count();
    let total: u64 = histogram.iter().map(|r| r[4].parse::<u64>().unwrap()).sum();
    assert_eq!(total as usize, tests);
}

fn position_table(dir: &Path, order: &str) -> Vec<Vec<String>> {
    csv_rows(&dir.join("word_positions.csv"))
        .into_iter()
        .filter(|r| &r[0] == order)
        .map(|r| r.iter().skip(1).map(str::to_string).collect())
        .collect()
}

#[test]
fn word_positions_of_a_reversed_corpus() {
    let f = Fixture::new();
    let corpus = fs::read_to_string(f.data().join("corpus.tsv")).unwrap();
    let reversed: String = corpus
        .lines()
        .map(|l| {
            let (src, tgt) = l.split_once('\t').unwrap();
            let words: Vec<&str> = tgt.split_whitespace().rev().collect();
            format!("{src}\t{}\n", words.join(" "))
        })
        .collect();
    let reversed_path = f.path("reversed.tsv");
    fs::write(&reversed_path, reversed).unwrap();

    let a = f.path("stats-regular");
    let b = f.path("stats-reversed");
    ok(&[
        "corpus-stats",
        "--corpus",
        s(&f.data().join("corpus.tsv")),
        "--out",
        s(&a),
    ]);
    ok(&["corpus-stats", "--corpus", s(&reversed_path), "--out", s(&b)]);
    assert!(!position_table(&a, "regular").is_empty());
    assert_eq!(position_table(&a, "regular"), position_table(&b, "reverse"));
    assert_eq!(position_table(&a, "reverse"), position_table(&b, "regular"));
}

#[test]
fn jsonl_corpus_trains() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.jsonl");
    let mut text = String::new();
    for i in 0..40 {
        text.push_str(&format!(
            "{{\"source\": \"do you like item{}\", \"target\": \"yes , I like item{} .\"}}\n",
            i % 5,
            i % 5
        ));
    }
    fs::write(&corpus, text).unwrap();
    let models = dir.path().join("m");
    ok(&[
        "train",
        "--corpus",
        s(&corpus),
        "--out",
        s(&models),
        "--split",
        "0.8,0.1,0.1",
    ]);
    assert!(resolved(&models).contains("format=jsonl\n"));
    assert_eq!(fs::read_to_string(models.join("test.tsv")).unwrap().lines().count(), 4);
}
