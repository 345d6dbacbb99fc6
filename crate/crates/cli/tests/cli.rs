use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hof_cli::commands;
use hof_cli::toy::{toy_rows, write_toy_corpus};
use hof_cli::{Config, RunDir};
use hof_core::corpus::{class_counts, load_hasoc2021, write_dataset};
use hof_core::{BinaryLabel, Dataset, FineLabel, LabelField, LabeledExample, Lang, Source, SplitTag};

fn hof(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hof"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("HOF_MODEL_DIR")
        .output()
        .expect("run hof");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.conf");
    fs::write(&path, body).unwrap();
    path
}

const TOY_TRAIN: &str = "train.backbone = tiny\ntrain.learning_rate = 0.005\ntrain.batch_size = 8\n";

fn toy_setup(dir: &Path, extra: &str) -> Config {
    write_toy_corpus(&dir.join("toy.csv"), 0..64).unwrap();
    let body = format!("corpus.path = toy.csv\n{TOY_TRAIN}train.members = 2\n{extra}");
    Config::load(&write_config(dir, &body)).unwrap()
}

/// 1102 NOT and 1972 HOF rows, the shape of the English training file.
fn en_shaped(path: &Path) {
    let examples = (0..3074)
        .map(|i| {
            let (b, f) = if i < 1102 {
                (BinaryLabel::Not, FineLabel::None)
            } else {
                (BinaryLabel::Hof, FineLabel::HARMFUL[i % 3])
            };
            LabeledExample::new(format!("e{i}"), format!("post {i} @user https://x.y/{i}"), Lang::En, Some(b), Some(f))
                .unwrap()
        })
        .collect();
    write_dataset(&Dataset::new(examples, Source::Hasoc2021, SplitTag::None).unwrap(), path).unwrap();
}

fn rows(path: &Path) -> Dataset {
    load_hasoc2021(path, Lang::En).unwrap()
}

#[test]
fn default_split_sizes_and_cleaning() {
    let dir = tempfile::tempdir().unwrap();
    en_shaped(&dir.path().join("en.csv"));
    let cfg = Config::load(&write_config(dir.path(), "corpus.path = en.csv\n")).unwrap();
    let run = RunDir::new(dir.path().join("run"));
    commands::prepare(&cfg, &run).unwrap();
    let train = rows(&run.data("train.csv"));
    assert_eq!(train.len(), 2459);
    assert_eq!(rows(&run.data("val.csv")).len(), 615);
    assert!(train.iter().all(|e| !e.text.contains("http") && !e.text.contains("@user")));
    assert!(train.iter().all(|e| e.text.contains("$MENTION$")));
    let manifest = fs::read_to_string(run.root().join("prepare.manifest")).unwrap();
    assert!(manifest.contains("split.seed = 0"));
    assert!(manifest.contains("# rows.train: 2459"));
}

#[test]
fn oversampling_balances_the_train_file() {
    let dir = tempfile::tempdir().unwrap();
    en_shaped(&dir.path().join("en.csv"));
    let cfg = Config::load(&write_config(dir.path(), "corpus.path = en.csv\nsampling.oversample = true\n")).unwrap();
    let run = RunDir::new(dir.path().join("run"));
    commands::prepare(&cfg, &run).unwrap();
    let counts = class_counts(&rows(&run.data("train.csv")), LabelField::Binary).unwrap();
    let original = class_counts(&rows(&run.data("train_original.csv")), LabelField::Binary).unwrap();
    let major = original.get("HOF").max(original.get("NOT"));
    assert_eq!((counts.get("NOT"), counts.get("HOF")), (major, major));
}

#[test]
fn augmentation_doubles_the_train_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_setup(
        dir.path(),
        "augment.enabled = true\naugment.epochs = 1\naugment.learning_rate = 0.005\naugment.batch_size = 16\naugment.max_length = 12\n",
    );
    let run = RunDir::new(dir.path().join("run"));
    commands::prepare(&cfg, &run).unwrap();
    let original = rows(&run.data("train_original.csv")).len();
    let failures = fs::read_to_string(run.data("synthetic.failures")).unwrap().lines().count();
    assert_eq!(rows(&run.data("train.csv")).len(), 2 * original - failures);
    assert!(run.models().join("denoiser").join("weights").is_file());
}

#[test]
fn prepare_is_deterministic_and_reexecutable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_setup(dir.path(), "sampling.oversample = true\n");
    let (a, b) = (RunDir::new(dir.path().join("a")), RunDir::new(dir.path().join("b")));
    commands::prepare(&cfg, &a).unwrap();
    // The manifest alone is enough to redo the run.
    let replay = Config::load(&a.root().join("prepare.manifest")).unwrap();
    commands::prepare(&replay, &b).unwrap();
    for f in ["train.csv", "val.csv", "train_original.csv"] {
        assert_eq!(fs::read(a.data(f)).unwrap(), fs::read(b.data(f)).unwrap(), "{f}");
    }
}

#[test]
fn marathi_text_passes_through_raw() {
    let dir = tempfile::tempdir().unwrap();
    let text = "@user हे https://t.co/x  पहा";
    let examples = (0..10)
        .map(|i| LabeledExample::new(format!("m{i}"), format!("{text} {i}"), Lang::Mr, Some(BinaryLabel::Not), None).unwrap())
        .collect();
    write_dataset(&Dataset::new(examples, Source::Hasoc2021, SplitTag::None).unwrap(), dir.path().join("mr.csv")).unwrap();
    let cfg = Config::load(&write_config(dir.path(), "corpus.path = mr.csv\ncorpus.lang = mr\n")).unwrap();
    let run = RunDir::new(dir.path().join("run"));
    commands::prepare(&cfg, &run).unwrap();
    for e in rows(&run.data("train.csv")).iter() {
        assert!(e.text.starts_with(text), "{}", e.text);
    }
}

#[test]
fn train_then_predict_matches_in_process_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_setup(dir.path(), "");
    let run = RunDir::new(dir.path().join("run"));
    commands::prepare(&cfg, &run).unwrap();
    let in_process = commands::train(&cfg, &run).unwrap();
    assert_eq!(commands::members(&run).unwrap().len(), 2);
    for m in commands::members(&run).unwrap() {
        assert!(m.join("weights").is_file());
    }
    cfg.predict_input = Some(run.data("val.csv"));
    commands::predict(&cfg, &run).unwrap();
    let evaluated = commands::evaluate(&cfg, &run).unwrap();
    assert_eq!(in_process, evaluated);
    assert!(run.report("ensemble").with_extension("tsv").is_file());
}

#[test]
fn gold_as_predictions_scores_100() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.csv");
    write_dataset(&toy_rows(0..20), &gold).unwrap();
    let mut preds = String::from("id,label\n");
    for e in toy_rows(0..20).iter() {
        preds.push_str(&format!("{},{}\n", e.id, e.label_fine.unwrap()));
    }
    fs::write(dir.path().join("pred.csv"), preds).unwrap();
    let cfg = write_config(dir.path(), "evaluate.gold = gold.csv\nevaluate.predictions = pred.csv\nevaluate.task = fine\n");
    let run = dir.path().join("run");
    let (code, out) = hof(&["evaluate", "--config", cfg.to_str().unwrap(), "--run-dir", run.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("100.00"), "{out}");
    assert!(run.join("reports/ensemble.tsv").is_file());
}

#[test]
fn fine_grained_run_labels_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_setup(dir.path(), "predict.task = fine\n");
    let run = RunDir::new(dir.path().join("run"));
    commands::prepare(&cfg, &run).unwrap();
    commands::train_ovr(&cfg, &run).unwrap();
    let cfg = Config {
        predict_input: Some(run.data("val.csv")),
        ..cfg
    };
    let out = commands::predict(&cfg, &run).unwrap();
    let body = fs::read_to_string(out).unwrap();
    let labels: Vec<&str> = body.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels.len(), rows(&run.data("val.csv")).len());
    assert!(labels.iter().all(|l| ["NONE", "HATE", "OFFN", "PRFN"].contains(l)));
    let priors = fs::read_to_string(run.models().join("priors")).unwrap();
    assert_eq!(priors.lines().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = d.join("run");
    let run = run.to_str().unwrap();

    let bad_key = write_config(d, "train.epoch = 3\n");
    let (code, out) = hof(&["prepare", "--config", bad_key.to_str().unwrap(), "--run-dir", run]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("train.epoch"));

    let (code, _) = hof(&["frobnicate"]);
    assert_eq!(code, 1);

    let missing = write_config(d, "corpus.path = nowhere.csv\n");
    let (code, out) = hof(&["prepare", "--config", missing.to_str().unwrap(), "--run-dir", run]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("nowhere.csv"));

    let (code, out) = hof(&["predict", "--run-dir", run]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("test.csv"));

    write_toy_corpus(&d.join("toy.csv"), 0..16).unwrap();
    let hub = write_config(d, "corpus.path = toy.csv\ntrain.backbone = bert-base-uncased\ntrain.members = 1\n");
    let cfg = hub.to_str().unwrap();
    assert_eq!(hof(&["prepare", "--config", cfg, "--run-dir", run]).0, 0);
    let (code, out) = hof(&["train", "--config", cfg, "--run-dir", run]);
    assert_eq!(code, 3, "{out}");
    assert!(out.contains("bert-base-uncased"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_corpus(&dir.path().join("toy.csv"), 0..16).unwrap();
    let cfg = write_config(dir.path(), "corpus.path = toy.csv\nsplit.seed = 1\n");
    let run = dir.path().join("run");
    let (code, out) = hof(&["prepare", "--config", cfg.to_str().unwrap(), "--run-dir", run.to_str().unwrap(), "--seed", "42"]);
    assert_eq!(code, 0, "{out}");
    let manifest = fs::read_to_string(run.join("prepare.manifest")).unwrap();
    assert!(manifest.contains("split.seed = 42") && manifest.contains("train.seed = 42"));
}
