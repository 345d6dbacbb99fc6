//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! corpus.path = data/en_train.csv
//! corpus.lang = en
//! train.backbone = cardiffnlp/twitter-roberta-base-hate
//! ```
//!
//! Relative paths are resolved against the config file's directory. Unset
//! training keys keep the defaults of [`TrainConfig`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hof_core::{AugmentConfig, Lang, Source, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Binary,
    Fine,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "binary" | "a" => Ok(Task::Binary),
            "fine" | "b" => Ok(Task::Fine),
            _ => Err(format!("expected `binary` or `fine`, got `{s}`")),
        }
    }
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Fine => "fine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub corpus_path: Option<PathBuf>,
    pub corpus_lang: Lang,
    pub corpus_multilingual: Vec<(Lang, PathBuf)>,
    pub corpus_extra: Vec<(Source, PathBuf)>,
    pub corpus_test: Option<PathBuf>,

    pub split_ratio: f64,
    pub split_seed: u64,

    /// `None` means "language default": cleaning on for EN/HI, raw for MR.
    pub remove_urls: Option<bool>,
    pub replace_mentions: Option<bool>,
    pub placeholder: String,

    pub oversample: bool,
    pub sampling_seed: u64,

    pub augment_enabled: bool,
    pub augment: AugmentConfig,
    pub augment_input: Option<PathBuf>,
    pub augment_output: Option<PathBuf>,

    pub train: TrainConfig,
    pub members: usize,

    pub pair_members: usize,
    pub gate_manifest: Option<PathBuf>,

    pub predict_input: Option<PathBuf>,
    pub predict_task: Task,
    pub predict_output: Option<PathBuf>,

    pub evaluate_gold: Option<PathBuf>,
    pub evaluate_predictions: Option<PathBuf>,
    pub evaluate_task: Option<Task>,
    pub evaluate_name: String,
    pub evaluate_output: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            corpus_path: None,
            corpus_lang: Lang::En,
            corpus_multilingual: Vec::new(),
            corpus_extra: Vec::new(),
            corpus_test: None,
            split_ratio: 0.8,
            split_seed: 0,
            remove_urls: None,
            replace_mentions: None,
            placeholder: "$MENTION$".into(),
            oversample: false,
            sampling_seed: 0,
            augment_enabled: false,
            augment: AugmentConfig::default(),
            augment_input: None,
            augment_output: None,
            train: TrainConfig::default(),
            members: 5,
            pair_members: 1,
            gate_manifest: None,
            predict_input: None,
            predict_task: Task::Binary,
            predict_output: None,
            evaluate_gold: None,
            evaluate_predictions: None,
            evaluate_task: None,
            evaluate_name: "ensemble".into(),
            evaluate_output: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("{key}: invalid value `{value}`: {e}")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// `tag:path` entries, where the path itself may contain ':'.
fn tagged<T: FromStr>(key: &str, value: &str, base: &Path) -> Result<Vec<(T, PathBuf)>>
where
    T::Err: std::fmt::Display,
{
    list(value)
        .map(|item| {
            let (tag, path) = item.split_once(':').ok_or_else(|| {
                CliError::Config(format!("{key}: expected `tag:path`, got `{item}`"))
            })?;
            Ok((parse(key, tag.trim())?, base.join(path.trim())))
        })
        .collect()
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse_str(&body, base)
    }

    pub fn parse_str(body: &str, base: &Path) -> Result<Self> {
        let mut c = Config::default();
        for (n, raw) in body.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", n + 1))
            })?;
            c.set(key.trim(), value.trim(), base)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<()> {
        let path = || Some(base.join(v));
        match key {
            "corpus.path" => self.corpus_path = path(),
            "corpus.lang" => self.corpus_lang = parse(key, v)?,
            "corpus.multilingual" => self.corpus_multilingual = tagged(key, v, base)?,
            "corpus.extra" => self.corpus_extra = tagged(key, v, base)?,
            "corpus.test" => self.corpus_test = path(),
            "split.ratio" => self.split_ratio = parse(key, v)?,
            "split.seed" => self.split_seed = parse(key, v)?,
            "preprocess.remove_urls" => self.remove_urls = Some(parse(key, v)?),
            "preprocess.replace_mentions" => self.replace_mentions = Some(parse(key, v)?),
            "preprocess.placeholder" => self.placeholder = v.to_owned(),
            "sampling.oversample" => self.oversample = parse(key, v)?,
            "sampling.seed" => self.sampling_seed = parse(key, v)?,
            "augment.enabled" => self.augment_enabled = parse(key, v)?,
            "augment.mask_ratio" => self.augment.mask_ratio = parse(key, v)?,
            "augment.backbone" => self.augment.backbone = v.to_owned(),
            "augment.seed" => self.augment.seed = parse(key, v)?,
            "augment.max_length" => self.augment.generation_max_length = parse(key, v)?,
            "augment.epochs" => self.augment.epochs = parse(key, v)?,
            "augment.learning_rate" => self.augment.learning_rate = parse(key, v)?,
            "augment.batch_size" => self.augment.batch_size = parse(key, v)?,
            "augment.input" => self.augment_input = path(),
            "augment.output" => self.augment_output = path(),
            "train.backbone" => self.train.backbone = v.to_owned(),
            "train.epochs" => self.train.epochs = parse(key, v)?,
            "train.learning_rate" => self.train.learning_rate = parse(key, v)?,
            "train.batch_size" => self.train.batch_size = parse(key, v)?,
            "train.max_seq_len" => self.train.max_seq_len = parse(key, v)?,
            "train.weight_decay" => self.train.weight_decay = parse(key, v)?,
            "train.seed" => self.train.seed = parse(key, v)?,
            "train.members" => self.members = parse(key, v)?,
            "ovr.pair_members" => self.pair_members = parse(key, v)?,
            "ovr.gate_manifest" => self.gate_manifest = path(),
            "predict.input" => self.predict_input = path(),
            "predict.task" => self.predict_task = parse(key, v)?,
            "predict.output" => self.predict_output = path(),
            "evaluate.gold" => self.evaluate_gold = path(),
            "evaluate.predictions" => self.evaluate_predictions = path(),
            "evaluate.task" => self.evaluate_task = Some(parse(key, v)?),
            "evaluate.name" => self.evaluate_name = v.to_owned(),
            "evaluate.output" => self.evaluate_output = path(),
            _ => return Err(CliError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(CliError::Config(format!(
                "split.ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if self.members == 0 || self.pair_members == 0 {
            return Err(CliError::Config(
                "train.members and ovr.pair_members must be positive".into(),
            ));
        }
        self.augment.validate()?;
        // num_labels is set per model; check the rest with a valid count.
        TrainConfig {
            num_labels: 2,
            ..self.train.clone()
        }
        .validate()?;
        Ok(())
    }

    /// Applies `--seed`: every seeded stage takes the same value.
    pub fn override_seed(&mut self, seed: u64) {
        self.split_seed = seed;
        self.sampling_seed = seed;
        self.augment.seed = seed;
        self.train.seed = seed;
    }

    /// Effective configuration in the input format. Paths are absolute so
    /// the file re-executes the run from any directory.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let p = |p: &Path| abs(p).display().to_string();
        if let Some(x) = &self.corpus_path {
            kv("corpus.path", &p(x));
        }
        kv("corpus.lang", &self.corpus_lang);
        let join = |items: Vec<String>| items.join(", ");
        if !self.corpus_multilingual.is_empty() {
            kv(
                "corpus.multilingual",
                &join(self.corpus_multilingual.iter().map(|(l, x)| format!("{l}:{}", p(x))).collect()),
            );
        }
        if !self.corpus_extra.is_empty() {
            kv(
                "corpus.extra",
                &join(self.corpus_extra.iter().map(|(s, x)| format!("{s}:{}", p(x))).collect()),
            );
        }
        if let Some(x) = &self.corpus_test {
            kv("corpus.test", &p(x));
        }
        kv("split.ratio", &self.split_ratio);
        kv("split.seed", &self.split_seed);
        if let Some(b) = self.remove_urls {
            kv("preprocess.remove_urls", &b);
        }
        if let Some(b) = self.replace_mentions {
            kv("preprocess.replace_mentions", &b);
        }
        kv("preprocess.placeholder", &self.placeholder);
        kv("sampling.oversample", &self.oversample);
        kv("sampling.seed", &self.sampling_seed);
        kv("augment.enabled", &self.augment_enabled);
        kv("augment.mask_ratio", &self.augment.mask_ratio);
        kv("augment.backbone", &self.augment.backbone);
        kv("augment.seed", &self.augment.seed);
        kv("augment.max_length", &self.augment.generation_max_length);
        kv("augment.epochs", &self.augment.epochs);
        kv("augment.learning_rate", &self.augment.learning_rate);
        kv("augment.batch_size", &self.augment.batch_size);
        if let Some(x) = &self.augment_input {
            kv("augment.input", &p(x));
        }
        if let Some(x) = &self.augment_output {
            kv("augment.output", &p(x));
        }
        kv("train.backbone", &self.train.backbone);
        kv("train.epochs", &self.train.epochs);
        kv("train.learning_rate", &self.train.learning_rate);
        kv("train.batch_size", &self.train.batch_size);
        kv("train.max_seq_len", &self.train.max_seq_len);
        kv("train.weight_decay", &self.train.weight_decay);
        kv("train.seed", &self.train.seed);
        kv("train.members", &self.members);
        kv("ovr.pair_members", &self.pair_members);
        if let Some(x) = &self.gate_manifest {
            kv("ovr.gate_manifest", &p(x));
        }
        if let Some(x) = &self.predict_input {
            kv("predict.input", &p(x));
        }
        kv("predict.task", &self.predict_task.as_str());
        if let Some(x) = &self.predict_output {
            kv("predict.output", &p(x));
        }
        if let Some(x) = &self.evaluate_gold {
            kv("evaluate.gold", &p(x));
        }
        if let Some(x) = &self.evaluate_predictions {
            kv("evaluate.predictions", &p(x));
        }
        if let Some(t) = self.evaluate_task {
            kv("evaluate.task", &t.as_str());
        }
        kv("evaluate.name", &self.evaluate_name);
        if let Some(x) = &self.evaluate_output {
            kv("evaluate.output", &p(x));
        }
        s
    }
}

fn abs(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_training_regime() {
        let c = Config::parse_str("", Path::new("")).unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.learning_rate, 2e-5);
        assert_eq!(c.train.batch_size, 32);
        assert_eq!(c.train.max_seq_len, 64);
        assert_eq!(c.members, 5);
        assert_eq!(c.split_ratio, 0.8);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Config::parse_str("train.epoch = 3", Path::new("")).unwrap_err();
        assert!(err.to_string().contains("train.epoch"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn parses_lists_paths_and_comments() {
        let body = "# toy\ncorpus.path = a.csv\ncorpus.lang = mr\n\
                    corpus.multilingual = en:x/en.csv, hi:hi.csv\n\
                    corpus.extra = hatebase:hb.csv\ntrain.epochs = 4 \n";
        let c = Config::parse_str(body, Path::new("/cfg")).unwrap();
        assert_eq!(c.corpus_path, Some(PathBuf::from("/cfg/a.csv")));
        assert_eq!(c.corpus_lang, Lang::Mr);
        assert_eq!(c.corpus_multilingual[0], (Lang::En, PathBuf::from("/cfg/x/en.csv")));
        assert_eq!(c.corpus_extra, vec![(Source::Hatebase, PathBuf::from("/cfg/hb.csv"))]);
        assert_eq!(c.train.epochs, 4);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for body in ["split.ratio = 1.5", "train.epochs = x", "corpus.lang = de", "novalue"] {
            let err = Config::parse_str(body, Path::new("")).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{body}");
        }
    }

    #[test]
    fn render_round_trips() {
        let body = "corpus.path = /d/a.csv\nsampling.oversample = true\ntrain.members = 2\n\
                    preprocess.remove_urls = false\nevaluate.task = fine\n";
        let c = Config::parse_str(body, Path::new("")).unwrap();
        let again = Config::parse_str(&c.render(), Path::new("")).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn seed_override_reaches_every_stage() {
        let mut c = Config::default();
        c.override_seed(9);
        assert_eq!(
            (c.split_seed, c.sampling_seed, c.augment.seed, c.train.seed),
            (9, 9, 9, 9)
        );
    }
}
