//! Subcommand bodies. Every command reads its inputs from, and writes its
//! outputs to, a run directory:
//!
//! ```text
//! <run>/data/{train,train_original,val,extra,test}.csv   prepare
//! <run>/data/synthetic.csv, synthetic.failures           prepare/augment
//! <run>/models/member-<i>/, ensemble.manifest             train
//! <run>/models/gate/, <pair>/, priors, ovr.manifest       train-ovr
//! <run>/predictions.csv                                   predict
//! <run>/reports/<name>.{txt,tsv}                          train, evaluate
//! <run>/<command>.manifest                                every command
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hof_core::corpus::{
    self, class_counts, load_hasoc2021, load_texts, merge, split_train_val, write_dataset,
    CorpusSpec,
};
use hof_core::ensemble::Ensemble;
use hof_core::evalreport::{confusion_matrix, macro_metrics, report, Metrics};
use hof_core::finegrained::{predict_fine, ClassPriors, Pair, PairModels};
use hof_core::preprocess::{clean_dataset, PreprocessPolicy};
use hof_core::sampling::oversample_balanced;
use hof_core::{
    augment, Classifier, Dataset, LabelField, LabelScheme, LabeledExample, Lang, Source, SplitTag,
    TrainConfig,
};
use hof_nn::classifier::{read_manifest, write_manifest};
use hof_nn::{fit_denoiser, load_ensemble, train_classifier, TextClassifier};

use crate::config::{Config, Task};
use crate::error::{CliError, Result};

/// Paths inside a run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn data(&self, name: &str) -> PathBuf {
        self.root.join("data").join(name)
    }

    pub fn models(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn ensemble_manifest(&self) -> PathBuf {
        self.models().join("ensemble.manifest")
    }

    pub fn ovr_manifest(&self) -> PathBuf {
        self.models().join("ovr.manifest")
    }

    pub fn predictions(&self) -> PathBuf {
        self.root.join("predictions.csv")
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(name)
    }
}

fn mkdirs(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| hof_core::Error::io(dir, e).into())
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        mkdirs(parent)?;
    }
    fs::write(path, body).map_err(|e| hof_core::Error::io(path, e).into())
}

fn require(what: &'static str, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::missing(what, path))
    }
}

/// Effective config plus `# key: value` notes on what the command produced.
fn write_manifest_file(run: &RunDir, command: &str, cfg: &Config, notes: &[(String, String)]) -> Result<()> {
    let mut body = format!("# hof {command}\n");
    body.push_str(&cfg.render());
    for (k, v) in notes {
        let _ = writeln!(body, "# {k}: {v}");
    }
    write_file(&run.root.join(format!("{command}.manifest")), &body)
}

fn policy_for(cfg: &Config, lang: Lang) -> Result<PreprocessPolicy> {
    // Marathi text goes in raw unless the config says otherwise.
    let default_on = lang != Lang::Mr;
    Ok(PreprocessPolicy::new(
        cfg.remove_urls.unwrap_or(default_on),
        cfg.replace_mentions.unwrap_or(default_on),
        cfg.placeholder.clone(),
    )?)
}

fn load_unified(path: &Path, lang: Lang, what: &'static str) -> Result<Dataset> {
    require(what, path)?;
    Ok(load_hasoc2021(path, lang)?)
}

fn with_id_prefix(d: Dataset, prefix: &str) -> Result<Dataset> {
    let source = d.source();
    let examples = d
        .into_examples()
        .into_iter()
        .map(|ex| LabeledExample {
            id: format!("{prefix}:{}", ex.id),
            ..ex
        })
        .collect();
    Ok(Dataset::new(examples, source, SplitTag::None)?)
}

fn load_corpus(cfg: &Config) -> Result<Dataset> {
    let mut parts = Vec::new();
    if let Some(path) = &cfg.corpus_path {
        parts.push((cfg.corpus_lang, load_unified(path, cfg.corpus_lang, "corpus file")?));
    }
    for (lang, path) in &cfg.corpus_multilingual {
        parts.push((*lang, load_unified(path, *lang, "corpus file")?));
    }
    if parts.is_empty() {
        return Err(CliError::Config(
            "set corpus.path or corpus.multilingual".into(),
        ));
    }
    let cleaned: Vec<(Lang, Dataset)> = parts
        .into_iter()
        .map(|(lang, d)| Ok((lang, clean_dataset(&d, &policy_for(cfg, lang)?))))
        .collect::<Result<_>>()?;
    if cleaned.len() == 1 {
        return Ok(cleaned.into_iter().next().expect("one part").1);
    }
    let tagged = cleaned
        .into_iter()
        .map(|(lang, d)| with_id_prefix(d, lang.as_str()))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(&tagged)?)
}

fn load_extras(cfg: &Config) -> Result<Option<Dataset>> {
    if cfg.corpus_extra.is_empty() {
        return Ok(None);
    }
    let parts = cfg
        .corpus_extra
        .iter()
        .map(|(source, path)| {
            require("extra corpus file", path)?;
            // The external corpora are English.
            let d = corpus::load_external(&CorpusSpec::external(*source, path, Lang::En)?)?;
            Ok(clean_dataset(&d, &policy_for(cfg, Lang::En)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(merge(&parts)?))
}

fn load_test(cfg: &Config, path: &Path) -> Result<Dataset> {
    require("test file", path)?;
    let d = match load_hasoc2021(path, cfg.corpus_lang) {
        Ok(d) => d,
        // Unlabeled test files only need id and text.
        Err(hof_core::Error::MissingColumn { .. }) => {
            let examples = load_texts(path)?
                .into_iter()
                .map(|(id, text)| LabeledExample::new(id, text, cfg.corpus_lang, None, None))
                .collect::<hof_core::Result<Vec<_>>>()?;
            Dataset::new(examples, Source::Hasoc2021, SplitTag::Test)?
        }
        Err(e) => return Err(e.into()),
    };
    Ok(clean_dataset(&d, &policy_for(cfg, cfg.corpus_lang)?))
}

fn counts_note(d: &Dataset, field: LabelField) -> String {
    match class_counts(d, field) {
        Ok(c) => c
            .iter()
            .map(|(l, n)| format!("{l}={n}"))
            .collect::<Vec<_>>()
            .join(" "),
        Err(_) => "unlabeled rows present".into(),
    }
}

/// Fits the denoiser on `train`, saves it and returns the synthetic rows.
fn run_augmentation(cfg: &Config, run: &RunDir, train: &Dataset) -> Result<(Dataset, Vec<String>)> {
    log::info!("augment: fitting {} on {} texts", cfg.augment.backbone, train.len());
    let model = fit_denoiser(train, &cfg.augment)?;
    model.save(&run.models().join("denoiser"))?;
    let out = augment::generate_synthetic(train, &model, &cfg.augment)?;
    if !out.failures.is_empty() {
        log::warn!("augment: {} generation failures", out.failures.len());
    }
    Ok((out.dataset, out.failures))
}

fn write_failures(path: &Path, failures: &[String]) -> Result<()> {
    let body: String = failures.iter().map(|id| format!("{id}\n")).collect();
    write_file(path, &body)
}

pub fn prepare(cfg: &Config, run: &RunDir) -> Result<()> {
    mkdirs(&run.data(""))?;
    let full = load_corpus(cfg)?;
    let (train, val) = split_train_val(&full, cfg.split_ratio, cfg.split_seed)?;
    write_dataset(&train, run.data("train_original.csv"))?;
    write_dataset(&val, run.data("val.csv"))?;
    let mut notes = vec![
        ("rows.corpus".into(), full.len().to_string()),
        ("rows.train_original".into(), train.len().to_string()),
        ("rows.val".into(), val.len().to_string()),
    ];

    let mut parts = vec![train.clone()];
    if cfg.augment_enabled {
        let (synthetic, failures) = run_augmentation(cfg, run, &train)?;
        write_dataset(&synthetic, run.data("synthetic.csv"))?;
        write_failures(&run.data("synthetic.failures"), &failures)?;
        notes.push(("rows.synthetic".into(), synthetic.len().to_string()));
        notes.push(("augment.failures".into(), failures.len().to_string()));
        parts.push(synthetic);
    }
    if let Some(extra) = load_extras(cfg)? {
        write_dataset(&extra, run.data("extra.csv"))?;
        notes.push(("rows.extra".into(), extra.len().to_string()));
        parts.push(extra);
    }
    let mut final_train = if parts.len() == 1 {
        train
    } else {
        merge(&parts)?.with_split(SplitTag::Train)
    };
    if cfg.oversample {
        final_train = oversample_balanced(&final_train, cfg.sampling_seed)?;
    }
    write_dataset(&final_train, run.data("train.csv"))?;
    notes.push(("rows.train".into(), final_train.len().to_string()));
    notes.push(("counts.train".into(), counts_note(&final_train, LabelField::Binary)));

    if let Some(path) = &cfg.corpus_test {
        let test = load_test(cfg, path)?;
        write_dataset(&test, run.data("test.csv"))?;
        notes.push(("rows.test".into(), test.len().to_string()));
    }
    log::info!("prepare: train {} / val {}", final_train.len(), val.len());
    write_manifest_file(run, "prepare", cfg, &notes)
}

pub fn augment_cmd(cfg: &Config, run: &RunDir) -> Result<()> {
    let input = cfg
        .augment_input
        .clone()
        .unwrap_or_else(|| run.data("train_original.csv"));
    let output = cfg
        .augment_output
        .clone()
        .unwrap_or_else(|| run.data("synthetic.csv"));
    let train = load_unified(&input, cfg.corpus_lang, "augmentation input")?;
    let (synthetic, failures) = run_augmentation(cfg, run, &train)?;
    if let Some(parent) = output.parent() {
        mkdirs(parent)?;
    }
    write_dataset(&synthetic, &output)?;
    write_failures(&output.with_extension("failures"), &failures)?;
    write_manifest_file(
        run,
        "augment",
        cfg,
        &[
            ("input".into(), input.display().to_string()),
            ("output".into(), output.display().to_string()),
            ("rows.synthetic".into(), synthetic.len().to_string()),
            ("augment.failures".into(), failures.len().to_string()),
        ],
    )
}

/// Trains `k` members with seeds `seed, seed+1, ...` into `dir/member-<i>`
/// and writes `dir/ensemble.manifest`.
fn train_members(
    train: &Dataset,
    base: &TrainConfig,
    scheme: &LabelScheme,
    k: usize,
    dir: &Path,
) -> Result<Ensemble<TextClassifier>> {
    mkdirs(dir)?;
    let mut members = Vec::with_capacity(k);
    let mut paths = Vec::with_capacity(k);
    for i in 0..k {
        let cfg = TrainConfig {
            num_labels: scheme.len(),
            ..base.clone().with_seed(base.seed.wrapping_add(i as u64))
        };
        log::info!("train: member {i} of {k} ({}, seed {})", cfg.backbone, cfg.seed);
        let model = train_classifier(train, &cfg, scheme)?;
        let path = dir.join(format!("member-{i}"));
        model.save(&path)?;
        members.push(model);
        paths.push(path);
    }
    write_manifest(&dir.join("ensemble.manifest"), &paths)?;
    Ok(Ensemble::new(members)?)
}

fn gold_labels(d: &Dataset, scheme: &LabelScheme) -> Result<Vec<String>> {
    let missing: Vec<String> = d
        .iter()
        .filter(|ex| scheme.raw_label(ex).is_none())
        .map(|ex| ex.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(hof_core::Error::MissingLabels(missing).into());
    }
    Ok(d.iter()
        .map(|ex| scheme.raw_label(ex).expect("checked").to_owned())
        .collect())
}

fn score(gold: &[String], pred: &[String], scheme: &LabelScheme) -> Result<Metrics> {
    Ok(macro_metrics(&confusion_matrix(gold, pred, scheme.names())?))
}

fn emit_report(run: &RunDir, name: &str, base: Option<&Path>, metrics: Metrics) -> Result<String> {
    let r = report(&[(name, metrics)]);
    let base = base.map(Path::to_owned).unwrap_or_else(|| run.report(name));
    write_file(&base.with_extension("txt"), &r.table)?;
    write_file(&base.with_extension("tsv"), &r.tsv)?;
    print!("{}", r.table);
    Ok(r.table)
}

pub fn train(cfg: &Config, run: &RunDir) -> Result<Metrics> {
    let train = load_unified(&run.data("train.csv"), cfg.corpus_lang, "prepared training data")?;
    let val = load_unified(&run.data("val.csv"), cfg.corpus_lang, "prepared validation data")?;
    let scheme = LabelScheme::binary();
    let ensemble = train_members(&train, &cfg.train, &scheme, cfg.members, &run.models())?;
    let probs = ensemble.predict_proba(&val.texts())?;
    let pred: Vec<String> = probs.iter().map(|p| p.top_label().to_owned()).collect();
    let metrics = score(&gold_labels(&val, &scheme)?, &pred, &scheme)?;
    emit_report(run, "validation", None, metrics)?;
    write_manifest_file(
        run,
        "train",
        cfg,
        &[
            ("members".into(), cfg.members.to_string()),
            ("manifest".into(), run.ensemble_manifest().display().to_string()),
            ("validation.f1".into(), metrics.f1.to_string()),
        ],
    )?;
    Ok(metrics)
}

/// Gate, pairwise ensembles and priors of a trained fine-grained system.
pub struct FineSystem {
    pub gate: Ensemble<TextClassifier>,
    pub pairs: PairModels<Ensemble<TextClassifier>>,
    pub priors: ClassPriors,
}

fn write_priors(path: &Path, p: &ClassPriors) -> Result<()> {
    let body: String = hof_core::FineLabel::HARMFUL
        .iter()
        .map(|l| format!("{l}\t{}\n", p.count(*l)))
        .collect();
    write_file(path, &body)
}

fn read_priors(path: &Path) -> Result<ClassPriors> {
    require("priors file", path)?;
    let body = fs::read_to_string(path).map_err(|e| hof_core::Error::io(path, e))?;
    let mut counts = HashMap::new();
    for line in body.lines().filter(|l| !l.trim().is_empty()) {
        let (label, n) = line
            .split_once('\t')
            .ok_or_else(|| CliError::Config(format!("{}: malformed line `{line}`", path.display())))?;
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{}: bad count `{n}`", path.display())))?;
        counts.insert(label.trim().to_owned(), n);
    }
    let get = |l: &str| counts.get(l).copied().unwrap_or(0);
    Ok(ClassPriors::new(get("HATE"), get("OFFN"), get("PRFN"))?)
}

fn relative(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).display().to_string()
}

pub fn train_ovr(cfg: &Config, run: &RunDir) -> Result<Option<Metrics>> {
    let models = run.models();
    let gate_manifest = match &cfg.gate_manifest {
        Some(path) => {
            require("gate manifest", path)?;
            path.clone()
        }
        None => {
            let train = load_unified(&run.data("train.csv"), cfg.corpus_lang, "prepared training data")?;
            let dir = models.join("gate");
            train_members(&train, &cfg.train, &LabelScheme::binary(), cfg.members, &dir)?;
            dir.join("ensemble.manifest")
        }
    };

    let original = load_unified(
        &run.data("train_original.csv"),
        cfg.corpus_lang,
        "prepared training data",
    )?;
    let extra_path = run.data("extra.csv");
    let extra = if extra_path.is_file() {
        Some(load_hasoc2021(&extra_path, Lang::En)?)
    } else {
        None
    };
    let mut pair_manifests = Vec::new();
    for pair in Pair::ALL {
        let rows = hof_core::finegrained::pair_dataset(pair, &original, extra.as_ref())?;
        let dir = models.join(pair.slug());
        train_members(&rows, &cfg.train, &pair.scheme(), cfg.pair_members, &dir)?;
        pair_manifests.push((pair, dir.join("ensemble.manifest")));
    }
    let priors = ClassPriors::from_dataset(&original)?;
    write_priors(&models.join("priors"), &priors)?;

    let mut body = format!("gate = {}\n", relative(&models, &gate_manifest));
    for (pair, path) in &pair_manifests {
        let _ = writeln!(body, "{} = {}", pair.slug(), relative(&models, path));
    }
    body.push_str("priors = priors\n");
    write_file(&run.ovr_manifest(), &body)?;

    let val = load_unified(&run.data("val.csv"), cfg.corpus_lang, "prepared validation data")?;
    let metrics = if val.iter().all(|ex| ex.label_fine.is_some()) && !val.is_empty() {
        let system = load_fine_system(&run.ovr_manifest())?;
        let decisions = predict_fine(&system.gate, &system.pairs, &system.priors, &val.texts())?;
        let pred: Vec<String> = decisions.iter().map(|d| d.resolved.to_string()).collect();
        let scheme = LabelScheme::fine();
        let m = score(&gold_labels(&val, &scheme)?, &pred, &scheme)?;
        emit_report(run, "validation-fine", None, m)?;
        Some(m)
    } else {
        log::warn!("train-ovr: validation rows lack fine labels; skipping evaluation");
        None
    };
    write_manifest_file(
        run,
        "train-ovr",
        cfg,
        &[
            ("manifest".into(), run.ovr_manifest().display().to_string()),
            ("pair_members".into(), cfg.pair_members.to_string()),
        ],
    )?;
    Ok(metrics)
}

pub fn load_fine_system(manifest: &Path) -> Result<FineSystem> {
    require("fine-grained manifest", manifest)?;
    let body = fs::read_to_string(manifest).map_err(|e| hof_core::Error::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let mut entries = HashMap::new();
    for line in body.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{}: malformed line `{line}`", manifest.display()))
        })?;
        entries.insert(k.trim().to_owned(), base.join(v.trim()));
    }
    let entry = |k: &str| {
        entries.get(k).cloned().ok_or_else(|| {
            CliError::Config(format!("{}: no `{k}` entry", manifest.display()))
        })
    };
    let ensemble = |p: PathBuf| -> Result<Ensemble<TextClassifier>> {
        require("ensemble manifest", &p)?;
        Ok(load_ensemble(&p)?)
    };
    Ok(FineSystem {
        gate: ensemble(entry("gate")?)?,
        pairs: PairModels::try_from_fn(|pair| {
            let p = entry(pair.slug()).map_err(|e| hof_core::Error::Config(e.to_string()))?;
            ensemble(p).map_err(|e| match e {
                CliError::Core(c) => c,
                other => hof_core::Error::model(other.to_string()),
            })
        })?,
        priors: read_priors(&entry("priors")?)?,
    })
}

fn write_predictions(path: &Path, ids: &[String], labels: &[String]) -> Result<()> {
    if let Some(parent) = path.parent() {
        mkdirs(parent)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|source| hof_core::Error::Csv {
        path: path.to_owned(),
        source,
    })?;
    let err = |source| hof_core::Error::Csv {
        path: path.to_owned(),
        source,
    };
    w.write_record(["id", "label"]).map_err(err)?;
    for (id, label) in ids.iter().zip(labels) {
        w.write_record([id, label]).map_err(err)?;
    }
    w.flush().map_err(|e| hof_core::Error::io(path, e))?;
    Ok(())
}

pub fn predict(cfg: &Config, run: &RunDir) -> Result<PathBuf> {
    let input = cfg.predict_input.clone().unwrap_or_else(|| run.data("test.csv"));
    require("prediction input", &input)?;
    let rows = load_texts(&input)?;
    let policy = policy_for(cfg, cfg.corpus_lang)?;
    let ids: Vec<String> = rows.iter().map(|(id, _)| id.clone()).collect();
    // Prepared files are already clean; cleaning is idempotent.
    let texts: Vec<String> = rows
        .iter()
        .map(|(_, t)| hof_core::preprocess::clean(t, &policy))
        .collect();
    let output = cfg.predict_output.clone().unwrap_or_else(|| run.predictions());
    let labels: Vec<String> = match cfg.predict_task {
        Task::Binary => {
            let manifest = run.ensemble_manifest();
            require("ensemble manifest", &manifest)?;
            let ensemble = load_ensemble(&manifest)?;
            ensemble
                .predict_proba(&texts)?
                .iter()
                .map(|p| p.top_label().to_owned())
                .collect()
        }
        Task::Fine => {
            let system = load_fine_system(&run.ovr_manifest())?;
            let decisions = predict_fine(&system.gate, &system.pairs, &system.priors, &texts)?;
            let mut log = String::from("id\tgate\thate_vs_prfn\thate_vs_offn\toffn_vs_prfn\tresolved\ttie_broken\n");
            let opt = |l: Option<hof_core::FineLabel>| l.map_or("-".to_owned(), |l| l.to_string());
            for (id, d) in ids.iter().zip(&decisions) {
                let _ = writeln!(
                    log,
                    "{id}\t{}\t{}\t{}\t{}\t{}\t{}",
                    d.gate,
                    opt(d.pair_hp),
                    opt(d.pair_ho),
                    opt(d.pair_op),
                    d.resolved,
                    d.tie_broken
                );
            }
            write_file(&output.with_extension("decisions.tsv"), &log)?;
            decisions.iter().map(|d| d.resolved.to_string()).collect()
        }
    };
    write_predictions(&output, &ids, &labels)?;
    write_manifest_file(
        run,
        "predict",
        cfg,
        &[
            ("input".into(), input.display().to_string()),
            ("output".into(), output.display().to_string()),
            ("rows".into(), ids.len().to_string()),
        ],
    )?;
    Ok(output)
}

fn read_predictions(path: &Path) -> Result<HashMap<String, String>> {
    require("predictions file", path)?;
    let mut out = HashMap::new();
    for (id, label) in load_label_rows(path)? {
        if out.insert(id.clone(), label).is_some() {
            return Err(hof_core::Error::DuplicateId(id).into());
        }
    }
    Ok(out)
}

fn load_label_rows(path: &Path) -> Result<Vec<(String, String)>> {
    let err = |source| hof_core::Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let headers = r.headers().map_err(err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| hof_core::Error::MissingColumn {
                path: path.to_owned(),
                column: name.to_owned(),
            })
    };
    let (id_col, label_col) = (col("id")?, col("label")?);
    r.records()
        .map(|rec| {
            let rec = rec.map_err(err)?;
            Ok((
                rec.get(id_col).unwrap_or("").trim().to_owned(),
                rec.get(label_col).unwrap_or("").trim().to_owned(),
            ))
        })
        .collect()
}

pub fn evaluate(cfg: &Config, run: &RunDir) -> Result<Metrics> {
    let gold_path = cfg.evaluate_gold.clone().unwrap_or_else(|| run.data("val.csv"));
    let pred_path = cfg
        .evaluate_predictions
        .clone()
        .unwrap_or_else(|| run.predictions());
    let task = cfg.evaluate_task.unwrap_or(cfg.predict_task);
    let scheme = match task {
        Task::Binary => LabelScheme::binary(),
        Task::Fine => LabelScheme::fine(),
    };
    let gold_set = load_unified(&gold_path, cfg.corpus_lang, "gold file")?;
    let gold = gold_labels(&gold_set, &scheme)?;
    let preds = read_predictions(&pred_path)?;
    let pred = gold_set
        .iter()
        .map(|ex| {
            preds.get(&ex.id).cloned().ok_or_else(|| {
                hof_core::Error::InvalidRow {
                    id: ex.id.clone(),
                    reason: format!("no prediction in {}", pred_path.display()),
                }
                .into()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let metrics = score(&gold, &pred, &scheme)?;
    emit_report(run, &cfg.evaluate_name, cfg.evaluate_output.as_deref(), metrics)?;
    write_manifest_file(
        run,
        "evaluate",
        cfg,
        &[
            ("gold".into(), gold_path.display().to_string()),
            ("predictions".into(), pred_path.display().to_string()),
            ("f1".into(), metrics.f1.to_string()),
        ],
    )?;
    Ok(metrics)
}

/// Member checkpoint paths of a binary ensemble run.
pub fn members(run: &RunDir) -> Result<Vec<PathBuf>> {
    Ok(read_manifest(&run.ensemble_manifest())?)
}
