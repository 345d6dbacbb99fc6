//! Fine-tuning a transformer text classifier and predicting with it.
//!
//! The head is a single linear layer over the first-token representation,
//! followed by a softmax. Training uses AdamW at a constant learning rate
//! with no warmup, no early stopping and no gradient clipping; the final
//! checkpoint is the state after the last epoch.
//!
//! Checkpoint directory layout:
//!
//! ```text
//! <run>/config        training configuration (JSON)
//! <run>/labels        ordered label scheme, one per line
//! <run>/log           one line per epoch
//! <run>/weights       safetensors
//! <run>/encoder.json  encoder architecture
//! <run>/vocab | <run>/tokenizer.json
//! ```

use std::fmt;
use std::fs;
use std::path::Path;

use candle_core::{Device, Module, Tensor, D};
use candle_nn::{linear, AdamW, Linear, Optimizer, ParamsAdamW, VarBuilder, VarMap};
use hof_core::{Classifier, Dataset, LabelScheme, ProbVector, TrainConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backbone::{self, BackboneSource, TextTokenizer};
use crate::bert::{dtype, Batch, BertEncoder, EncoderConfig, ForwardCtx};
use crate::error::{Error, Result};
use crate::init::seeded_init;

const HEAD: &str = "classifier";

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub examples: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} loss={} examples={} lr={} weight_decay={}",
            self.epoch, self.loss, self.examples, self.learning_rate, self.weight_decay
        )
    }
}

impl EpochLog {
    fn parse(line: &str) -> Option<Self> {
        let mut log = EpochLog {
            epoch: 0,
            loss: 0.0,
            examples: 0,
            learning_rate: 0.0,
            weight_decay: 0.0,
        };
        for field in line.split_whitespace() {
            let (k, v) = field.split_once('=')?;
            match k {
                "epoch" => log.epoch = v.parse().ok()?,
                "loss" => log.loss = v.parse().ok()?,
                "examples" => log.examples = v.parse().ok()?,
                "lr" => log.learning_rate = v.parse().ok()?,
                "weight_decay" => log.weight_decay = v.parse().ok()?,
                _ => {}
            }
        }
        Some(log)
    }
}

pub struct TextClassifier {
    varmap: VarMap,
    encoder: BertEncoder,
    head: Linear,
    tokenizer: TextTokenizer,
    config: TrainConfig,
    scheme: LabelScheme,
    log: Vec<EpochLog>,
    device: Device,
}

impl fmt::Debug for TextClassifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TextClassifier")
            .field("backbone", &self.config.backbone)
            .field("scheme", &self.scheme.names())
            .field("epochs_logged", &self.log.len())
            .finish()
    }
}

fn build(
    enc_cfg: &EncoderConfig,
    num_labels: usize,
    device: &Device,
) -> Result<(VarMap, BertEncoder, Linear)> {
    let varmap = VarMap::new();
    let vb = VarBuilder::from_varmap(&varmap, dtype(), device);
    let encoder = BertEncoder::new(enc_cfg, vb.clone())?;
    let head = linear(enc_cfg.hidden_size, num_labels, vb.pp(HEAD))?;
    Ok((varmap, encoder, head))
}

/// Fine-tunes `cfg.backbone` on `train` with the given label scheme.
pub fn train_classifier(
    train: &Dataset,
    cfg: &TrainConfig,
    scheme: &LabelScheme,
) -> Result<TextClassifier> {
    cfg.validate()?;
    if cfg.num_labels != scheme.len() {
        return Err(hof_core::Error::Config(format!(
            "num_labels = {} but the scheme has {} classes",
            cfg.num_labels,
            scheme.len()
        ))
        .into());
    }
    if train.is_empty() {
        return Err(hof_core::Error::Precondition("training set is empty".into()).into());
    }
    let targets: Vec<u32> = train
        .iter()
        .map(|ex| scheme.class_index(ex).map(|i| i as u32))
        .collect::<hof_core::Result<_>>()?;
    let texts = train.texts();

    let device = Device::Cpu;
    let source = backbone::resolve(&cfg.backbone)?;
    let (tokenizer, enc_cfg) = match &source {
        BackboneSource::Tiny => {
            let tok = TextTokenizer::build_word(&texts);
            let enc = EncoderConfig::tiny(tok.vocab_size(), cfg.max_seq_len);
            (tok, enc)
        }
        BackboneSource::Pretrained(dir) => (
            TextTokenizer::load_subword(&dir.join("tokenizer.json"))?,
            backbone::pretrained_config(dir)?,
        ),
    };
    let (varmap, encoder, head) = build(&enc_cfg, scheme.len(), &device)?;
    match &source {
        BackboneSource::Tiny => seeded_init(&varmap, cfg.seed, |_| true)?,
        BackboneSource::Pretrained(dir) => {
            // Pretrained files never contain the task head.
            backbone::load_pretrained_weights(&varmap, dir, |n| !n.starts_with(HEAD))?;
            seeded_init(&varmap, cfg.seed, |n| n.starts_with(HEAD))?;
        }
    }

    let mut model = TextClassifier {
        varmap,
        encoder,
        head,
        tokenizer,
        config: cfg.clone(),
        scheme: scheme.clone(),
        log: Vec::with_capacity(cfg.epochs),
        device,
    };
    model.fit(&texts, &targets)?;
    Ok(model)
}

impl TextClassifier {
    fn fit(&mut self, texts: &[String], targets: &[u32]) -> Result<()> {
        let cfg = self.config.clone();
        let params = ParamsAdamW {
            lr: cfg.learning_rate,
            weight_decay: cfg.weight_decay,
            ..ParamsAdamW::default()
        };
        let mut opt = AdamW::new(sorted_vars(&self.varmap), params)?;
        let mut order: Vec<usize> = (0..texts.len()).collect();
        let mut ctx = ForwardCtx::train(cfg.seed.wrapping_add(0x5eed));
        for epoch in 1..=cfg.epochs {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (epoch as u64).rotate_left(32));
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let batch_texts: Vec<String> = chunk.iter().map(|&i| texts[i].clone()).collect();
                let batch_targets: Vec<u32> = chunk.iter().map(|&i| targets[i]).collect();
                let logits = self.logits(&batch_texts, &mut ctx)?;
                let target = Tensor::new(batch_targets.as_slice(), &self.device)?;
                let loss = candle_nn::loss::cross_entropy(&logits, &target)?;
                opt.backward_step(&loss)?;
                loss_sum += loss.to_scalar::<f32>()? as f64 * chunk.len() as f64;
            }
            let entry = EpochLog {
                epoch,
                loss: loss_sum / texts.len() as f64,
                examples: texts.len(),
                learning_rate: cfg.learning_rate,
                weight_decay: cfg.weight_decay,
            };
            log::info!("{}: {entry}", cfg.backbone);
            self.log.push(entry);
        }
        Ok(())
    }

    fn logits(&self, texts: &[String], ctx: &mut ForwardCtx) -> Result<Tensor> {
        let seqs = self.tokenizer.encode_batch(texts, self.config.max_seq_len)?;
        let enc = self.encoder.config();
        let batch = Batch::new(&seqs, enc.pad_token_id, enc.position_offset, &self.device)?;
        let pooled = self.encoder.pooled(&batch, ctx)?;
        Ok(self.head.forward(&pooled)?)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn scheme(&self) -> &LabelScheme {
        &self.scheme
    }

    pub fn log(&self) -> &[EpochLog] {
        &self.log
    }

    /// Class probabilities, computed in chunks of the training batch size.
    pub fn predict(&self, texts: &[String]) -> Result<Vec<ProbVector>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.config.batch_size.max(1)) {
            let logits = self.logits(chunk, &mut ForwardCtx::eval())?;
            let probs = candle_nn::ops::softmax(&logits, D::Minus1)?.to_vec2::<f32>()?;
            for row in probs {
                out.push(normalized(&row, self.scheme.names())?);
            }
        }
        Ok(out)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let io = |p: &Path, e: std::io::Error| Error::checkpoint(p, e);
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let write = |name: &str, body: String| {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| io(&p, e))
        };
        write(
            "config",
            serde_json::to_string_pretty(&self.config).expect("config serializes"),
        )?;
        write("labels", self.scheme.names().join("\n") + "\n")?;
        write(
            "log",
            self.log.iter().map(|l| format!("{l}\n")).collect::<String>(),
        )?;
        write(
            "encoder.json",
            serde_json::to_string_pretty(self.encoder.config()).expect("encoder config serializes"),
        )?;
        self.tokenizer.save(dir)?;
        self.varmap.save(dir.join("weights"))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read_to_string(&p).map_err(|e| Error::checkpoint(&p, e))
        };
        let config: TrainConfig = serde_json::from_str(&read("config")?)
            .map_err(|e| Error::checkpoint(dir.join("config"), e))?;
        let labels: Vec<String> = read("labels")?.lines().map(str::to_owned).collect();
        let scheme = LabelScheme::from_names(&labels)?;
        let enc_cfg: EncoderConfig = serde_json::from_str(&read("encoder.json")?)
            .map_err(|e| Error::checkpoint(dir.join("encoder.json"), e))?;
        let log = read("log")?
            .lines()
            .map(|l| EpochLog::parse(l).ok_or_else(|| Error::checkpoint(dir.join("log"), l)))
            .collect::<Result<Vec<_>>>()?;
        let tokenizer = TextTokenizer::load(dir)?;
        let device = Device::Cpu;
        let (mut varmap, encoder, head) = build(&enc_cfg, scheme.len(), &device)?;
        let weights = dir.join("weights");
        if !weights.is_file() {
            return Err(Error::checkpoint(&weights, "missing"));
        }
        varmap
            .load(&weights)
            .map_err(|e| Error::checkpoint(&weights, e))?;
        Ok(Self {
            varmap,
            encoder,
            head,
            tokenizer,
            config,
            scheme,
            log,
            device,
        })
    }
}

/// Variables in name order, so optimizer state never depends on hashing.
pub(crate) fn sorted_vars(varmap: &VarMap) -> Vec<candle_core::Var> {
    let data = varmap.data().lock().expect("varmap lock");
    let mut named: Vec<_> = data.iter().collect();
    named.sort_by(|a, b| a.0.cmp(b.0));
    named.into_iter().map(|(_, v)| v.clone()).collect()
}

/// Widens to f64 and renormalizes so the vector sums to one.
fn normalized(row: &[f32], names: &[String]) -> hof_core::Result<ProbVector> {
    let sum: f64 = row.iter().map(|&p| p as f64).sum();
    let probs = row.iter().map(|&p| (p as f64 / sum).clamp(0.0, 1.0)).collect();
    ProbVector::new(probs, names.to_vec())
}

impl Classifier for TextClassifier {
    fn class_names(&self) -> &[String] {
        self.scheme.names()
    }

    fn predict_proba(&self, texts: &[String]) -> hof_core::Result<Vec<ProbVector>> {
        Ok(self.predict(texts)?)
    }
}

/// Writes the member checkpoint paths of an ensemble, one per line,
/// relative to the manifest's directory.
pub fn write_manifest(path: &Path, members: &[impl AsRef<Path>]) -> Result<()> {
    let base = path.parent().unwrap_or(Path::new(""));
    let body: String = members
        .iter()
        .map(|m| {
            let m = m.as_ref();
            let rel = m.strip_prefix(base).unwrap_or(m);
            format!("{}\n", rel.display())
        })
        .collect();
    fs::write(path, body).map_err(|e| Error::checkpoint(path, e))
}

/// Reads an ensemble manifest back into absolute member paths.
pub fn read_manifest(path: &Path) -> Result<Vec<std::path::PathBuf>> {
    let body = fs::read_to_string(path).map_err(|e| Error::checkpoint(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let members: Vec<_> = body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect();
    if members.is_empty() {
        return Err(Error::checkpoint(path, "manifest lists no members"));
    }
    Ok(members)
}

pub fn load_ensemble(manifest: &Path) -> Result<hof_core::ensemble::Ensemble<TextClassifier>> {
    let members = read_manifest(manifest)?
        .iter()
        .map(|p| TextClassifier::load(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(hof_core::ensemble::Ensemble::new(members)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hof_core::{BinaryLabel, LabeledExample, Lang, Source, SplitTag};

    pub(crate) fn toy_corpus(n: usize) -> Dataset {
        let calm = ["lovely", "sunny", "friends", "coffee", "garden", "music"];
        let rude = ["idiot", "stupid", "trash", "disgusting", "loser", "pathetic"];
        let examples = (0..n)
            .map(|i| {
                let hof = i % 2 == 1;
                let words = if hof { &rude } else { &calm };
                let text = format!(
                    "the {} and {} today {}",
                    words[i % 6],
                    words[(i / 2 + 1) % 6],
                    i % 7
                );
                let label = if hof { BinaryLabel::Hof } else { BinaryLabel::Not };
                LabeledExample::new(format!("id{i}"), text, Lang::En, Some(label), None).unwrap()
            })
            .collect();
        Dataset::new(examples, Source::Hasoc2021, SplitTag::Train).unwrap()
    }

    pub(crate) fn toy_config(seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: 5e-3,
            batch_size: 8,
            ..TrainConfig::new("tiny").with_seed(seed)
        }
    }

    fn accuracy(model: &TextClassifier, data: &Dataset) -> f64 {
        let probs = model.predict(&data.texts()).unwrap();
        let hits = probs
            .iter()
            .zip(data.iter())
            .filter(|(p, ex)| p.argmax() == model.scheme().class_index(ex).unwrap())
            .count();
        hits as f64 / data.len() as f64
    }

    #[test]
    fn learns_separable_toy_corpus() {
        let data = toy_corpus(64);
        let model = train_classifier(&data, &toy_config(1), &LabelScheme::binary()).unwrap();
        assert!(accuracy(&model, &data) >= 0.9);
        let log = model.log();
        assert_eq!(log.len(), 3);
        assert!(log[2].loss < log[0].loss, "{log:?}");
    }

    #[test]
    fn probabilities_are_normalized_and_stable() {
        let data = toy_corpus(16);
        let model = train_classifier(&data, &toy_config(2), &LabelScheme::binary()).unwrap();
        let text = vec!["the idiot and trash today".to_string(); 2];
        let p = model.predict(&text).unwrap();
        assert_eq!(p[0], p[1]);
        assert!((p[0].probs().iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_model() {
        let data = toy_corpus(16);
        let a = train_classifier(&data, &toy_config(3), &LabelScheme::binary()).unwrap();
        let b = train_classifier(&data, &toy_config(3), &LabelScheme::binary()).unwrap();
        assert_eq!(a.predict(&data.texts()).unwrap(), b.predict(&data.texts()).unwrap());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let data = toy_corpus(16);
        let model = train_classifier(&data, &toy_config(4), &LabelScheme::binary()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let run = dir.path().join("member-0");
        model.save(&run).unwrap();
        for f in ["config", "labels", "log", "weights", "encoder.json", "vocab"] {
            assert!(run.join(f).is_file(), "{f}");
        }
        let back = TextClassifier::load(&run).unwrap();
        assert_eq!(back.config(), model.config());
        assert_eq!(back.log(), model.log());
        assert_eq!(back.predict(&data.texts()).unwrap(), model.predict(&data.texts()).unwrap());

        let manifest = dir.path().join("ensemble.manifest");
        write_manifest(&manifest, &[&run]).unwrap();
        assert_eq!(read_manifest(&manifest).unwrap(), vec![run]);
        assert!(load_ensemble(&manifest).is_ok());
    }

    #[test]
    fn missing_checkpoint_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(TextClassifier::load(&dir.path().join("nope")).is_err());
    }

    #[test]
    fn rejects_rows_without_the_needed_label() {
        let data = toy_corpus(8);
        let cfg = TrainConfig {
            num_labels: 4,
            ..toy_config(0)
        };
        let err = train_classifier(&data, &cfg, &LabelScheme::fine()).unwrap_err();
        assert!(err.to_string().contains("id0"), "{err}");
    }

    #[test]
    fn unknown_backbone_is_named() {
        let cfg = TrainConfig::new("no-such/model");
        let err = train_classifier(&toy_corpus(4), &cfg, &LabelScheme::binary()).unwrap_err();
        assert!(err.to_string().contains("no-such/model"));
    }

    /// A miniature Hugging Face BERT directory: config, word-level
    /// tokenizer and safetensors weights.
    fn fake_pretrained(dir: &Path) {
        let words = [
            "[PAD]", "[UNK]", "[CLS]", "[SEP]", "the", "and", "today", "lovely", "sunny",
            "friends", "coffee", "garden", "music", "idiot", "stupid", "trash", "disgusting",
            "loser", "pathetic",
        ];
        let cfg = EncoderConfig {
            vocab_size: words.len(),
            hidden_size: 16,
            num_layers: 1,
            num_heads: 2,
            intermediate_size: 32,
            max_positions: 32,
            type_vocab_size: 2,
            layer_norm_eps: 1e-12,
            pad_token_id: 0,
            position_offset: 0,
            hidden_dropout: 0.1,
            attention_dropout: 0.1,
        };
        fs::write(
            dir.join("config.json"),
            serde_json::json!({
                "model_type": "bert",
                "vocab_size": cfg.vocab_size,
                "hidden_size": cfg.hidden_size,
                "num_hidden_layers": cfg.num_layers,
                "num_attention_heads": cfg.num_heads,
                "intermediate_size": cfg.intermediate_size,
                "max_position_embeddings": cfg.max_positions,
                "type_vocab_size": cfg.type_vocab_size,
                "hidden_act": "gelu",
                "hidden_dropout_prob": 0.1,
                "attention_probs_dropout_prob": 0.1,
            })
            .to_string(),
        )
        .unwrap();
        let vocab: serde_json::Map<String, serde_json::Value> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.to_string(), serde_json::json!(i)))
            .collect();
        let tokenizer = serde_json::json!({
            "version": "1.0",
            "truncation": null,
            "padding": null,
            "added_tokens": [],
            "normalizer": {"type": "Lowercase"},
            "pre_tokenizer": {"type": "Whitespace"},
            "post_processor": {
                "type": "TemplateProcessing",
                "single": [{"SpecialToken": {"id": "[CLS]", "type_id": 0}}, {"Sequence": {"id": "A", "type_id": 0}}],
                "pair": [{"SpecialToken": {"id": "[CLS]", "type_id": 0}}, {"Sequence": {"id": "A", "type_id": 0}}, {"Sequence": {"id": "B", "type_id": 1}}],
                "special_tokens": {"[CLS]": {"id": "[CLS]", "ids": [2], "tokens": ["[CLS]"]}}
            },
            "decoder": null,
            "model": {"type": "WordLevel", "vocab": vocab, "unk_token": "[UNK]"}
        });
        fs::write(dir.join("tokenizer.json"), tokenizer.to_string()).unwrap();

        // Weights stored under the `bert.` prefix with legacy norm names.
        let varmap = VarMap::new();
        let vb = VarBuilder::from_varmap(&varmap, dtype(), &Device::Cpu);
        BertEncoder::new(&cfg, vb).unwrap();
        seeded_init(&varmap, 99, |_| true).unwrap();
        let data = varmap.data().lock().unwrap();
        let tensors: std::collections::HashMap<String, Tensor> = data
            .iter()
            .map(|(k, v)| {
                let k = k.replace("LayerNorm.weight", "LayerNorm.gamma").replace("LayerNorm.bias", "LayerNorm.beta");
                (format!("bert.{k}"), v.as_tensor().clone())
            })
            .collect();
        candle_core::safetensors::save(&tensors, dir.join("model.safetensors")).unwrap();
    }

    #[test]
    fn fine_tunes_a_local_pretrained_directory() {
        let dir = tempfile::tempdir().unwrap();
        fake_pretrained(dir.path());
        let data = toy_corpus(32);
        let cfg = TrainConfig {
            epochs: 10,
            ..toy_config(5)
        };
        let cfg = TrainConfig {
            backbone: dir.path().to_str().unwrap().to_owned(),
            ..cfg
        };
        let model = train_classifier(&data, &cfg, &LabelScheme::binary()).unwrap();
        assert!(accuracy(&model, &data) >= 0.9);
        let run = dir.path().join("run");
        model.save(&run).unwrap();
        assert!(run.join("tokenizer.json").is_file());
        let back = TextClassifier::load(&run).unwrap();
        assert_eq!(back.predict(&data.texts()).unwrap(), model.predict(&data.texts()).unwrap());
    }
}
