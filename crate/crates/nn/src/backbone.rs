//! Backbone resolution: identifier → encoder architecture, tokenizer and
//! (for pretrained models) weights.
//!
//! `tiny` names a small randomly initialized encoder with a word-level
//! vocabulary built from the training texts. Any other identifier must
//! resolve to a local Hugging Face model directory holding `config.json`,
//! `tokenizer.json` and `model.safetensors`, either given directly as a
//! path or found under `$HOF_MODEL_DIR/<identifier>`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use candle_core::{Device, Tensor};
use candle_nn::VarMap;
use serde::Deserialize;
use tokenizers::{PaddingParams, Tokenizer, TruncationParams};

use crate::bert::EncoderConfig;
use crate::error::{Error, Result};
use crate::vocab::WordVocab;

pub const TINY: &str = "tiny";

/// Environment variable naming the directory that holds pretrained models.
pub const MODEL_DIR_ENV: &str = "HOF_MODEL_DIR";

/// Backbones evaluated for this task, in their hub spelling.
pub const KNOWN_BACKBONES: &[&str] = &[
    "bert-base-uncased",
    "vinai/bertweet-base",
    "cardiffnlp/twitter-roberta-base-hate",
    "sentence-transformers/LaBSE",
    "xlm-roberta-base",
];

const WORD_VOCAB_LIMIT: usize = 30_000;

#[derive(Debug, Clone, PartialEq)]
pub enum BackboneSource {
    Tiny,
    Pretrained(PathBuf),
}

pub fn resolve(id: &str) -> Result<BackboneSource> {
    if id == TINY {
        return Ok(BackboneSource::Tiny);
    }
    let direct = Path::new(id);
    if direct.join("config.json").is_file() {
        return Ok(BackboneSource::Pretrained(direct.to_owned()));
    }
    let root = std::env::var_os(MODEL_DIR_ENV).map(PathBuf::from);
    if let Some(root) = &root {
        let dir = root.join(id);
        if dir.join("config.json").is_file() {
            return Ok(BackboneSource::Pretrained(dir));
        }
    }
    if KNOWN_BACKBONES.contains(&id) {
        return Err(Error::BackboneUnavailable {
            id: id.to_owned(),
            reason: match root {
                Some(r) => format!("no model directory at {}", r.join(id).display()),
                None => format!("set {MODEL_DIR_ENV} to a directory containing `{id}/`"),
            },
        });
    }
    Err(Error::UnknownBackbone(id.to_owned()))
}

#[derive(Deserialize)]
struct HfConfig {
    #[serde(default)]
    model_type: Option<String>,
    vocab_size: usize,
    hidden_size: usize,
    num_hidden_layers: usize,
    num_attention_heads: usize,
    intermediate_size: usize,
    max_position_embeddings: usize,
    #[serde(default = "one")]
    type_vocab_size: usize,
    #[serde(default = "default_eps")]
    layer_norm_eps: f64,
    #[serde(default)]
    pad_token_id: Option<u32>,
    #[serde(default)]
    hidden_act: Option<String>,
    #[serde(default)]
    hidden_dropout_prob: f64,
    #[serde(default)]
    attention_probs_dropout_prob: f64,
}

fn one() -> usize {
    1
}

fn default_eps() -> f64 {
    1e-12
}

pub fn model_type(dir: &Path) -> Result<String> {
    Ok(read_hf_config(dir)?.model_type.unwrap_or_else(|| "bert".into()))
}

fn read_hf_config(dir: &Path) -> Result<HfConfig> {
    let path = dir.join("config.json");
    let body = std::fs::read_to_string(&path).map_err(|e| Error::checkpoint(&path, e))?;
    serde_json::from_str(&body).map_err(|e| Error::checkpoint(&path, e))
}

/// Encoder architecture of a pretrained model directory.
pub fn pretrained_config(dir: &Path) -> Result<EncoderConfig> {
    let hf = read_hf_config(dir)?;
    let kind = hf.model_type.as_deref().unwrap_or("bert");
    let roberta_like = matches!(kind, "roberta" | "xlm-roberta" | "bertweet" | "camembert");
    if !roberta_like && kind != "bert" {
        return Err(Error::BackboneUnavailable {
            id: dir.display().to_string(),
            reason: format!("unsupported model_type `{kind}`"),
        });
    }
    if let Some(act) = hf.hidden_act.as_deref().filter(|a| *a != "gelu") {
        return Err(Error::BackboneUnavailable {
            id: dir.display().to_string(),
            reason: format!("unsupported activation `{act}`"),
        });
    }
    let pad = hf.pad_token_id.unwrap_or(if roberta_like { 1 } else { 0 });
    Ok(EncoderConfig {
        vocab_size: hf.vocab_size,
        hidden_size: hf.hidden_size,
        num_layers: hf.num_hidden_layers,
        num_heads: hf.num_attention_heads,
        intermediate_size: hf.intermediate_size,
        max_positions: hf.max_position_embeddings,
        type_vocab_size: hf.type_vocab_size,
        layer_norm_eps: hf.layer_norm_eps,
        pad_token_id: pad,
        position_offset: if roberta_like { pad as usize + 1 } else { 0 },
        hidden_dropout: hf.hidden_dropout_prob,
        attention_dropout: hf.attention_probs_dropout_prob,
    })
}

/// Copies pretrained tensors into every variable accepted by `select`.
/// Checkpoint keys may carry a model prefix (`bert.`, `roberta.`) and old
/// BERT layer norms use `gamma`/`beta`.
pub fn load_pretrained_weights(
    varmap: &VarMap,
    dir: &Path,
    select: impl Fn(&str) -> bool,
) -> Result<()> {
    let path = dir.join("model.safetensors");
    if !path.is_file() {
        return Err(Error::checkpoint(&path, "missing (only safetensors weights are supported)"));
    }
    let tensors: HashMap<String, Tensor> = candle_core::safetensors::load(&path, &Device::Cpu)?;
    let data = varmap.data().lock().expect("varmap lock");
    let mut names: Vec<&String> = data.keys().filter(|n| select(n)).collect();
    names.sort();
    for local in names {
        let var = &data[local];
        let found = candidates(local)
            .into_iter()
            .find_map(|k| tensors.get(&k))
            .ok_or_else(|| Error::checkpoint(&path, format!("no tensor for `{local}`")))?;
        if found.dims() != var.dims() {
            return Err(Error::checkpoint(
                &path,
                format!("`{local}` has shape {:?}, expected {:?}", found.dims(), var.dims()),
            ));
        }
        var.set(&found.to_dtype(var.dtype())?)?;
    }
    Ok(())
}

fn candidates(local: &str) -> Vec<String> {
    let mut names = vec![local.to_owned()];
    if let Some(stem) = local.strip_suffix("LayerNorm.weight") {
        names.push(format!("{stem}LayerNorm.gamma"));
    } else if let Some(stem) = local.strip_suffix("LayerNorm.bias") {
        names.push(format!("{stem}LayerNorm.beta"));
    }
    let mut out = Vec::new();
    for prefix in ["", "bert.", "roberta.", "model."] {
        out.extend(names.iter().map(|n| format!("{prefix}{n}")));
    }
    out
}

/// Text → token ids, for either kind of backbone.
#[derive(Clone)]
pub enum TextTokenizer {
    Word(WordVocab),
    Subword(Box<Tokenizer>),
}

impl TextTokenizer {
    pub fn build_word(texts: &[String]) -> Self {
        TextTokenizer::Word(WordVocab::build(
            texts.iter().map(String::as_str),
            WORD_VOCAB_LIMIT,
        ))
    }

    pub fn load_subword(path: &Path) -> Result<Self> {
        let mut tok = Tokenizer::from_file(path)
            .map_err(|e| Error::Tokenizer(format!("{}: {e}", path.display())))?;
        tok.with_padding(None::<PaddingParams>);
        Ok(TextTokenizer::Subword(Box::new(tok)))
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            TextTokenizer::Word(v) => v.len(),
            TextTokenizer::Subword(t) => t.get_vocab_size(true),
        }
    }

    /// Encodes with the classification token first, truncating to `max_len`.
    pub fn encode_batch(&self, texts: &[String], max_len: usize) -> Result<Vec<Vec<u32>>> {
        match self {
            TextTokenizer::Word(v) => Ok(texts.iter().map(|t| v.encode(t, max_len, true)).collect()),
            TextTokenizer::Subword(tok) => {
                let mut tok = tok.as_ref().clone();
                tok.with_truncation(Some(TruncationParams {
                    max_length: max_len,
                    ..Default::default()
                }))
                .map_err(|e| Error::Tokenizer(e.to_string()))?;
                let enc = tok
                    .encode_batch(texts.to_vec(), true)
                    .map_err(|e| Error::Tokenizer(e.to_string()))?;
                Ok(enc.into_iter().map(|e| e.get_ids().to_vec()).collect())
            }
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        match self {
            TextTokenizer::Word(v) => v.save(&dir.join("vocab")),
            TextTokenizer::Subword(t) => {
                let path = dir.join("tokenizer.json");
                t.save(&path, false)
                    .map_err(|e| Error::checkpoint(&path, e))
            }
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let vocab = dir.join("vocab");
        if vocab.is_file() {
            return Ok(TextTokenizer::Word(WordVocab::load(&vocab)?));
        }
        Self::load_subword(&dir.join("tokenizer.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_and_unknown() {
        assert_eq!(resolve("tiny").unwrap(), BackboneSource::Tiny);
        assert!(matches!(
            resolve("definitely/not-a-model"),
            Err(Error::UnknownBackbone(id)) if id == "definitely/not-a-model"
        ));
    }

    #[test]
    fn directory_path_resolves() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("config.json"), "{}").unwrap();
        let id = dir.path().to_str().unwrap();
        assert_eq!(resolve(id).unwrap(), BackboneSource::Pretrained(dir.path().to_owned()));
    }

    #[test]
    fn roberta_config_gets_offset() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("config.json"),
            r#"{"model_type":"roberta","vocab_size":50,"hidden_size":8,"num_hidden_layers":1,
                "num_attention_heads":2,"intermediate_size":16,"max_position_embeddings":20,
                "pad_token_id":1,"hidden_act":"gelu","hidden_dropout_prob":0.1}"#,
        )
        .unwrap();
        let c = pretrained_config(dir.path()).unwrap();
        assert_eq!((c.pad_token_id, c.position_offset), (1, 2));
        assert_eq!(c.hidden_dropout, 0.1);
    }

    #[test]
    fn key_candidates_cover_prefixes_and_legacy_norms() {
        let c = candidates("embeddings.LayerNorm.weight");
        assert!(c.contains(&"bert.embeddings.LayerNorm.gamma".to_string()));
        assert!(c.contains(&"roberta.embeddings.LayerNorm.weight".to_string()));
    }
}
