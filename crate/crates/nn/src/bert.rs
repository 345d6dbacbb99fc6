//! BERT-family transformer encoder built from differentiable candle ops.
//!
//! Parameter names follow the Hugging Face layout (`embeddings.*`,
//! `encoder.layer.N.attention.self.query.weight`, ...) so pretrained
//! BERT, RoBERTa and XLM-R checkpoints load by name. RoBERTa-style models
//! differ only in their position-id offset.

use candle_core::{DType, Device, Module, Tensor, D};
use candle_nn::{embedding, linear, Embedding, Init, Linear, VarBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Additive attention bias for masked positions.
const MASKED: f64 = -1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub intermediate_size: usize,
    pub max_positions: usize,
    pub type_vocab_size: usize,
    pub layer_norm_eps: f64,
    pub pad_token_id: u32,
    /// First position id of a real token: 0 for BERT, `pad + 1` for RoBERTa.
    pub position_offset: usize,
    pub hidden_dropout: f64,
    pub attention_dropout: f64,
}

impl EncoderConfig {
    /// Two-layer, 32-wide encoder for desk-scale runs.
    pub fn tiny(vocab_size: usize, max_positions: usize) -> Self {
        Self {
            vocab_size,
            hidden_size: 32,
            num_layers: 2,
            num_heads: 4,
            intermediate_size: 64,
            max_positions,
            type_vocab_size: 1,
            layer_norm_eps: 1e-12,
            pad_token_id: 0,
            position_offset: 0,
            hidden_dropout: 0.0,
            attention_dropout: 0.0,
        }
    }
}

/// Training-time state threaded through a forward pass.
pub struct ForwardCtx {
    dropout_rng: Option<ChaCha8Rng>,
}

impl ForwardCtx {
    pub fn eval() -> Self {
        Self { dropout_rng: None }
    }

    pub fn train(seed: u64) -> Self {
        Self {
            dropout_rng: Some(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn is_train(&self) -> bool {
        self.dropout_rng.is_some()
    }

    /// Inverted dropout with a seeded mask; identity at eval time or p = 0.
    pub fn dropout(&mut self, x: &Tensor, p: f64) -> Result<Tensor> {
        let Some(rng) = self.dropout_rng.as_mut() else {
            return Ok(x.clone());
        };
        if p <= 0.0 {
            return Ok(x.clone());
        }
        let keep = 1.0 / (1.0 - p) as f32;
        let mask: Vec<f32> = (0..x.elem_count())
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let mask = Tensor::from_vec(mask, x.shape(), x.device())?;
        Ok(x.mul(&mask)?)
    }
}

pub(crate) struct LayerNorm {
    weight: Tensor,
    bias: Tensor,
    eps: f64,
}

impl LayerNorm {
    pub(crate) fn new(size: usize, eps: f64, vb: VarBuilder) -> Result<Self> {
        Ok(Self {
            weight: vb.get_with_hints(size, "weight", Init::Const(1.0))?,
            bias: vb.get_with_hints(size, "bias", Init::Const(0.0))?,
            eps,
        })
    }

    pub(crate) fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mean = x.mean_keepdim(D::Minus1)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        Ok(normed.broadcast_mul(&self.weight)?.broadcast_add(&self.bias)?)
    }
}

/// Multi-head scaled dot-product attention (projections only; the output
/// dense layer belongs to the caller).
pub(crate) struct Attention {
    query: Linear,
    key: Linear,
    value: Linear,
    heads: usize,
    head_dim: usize,
    dropout: f64,
}

impl Attention {
    pub(crate) fn new(hidden: usize, heads: usize, dropout: f64, vb: VarBuilder) -> Result<Self> {
        assert!(hidden.is_multiple_of(heads), "hidden size must divide into heads");
        Ok(Self {
            query: linear(hidden, hidden, vb.pp("query"))?,
            key: linear(hidden, hidden, vb.pp("key"))?,
            value: linear(hidden, hidden, vb.pp("value"))?,
            heads,
            head_dim: hidden / heads,
            dropout,
        })
    }

    fn split_heads(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t, _) = x.dims3()?;
        Ok(x.reshape((b, t, self.heads, self.head_dim))?
            .transpose(1, 2)?
            .contiguous()?)
    }

    /// `bias` is added to the (batch, heads, query, key) score tensor.
    pub(crate) fn forward(
        &self,
        queries: &Tensor,
        keys: &Tensor,
        bias: Option<&Tensor>,
        ctx: &mut ForwardCtx,
    ) -> Result<Tensor> {
        let (b, tq, hidden) = queries.dims3()?;
        let q = self.split_heads(&self.query.forward(queries)?)?;
        let k = self.split_heads(&self.key.forward(keys)?)?;
        let v = self.split_heads(&self.value.forward(keys)?)?;
        let scores = (q.matmul(&k.t()?.contiguous()?)? / (self.head_dim as f64).sqrt())?;
        let scores = match bias {
            Some(bias) => scores.broadcast_add(bias)?,
            None => scores,
        };
        let probs = candle_nn::ops::softmax(&scores, D::Minus1)?;
        let probs = ctx.dropout(&probs, self.dropout)?;
        let out = probs.matmul(&v)?.transpose(1, 2)?.contiguous()?;
        Ok(out.reshape((b, tq, hidden))?)
    }
}

/// Dense projection, dropout, residual connection and layer norm.
pub(crate) struct ResidualOutput {
    dense: Linear,
    norm: LayerNorm,
    dropout: f64,
}

impl ResidualOutput {
    pub(crate) fn new(
        input: usize,
        hidden: usize,
        eps: f64,
        dropout: f64,
        vb: VarBuilder,
    ) -> Result<Self> {
        Ok(Self {
            dense: linear(input, hidden, vb.pp("dense"))?,
            norm: LayerNorm::new(hidden, eps, vb.pp("LayerNorm"))?,
            dropout,
        })
    }

    pub(crate) fn forward(&self, x: &Tensor, residual: &Tensor, ctx: &mut ForwardCtx) -> Result<Tensor> {
        let h = ctx.dropout(&self.dense.forward(x)?, self.dropout)?;
        self.norm.forward(&(h + residual)?)
    }
}

/// Position-wise feed-forward block with GELU.
pub(crate) struct FeedForward {
    intermediate: Linear,
    output: ResidualOutput,
}

impl FeedForward {
    pub(crate) fn new(cfg: &EncoderConfig, vb: VarBuilder) -> Result<Self> {
        Ok(Self {
            intermediate: linear(
                cfg.hidden_size,
                cfg.intermediate_size,
                vb.pp("intermediate").pp("dense"),
            )?,
            output: ResidualOutput::new(
                cfg.intermediate_size,
                cfg.hidden_size,
                cfg.layer_norm_eps,
                cfg.hidden_dropout,
                vb.pp("output"),
            )?,
        })
    }

    pub(crate) fn forward(&self, x: &Tensor, ctx: &mut ForwardCtx) -> Result<Tensor> {
        let h = self.intermediate.forward(x)?.gelu_erf()?;
        self.output.forward(&h, x, ctx)
    }
}

struct EncoderLayer {
    attention: Attention,
    attention_output: ResidualOutput,
    ffn: FeedForward,
}

impl EncoderLayer {
    fn new(cfg: &EncoderConfig, vb: VarBuilder) -> Result<Self> {
        let att = vb.pp("attention");
        Ok(Self {
            attention: Attention::new(
                cfg.hidden_size,
                cfg.num_heads,
                cfg.attention_dropout,
                att.pp("self"),
            )?,
            attention_output: ResidualOutput::new(
                cfg.hidden_size,
                cfg.hidden_size,
                cfg.layer_norm_eps,
                cfg.hidden_dropout,
                att.pp("output"),
            )?,
            ffn: FeedForward::new(cfg, vb)?,
        })
    }

    fn forward(&self, x: &Tensor, bias: &Tensor, ctx: &mut ForwardCtx) -> Result<Tensor> {
        let a = self.attention.forward(x, x, Some(bias), ctx)?;
        let x = self.attention_output.forward(&a, x, ctx)?;
        self.ffn.forward(&x, ctx)
    }
}

pub(crate) struct Embeddings {
    word: Embedding,
    position: Embedding,
    token_type: Embedding,
    norm: LayerNorm,
    dropout: f64,
}

impl Embeddings {
    pub(crate) fn new(cfg: &EncoderConfig, vb: VarBuilder) -> Result<Self> {
        Ok(Self {
            word: embedding(cfg.vocab_size, cfg.hidden_size, vb.pp("word_embeddings"))?,
            position: embedding(cfg.max_positions, cfg.hidden_size, vb.pp("position_embeddings"))?,
            token_type: embedding(
                cfg.type_vocab_size.max(1),
                cfg.hidden_size,
                vb.pp("token_type_embeddings"),
            )?,
            norm: LayerNorm::new(cfg.hidden_size, cfg.layer_norm_eps, vb.pp("LayerNorm"))?,
            dropout: cfg.hidden_dropout,
        })
    }

    pub(crate) fn forward(&self, batch: &Batch, ctx: &mut ForwardCtx) -> Result<Tensor> {
        let types = batch.ids.zeros_like()?;
        let x = self
            .word
            .forward(&batch.ids)?
            .add(&self.position.forward(&batch.positions)?)?
            .broadcast_add(&self.token_type.forward(&types)?)?;
        ctx.dropout(&self.norm.forward(&x)?, self.dropout)
    }
}

/// A right-padded batch of token id sequences.
pub struct Batch {
    pub ids: Tensor,
    /// 1.0 for real tokens, 0.0 for padding; shape (batch, time).
    pub mask: Tensor,
    pub positions: Tensor,
    pub lengths: Vec<usize>,
}

impl Batch {
    pub fn new(seqs: &[Vec<u32>], pad: u32, position_offset: usize, device: &Device) -> Result<Self> {
        let b = seqs.len();
        let t = seqs.iter().map(Vec::len).max().unwrap_or(0).max(1);
        let mut ids = Vec::with_capacity(b * t);
        let mut mask = Vec::with_capacity(b * t);
        let mut positions = Vec::with_capacity(b * t);
        for s in seqs {
            for i in 0..t {
                let real = i < s.len();
                ids.push(if real { s[i] } else { pad });
                mask.push(if real { 1.0f32 } else { 0.0 });
                // RoBERTa-style models give padding the pad id as position.
                let pos = match (real, position_offset) {
                    (true, off) => (i + off) as u32,
                    (false, 0) => i as u32,
                    (false, _) => pad,
                };
                positions.push(pos);
            }
        }
        Ok(Self {
            ids: Tensor::from_vec(ids, (b, t), device)?,
            mask: Tensor::from_vec(mask, (b, t), device)?,
            positions: Tensor::from_vec(positions, (b, t), device)?,
            lengths: seqs.iter().map(Vec::len).collect(),
        })
    }

    /// Additive attention bias of shape (batch, 1, 1, time).
    pub fn key_bias(&self) -> Result<Tensor> {
        let (b, t) = self.mask.dims2()?;
        Ok(((self.mask.ones_like()? - &self.mask)? * MASKED)?.reshape((b, 1, 1, t))?)
    }
}

/// Additive causal bias of shape (1, 1, t, t).
pub(crate) fn causal_bias(t: usize, device: &Device) -> Result<Tensor> {
    let v: Vec<f32> = (0..t)
        .flat_map(|i| (0..t).map(move |j| if j > i { MASKED as f32 } else { 0.0 }))
        .collect();
    Ok(Tensor::from_vec(v, (1, 1, t, t), device)?)
}

pub struct BertEncoder {
    embeddings: Embeddings,
    layers: Vec<EncoderLayer>,
    cfg: EncoderConfig,
}

impl BertEncoder {
    pub fn new(cfg: &EncoderConfig, vb: VarBuilder) -> Result<Self> {
        let embeddings = Embeddings::new(cfg, vb.pp("embeddings"))?;
        let layers = (0..cfg.num_layers)
            .map(|i| EncoderLayer::new(cfg, vb.pp("encoder").pp("layer").pp(i)))
            .collect::<Result<_>>()?;
        Ok(Self {
            embeddings,
            layers,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    /// Hidden states of shape (batch, time, hidden).
    pub fn forward(&self, batch: &Batch, ctx: &mut ForwardCtx) -> Result<Tensor> {
        let bias = batch.key_bias()?;
        let mut x = self.embeddings.forward(batch, ctx)?;
        for layer in &self.layers {
            x = layer.forward(&x, &bias, ctx)?;
        }
        Ok(x)
    }

    /// Hidden state of the first token (the classification token).
    pub fn pooled(&self, batch: &Batch, ctx: &mut ForwardCtx) -> Result<Tensor> {
        Ok(self.forward(batch, ctx)?.narrow(1, 0, 1)?.squeeze(1)?)
    }
}

pub(crate) fn dtype() -> DType {
    DType::F32
}
