//! Masked-span denoiser used for augmentation: an encoder reads the masked
//! text, a causal decoder regenerates the full text.
//!
//! Only the in-process `tiny-seq2seq` backbone is available. It is trained
//! from scratch on the training texts with the same masking used at
//! generation time, then decodes greedily.

use std::fmt;
use std::fs;
use std::path::Path;

use candle_core::{Device, Module, Tensor, D};
use candle_nn::{linear, AdamW, Linear, Optimizer, ParamsAdamW, VarBuilder, VarMap};
use hof_core::augment::{example_seed, mask_tokens_with, AugmentConfig, Denoiser, MASK_TOKEN};
use hof_core::Dataset;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backbone::KNOWN_BACKBONES;
use crate::bert::{
    causal_bias, dtype, Attention, Batch, BertEncoder, Embeddings, EncoderConfig, FeedForward,
    ForwardCtx, ResidualOutput,
};
use crate::classifier::sorted_vars;
use crate::error::{Error, Result};
use crate::init::seeded_init;
use crate::vocab::{WordVocab, BOS, EOS, PAD};

pub const TINY_SEQ2SEQ: &str = "tiny-seq2seq";

/// Pretrained denoisers that cannot be run in-process.
const HUB_DENOISERS: &[&str] = &["facebook/bart-base", "facebook/bart-large"];

const VOCAB_LIMIT: usize = 30_000;

struct DecoderLayer {
    self_attention: Attention,
    self_output: ResidualOutput,
    cross_attention: Attention,
    cross_output: ResidualOutput,
    ffn: FeedForward,
}

impl DecoderLayer {
    fn new(cfg: &EncoderConfig, vb: VarBuilder) -> Result<Self> {
        let (h, eps, drop) = (cfg.hidden_size, cfg.layer_norm_eps, cfg.hidden_dropout);
        Ok(Self {
            self_attention: Attention::new(h, cfg.num_heads, cfg.attention_dropout, vb.pp("self_attention"))?,
            self_output: ResidualOutput::new(h, h, eps, drop, vb.pp("self_output"))?,
            cross_attention: Attention::new(h, cfg.num_heads, cfg.attention_dropout, vb.pp("cross_attention"))?,
            cross_output: ResidualOutput::new(h, h, eps, drop, vb.pp("cross_output"))?,
            ffn: FeedForward::new(cfg, vb)?,
        })
    }

    fn forward(
        &self,
        x: &Tensor,
        memory: &Tensor,
        self_bias: &Tensor,
        memory_bias: &Tensor,
        ctx: &mut ForwardCtx,
    ) -> Result<Tensor> {
        let a = self.self_attention.forward(x, x, Some(self_bias), ctx)?;
        let x = self.self_output.forward(&a, x, ctx)?;
        let c = self.cross_attention.forward(&x, memory, Some(memory_bias), ctx)?;
        let x = self.cross_output.forward(&c, &x, ctx)?;
        self.ffn.forward(&x, ctx)
    }
}

pub struct Seq2SeqDenoiser {
    varmap: VarMap,
    encoder: BertEncoder,
    embeddings: Embeddings,
    layers: Vec<DecoderLayer>,
    lm_head: Linear,
    vocab: WordVocab,
    arch: EncoderConfig,
    config: AugmentConfig,
    losses: Vec<f64>,
    device: Device,
}

impl fmt::Debug for Seq2SeqDenoiser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Seq2SeqDenoiser")
            .field("vocab", &self.vocab.len())
            .field("epochs_logged", &self.losses.len())
            .finish()
    }
}

fn check_backbone(id: &str) -> Result<()> {
    if id == TINY_SEQ2SEQ {
        Ok(())
    } else if HUB_DENOISERS.contains(&id) || KNOWN_BACKBONES.contains(&id) {
        Err(Error::BackboneUnavailable {
            id: id.to_owned(),
            reason: format!("only `{TINY_SEQ2SEQ}` can be trained in-process"),
        })
    } else {
        Err(Error::UnknownBackbone(id.to_owned()))
    }
}

fn architecture(vocab_size: usize, max_len: usize) -> EncoderConfig {
    // Room for the start symbol and the end symbol.
    EncoderConfig::tiny(vocab_size, max_len + 2)
}

/// Trains the denoiser on `train`'s texts.
pub fn fit_denoiser(train: &Dataset, cfg: &AugmentConfig) -> Result<Seq2SeqDenoiser> {
    cfg.validate()?;
    check_backbone(&cfg.backbone)?;
    let texts: Vec<(String, String)> = train
        .iter()
        .filter(|ex| !ex.text.trim().is_empty())
        .map(|ex| (ex.id.clone(), ex.text.clone()))
        .collect();
    if texts.is_empty() {
        return Err(hof_core::Error::Precondition("no texts to train the denoiser on".into()).into());
    }
    let vocab = WordVocab::build(texts.iter().map(|(_, t)| t.as_str()), VOCAB_LIMIT);
    let arch = architecture(vocab.len(), cfg.generation_max_length);
    let mut model = Seq2SeqDenoiser::build(vocab, arch, cfg.clone())?;
    seeded_init(&model.varmap, cfg.seed, |_| true)?;
    model.fit(&texts)?;
    Ok(model)
}

impl Seq2SeqDenoiser {
    fn build(vocab: WordVocab, arch: EncoderConfig, config: AugmentConfig) -> Result<Self> {
        let device = Device::Cpu;
        let varmap = VarMap::new();
        let vb = VarBuilder::from_varmap(&varmap, dtype(), &device);
        let encoder = BertEncoder::new(&arch, vb.pp("encoder"))?;
        let dec = vb.pp("decoder");
        let embeddings = Embeddings::new(&arch, dec.pp("embeddings"))?;
        let layers = (0..arch.num_layers)
            .map(|i| DecoderLayer::new(&arch, dec.pp("layer").pp(i)))
            .collect::<Result<_>>()?;
        let lm_head = linear(arch.hidden_size, arch.vocab_size, vb.pp("lm_head"))?;
        Ok(Self {
            varmap,
            encoder,
            embeddings,
            layers,
            lm_head,
            vocab,
            arch,
            config,
            losses: Vec::new(),
            device,
        })
    }

    fn encode_inputs(&self, masked: &[String], ctx: &mut ForwardCtx) -> Result<(Tensor, Tensor)> {
        let max = self.config.generation_max_length;
        let seqs: Vec<Vec<u32>> = masked.iter().map(|t| self.vocab.encode(t, max, false)).collect();
        let batch = Batch::new(&seqs, self.arch.pad_token_id, 0, &self.device)?;
        let memory = self.encoder.forward(&batch, ctx)?;
        Ok((memory, batch.key_bias()?))
    }

    fn decode_step(
        &self,
        prefix: &[Vec<u32>],
        memory: &Tensor,
        memory_bias: &Tensor,
        ctx: &mut ForwardCtx,
    ) -> Result<Tensor> {
        let batch = Batch::new(prefix, self.arch.pad_token_id, 0, &self.device)?;
        let (_, t) = batch.ids.dims2()?;
        let bias = causal_bias(t, &self.device)?.broadcast_add(&batch.key_bias()?)?;
        let mut x = self.embeddings.forward(&batch, ctx)?;
        for layer in &self.layers {
            x = layer.forward(&x, memory, &bias, memory_bias, ctx)?;
        }
        Ok(self.lm_head.forward(&x)?)
    }

    fn fit(&mut self, texts: &[(String, String)]) -> Result<()> {
        let cfg = self.config.clone();
        let params = ParamsAdamW {
            lr: cfg.learning_rate,
            ..ParamsAdamW::default()
        };
        let mut opt = AdamW::new(sorted_vars(&self.varmap), params)?;
        let (bos, eos, pad) = (self.vocab.id(BOS), self.vocab.id(EOS), self.vocab.id(PAD));
        let max = cfg.generation_max_length;
        let mut order: Vec<usize> = (0..texts.len()).collect();
        let mut ctx = ForwardCtx::train(cfg.seed.wrapping_add(0x5eed));
        for epoch in 1..=cfg.epochs {
            let epoch_seed = cfg.seed ^ (epoch as u64).rotate_left(32);
            let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed);
            order.shuffle(&mut rng);
            let (mut loss_sum, mut batches) = (0.0, 0usize);
            for chunk in order.chunks(cfg.batch_size) {
                let mut masked = Vec::with_capacity(chunk.len());
                let mut inputs = Vec::with_capacity(chunk.len());
                let mut targets = Vec::with_capacity(chunk.len());
                for &i in chunk {
                    let (id, text) = &texts[i];
                    let seed = example_seed(epoch_seed, id);
                    masked.push(mask_tokens_with(text, cfg.mask_ratio, seed, MASK_TOKEN)?);
                    let ids = self.vocab.encode(text, max, false);
                    inputs.push(std::iter::once(bos).chain(ids.iter().copied()).collect::<Vec<_>>());
                    targets.push(ids.into_iter().chain(std::iter::once(eos)).collect::<Vec<_>>());
                }
                let (memory, memory_bias) = self.encode_inputs(&masked, &mut ctx)?;
                let logits = self.decode_step(&inputs, &memory, &memory_bias, &mut ctx)?;
                let target = Batch::new(&targets, pad, 0, &self.device)?;
                let logp = candle_nn::ops::log_softmax(&logits, D::Minus1)?;
                let picked = logp.gather(&target.ids.unsqueeze(2)?, 2)?.squeeze(2)?;
                let loss = (picked.mul(&target.mask)?.sum_all()?.neg()?
                    / target.lengths.iter().sum::<usize>() as f64)?;
                opt.backward_step(&loss)?;
                loss_sum += loss.to_scalar::<f32>()? as f64;
                batches += 1;
            }
            let mean = loss_sum / batches as f64;
            log::info!("denoiser epoch={epoch} loss={mean:.6}");
            self.losses.push(mean);
        }
        Ok(())
    }

    /// Mean token loss of each training epoch.
    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.config
    }

    /// Greedy decoding, at most `generation_max_length` tokens per output.
    pub fn generate(&self, masked: &[String]) -> Result<Vec<Option<String>>> {
        let mut out = Vec::with_capacity(masked.len());
        let (bos, eos) = (self.vocab.id(BOS), self.vocab.id(EOS));
        for chunk in masked.chunks(self.config.batch_size) {
            let mut ctx = ForwardCtx::eval();
            let (memory, memory_bias) = self.encode_inputs(chunk, &mut ctx)?;
            let mut prefix: Vec<Vec<u32>> = vec![vec![bos]; chunk.len()];
            let mut done = vec![false; chunk.len()];
            for _ in 0..self.config.generation_max_length {
                let logits = self.decode_step(&prefix, &memory, &memory_bias, &mut ctx)?;
                let t = prefix[0].len();
                let next = logits.narrow(1, t - 1, 1)?.squeeze(1)?.argmax(D::Minus1)?.to_vec1::<u32>()?;
                for (i, tok) in next.into_iter().enumerate() {
                    if done[i] || tok == eos {
                        done[i] = true;
                        prefix[i].push(eos);
                    } else {
                        prefix[i].push(tok);
                    }
                }
                if done.iter().all(|&d| d) {
                    break;
                }
            }
            for p in prefix {
                let body: Vec<u32> = p[1..].iter().copied().take_while(|&t| t != eos).collect();
                let text = self.vocab.decode(&body);
                out.push(if text.trim().is_empty() { None } else { Some(text) });
            }
        }
        Ok(out)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::checkpoint(dir, e))?;
        let write = |name: &str, body: String| {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::checkpoint(&p, e))
        };
        write("config", serde_json::to_string_pretty(&self.config).expect("config serializes"))?;
        write("encoder.json", serde_json::to_string_pretty(&self.arch).expect("arch serializes"))?;
        write(
            "log",
            self.losses
                .iter()
                .enumerate()
                .map(|(i, l)| format!("epoch={} loss={l}\n", i + 1))
                .collect(),
        )?;
        self.vocab.save(&dir.join("vocab"))?;
        self.varmap.save(dir.join("weights"))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read_to_string(&p).map_err(|e| Error::checkpoint(&p, e))
        };
        let config: AugmentConfig = serde_json::from_str(&read("config")?)
            .map_err(|e| Error::checkpoint(dir.join("config"), e))?;
        let arch: EncoderConfig = serde_json::from_str(&read("encoder.json")?)
            .map_err(|e| Error::checkpoint(dir.join("encoder.json"), e))?;
        let vocab = WordVocab::load(&dir.join("vocab"))?;
        let losses = read("log")?
            .lines()
            .filter_map(|l| l.split("loss=").nth(1)?.parse().ok())
            .collect();
        let mut model = Self::build(vocab, arch, config)?;
        model.losses = losses;
        let weights = dir.join("weights");
        if !weights.is_file() {
            return Err(Error::checkpoint(&weights, "missing"));
        }
        model
            .varmap
            .load(&weights)
            .map_err(|e| Error::checkpoint(&weights, e))?;
        Ok(model)
    }
}

impl Denoiser for Seq2SeqDenoiser {
    fn mask_token(&self) -> &str {
        MASK_TOKEN
    }

    fn reconstruct(&self, masked: &[String]) -> hof_core::Result<Vec<Option<String>>> {
        Ok(self.generate(masked)?)
    }
}
