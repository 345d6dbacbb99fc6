//! Denoising augmentation: mask a share of each text's words, have a
//! sequence-to-sequence model reconstruct it, keep the reconstruction as a
//! new labeled example.
//!
//! The model itself lives behind [`Denoiser`]; this module owns masking and
//! the construction of the synthetic dataset.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Dataset, LabeledExample, Source};
use crate::error::{Error, Result};

/// Mask symbol of the BART family.
pub const MASK_TOKEN: &str = "<mask>";

/// Suffix appended to a source id to form the synthetic example's id.
pub const SYNTHETIC_MARKER: &str = "~syn";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub mask_ratio: f64,
    pub backbone: String,
    pub generation_max_length: usize,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            mask_ratio: 0.40,
            backbone: "tiny-seq2seq".to_owned(),
            generation_max_length: 64,
            seed: 0,
            epochs: 3,
            learning_rate: 2e-5,
            batch_size: 32,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_ratio > 0.0 && self.mask_ratio < 1.0) {
            return Err(Error::Config(format!(
                "augment.mask_ratio must lie in (0, 1), got {}",
                self.mask_ratio
            )));
        }
        if self.generation_max_length == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "augment lengths, epochs and batch size must be positive".into(),
            ));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("augment.learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Number of tokens masked out of `n` at `ratio`.
pub fn mask_count(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64).round() as usize).min(n)
}

/// Replaces `round(ratio·n)` of the `n` whitespace tokens, chosen uniformly
/// without replacement, by [`MASK_TOKEN`].
pub fn mask_tokens(text: &str, ratio: f64, seed: u64) -> Result<String> {
    mask_tokens_with(text, ratio, seed, MASK_TOKEN)
}

pub fn mask_tokens_with(text: &str, ratio: f64, seed: u64, mask: &str) -> Result<String> {
    let mut tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(Error::Precondition("cannot mask an empty text".into()));
    }
    let k = mask_count(tokens.len(), ratio);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in sample(&mut rng, tokens.len(), k) {
        tokens[i] = mask;
    }
    Ok(tokens.join(" "))
}

/// Per-example seed derived from the run seed and the example id.
pub fn example_seed(seed: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// A fitted reconstruction model.
pub trait Denoiser {
    fn mask_token(&self) -> &str;

    /// One entry per input; `None` marks a generation that failed.
    fn reconstruct(&self, masked: &[String]) -> Result<Vec<Option<String>>>;
}

#[derive(Debug, Clone)]
pub struct SyntheticOutcome {
    pub dataset: Dataset,
    /// Ids of source examples whose generation failed.
    pub failures: Vec<String>,
}

/// One synthetic example per training example, labels and language copied.
///
/// Empty inputs and empty reconstructions are counted as failures and
/// skipped.
pub fn generate_synthetic(
    train: &Dataset,
    model: &dyn Denoiser,
    cfg: &AugmentConfig,
) -> Result<SyntheticOutcome> {
    let mut failures = Vec::new();
    let mut sources = Vec::with_capacity(train.len());
    let mut masked = Vec::with_capacity(train.len());
    for ex in train {
        let seed = example_seed(cfg.seed, &ex.id);
        match mask_tokens_with(&ex.text, cfg.mask_ratio, seed, model.mask_token()) {
            Ok(m) => {
                sources.push(ex);
                masked.push(m);
            }
            Err(_) => failures.push(ex.id.clone()),
        }
    }
    let outputs = model.reconstruct(&masked)?;
    if outputs.len() != masked.len() {
        return Err(Error::model(format!(
            "denoiser returned {} outputs for {} inputs",
            outputs.len(),
            masked.len()
        )));
    }
    let mut examples = Vec::with_capacity(sources.len());
    for (src, out) in sources.into_iter().zip(outputs) {
        match out.filter(|t| !t.trim().is_empty()) {
            Some(text) => examples.push(LabeledExample {
                id: format!("{}{SYNTHETIC_MARKER}", src.id),
                text,
                ..src.clone()
            }),
            None => failures.push(src.id.clone()),
        }
    }
    Ok(SyntheticOutcome {
        dataset: Dataset::new(examples, Source::Synthetic, train.split())?,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SplitTag;
    use crate::labels::{BinaryLabel, FineLabel, Lang};

    #[test]
    fn ten_tokens_four_masked() {
        let t = "a b c d e f g h i j";
        for seed in 0..25 {
            let m = mask_tokens(t, 0.4, seed).unwrap();
            let toks: Vec<_> = m.split(' ').collect();
            assert_eq!(toks.len(), 10);
            assert_eq!(toks.iter().filter(|&&x| x == MASK_TOKEN).count(), 4);
            // Unmasked tokens stay in place.
            for (orig, got) in t.split(' ').zip(&toks) {
                assert!(*got == MASK_TOKEN || *got == orig);
            }
        }
    }

    #[test]
    fn single_token_rounds_to_zero() {
        assert_eq!(mask_tokens("hello", 0.4, 7).unwrap(), "hello");
    }

    #[test]
    fn deterministic_given_seed() {
        let t = "one two three four five";
        assert_eq!(mask_tokens(t, 0.4, 11).unwrap(), mask_tokens(t, 0.4, 11).unwrap());
    }

    #[test]
    fn empty_text_rejected() {
        assert!(mask_tokens("   ", 0.4, 0).is_err());
    }

    #[test]
    fn mask_count_is_rounded_product() {
        for n in 1..=100 {
            let want = (0.4 * n as f64).round() as usize;
            assert_eq!(mask_count(n, 0.4), want);
        }
        assert_eq!(mask_count(3, 0.99), 3);
    }

    #[test]
    fn example_seed_depends_on_both_inputs() {
        assert_ne!(example_seed(1, "a"), example_seed(2, "a"));
        assert_ne!(example_seed(1, "a"), example_seed(1, "b"));
        assert_eq!(example_seed(1, "a"), example_seed(1, "a"));
    }

    struct Echo;

    impl Denoiser for Echo {
        fn mask_token(&self) -> &str {
            MASK_TOKEN
        }

        fn reconstruct(&self, masked: &[String]) -> Result<Vec<Option<String>>> {
            Ok(masked
                .iter()
                .map(|m| (!m.starts_with(MASK_TOKEN)).then(|| m.replace(MASK_TOKEN, "x")))
                .collect())
        }
    }

    #[test]
    fn synthetic_copies_labels_and_counts_failures() {
        let mk = |id: &str, text: &str, f: FineLabel| {
            LabeledExample::new(id, text, Lang::En, Some(f.binary()), Some(f)).unwrap()
        };
        let d = Dataset::new(
            vec![
                mk("a", "w1 w2 w3 w4 w5", FineLabel::Hate),
                mk("b", "solo", FineLabel::None),
                mk("c", "p q", FineLabel::Prfn),
            ],
            Source::Hasoc2021,
            SplitTag::Train,
        )
        .unwrap();
        let cfg = AugmentConfig::default();
        let out = generate_synthetic(&d, &Echo, &cfg).unwrap();
        assert_eq!(out.dataset.len() + out.failures.len(), d.len());
        assert_eq!(out.dataset.source(), Source::Synthetic);
        for s in out.dataset.iter() {
            let src_id = s.id.strip_suffix(SYNTHETIC_MARKER).unwrap();
            let src = d.iter().find(|e| e.id == src_id).unwrap();
            assert_eq!(s.label_binary, src.label_binary);
            assert_eq!(s.label_fine, src.label_fine);
            assert_eq!(s.lang, src.lang);
        }
        let b = out.dataset.iter().find(|e| e.id == "b~syn").unwrap();
        assert_eq!(b.text, "solo");
        assert_eq!(b.label_binary, Some(BinaryLabel::Not));
    }
}
