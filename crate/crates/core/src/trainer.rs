//! Classifier-facing types: training hyperparameters, probability vectors
//! and the prediction interface shared by single models and ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fine-tuning hyperparameters. Defaults are the fixed regime used for
/// every classifier: 3 epochs of AdamW at 2e-5, batches of 32, sequences
/// truncated to 64 tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub backbone: String,
    pub num_labels: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_seq_len: usize,
    pub seed: u64,
    /// AdamW decoupled weight decay; the optimizer's conventional default.
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            backbone: "cardiffnlp/twitter-roberta-base-hate".to_owned(),
            num_labels: 2,
            epochs: 3,
            learning_rate: 2e-5,
            batch_size: 32,
            max_seq_len: 64,
            seed: 0,
            weight_decay: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn new(backbone: impl Into<String>) -> Self {
        Self {
            backbone: backbone.into(),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_owned()));
        if self.backbone.trim().is_empty() {
            return bad("train.backbone is empty");
        }
        if self.num_labels < 2 {
            return bad("num_labels must be at least 2");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("train.epochs and train.batch_size must be positive");
        }
        if self.max_seq_len < 2 {
            return bad("train.max_seq_len must be at least 2");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.weight_decay < 0.0 {
            return bad("train.learning_rate must be positive and weight decay non-negative");
        }
        Ok(())
    }
}

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// A probability distribution over named classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
    class_names: Vec<String>,
}

impl ProbVector {
    pub fn new(probs: Vec<f64>, class_names: Vec<String>) -> Result<Self> {
        if probs.len() != class_names.len() || probs.is_empty() {
            return Err(Error::InvalidProbs(format!(
                "{} probabilities for {} classes",
                probs.len(),
                class_names.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProbs(format!("probability {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidProbs(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs, class_names })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Index of the largest probability; the earliest class wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn top_label(&self) -> &str {
        &self.class_names[self.argmax()]
    }

    pub fn prob_of(&self, class: &str) -> Option<f64> {
        self.class_names
            .iter()
            .position(|c| c == class)
            .map(|i| self.probs[i])
    }
}

/// Anything that maps texts to class probabilities.
pub trait Classifier {
    fn class_names(&self) -> &[String];

    /// One vector per text, laid out in [`Classifier::class_names`] order.
    fn predict_proba(&self, texts: &[String]) -> Result<Vec<ProbVector>>;
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn class_names(&self) -> &[String] {
        (**self).class_names()
    }

    fn predict_proba(&self, texts: &[String]) -> Result<Vec<ProbVector>> {
        (**self).predict_proba(texts)
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn class_names(&self) -> &[String] {
        (**self).class_names()
    }

    fn predict_proba(&self, texts: &[String]) -> Result<Vec<ProbVector>> {
        (**self).predict_proba(texts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn defaults_match_fixed_regime() {
        let c = TrainConfig::default();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.learning_rate, 2e-5);
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.max_seq_len, 64);
        assert_eq!(c.num_labels, 2);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = TrainConfig::new("tiny").with_seed(7);
        let back: TrainConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.3, 0.7], names(&["A", "B"])).is_ok());
        assert!(ProbVector::new(vec![0.3, 0.6], names(&["A", "B"])).is_err());
        assert!(ProbVector::new(vec![1.2, -0.2], names(&["A", "B"])).is_err());
        assert!(ProbVector::new(vec![1.0], names(&["A", "B"])).is_err());
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        let p = ProbVector::new(vec![0.5, 0.5], names(&["NOT", "HOF"])).unwrap();
        assert_eq!(p.top_label(), "NOT");
        let p = ProbVector::new(vec![0.2, 0.4, 0.4], names(&["a", "b", "c"])).unwrap();
        assert_eq!(p.argmax(), 1);
    }
}
