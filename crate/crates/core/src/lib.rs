//! Data handling and decision logic for detecting hate, offensive and
//! profane posts.
//!
//! Everything here is model-agnostic: classifiers and denoisers enter
//! through the [`Classifier`] and [`Denoiser`] traits, implemented by the
//! `hof-nn` crate.

pub mod augment;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod evalreport;
pub mod finegrained;
pub mod labels;
pub mod preprocess;
pub mod sampling;
pub mod trainer;

pub use augment::{AugmentConfig, Denoiser};
pub use corpus::{Dataset, LabeledExample, Source, SplitTag};
pub use error::{Error, ErrorKind, Result};
pub use labels::{BinaryLabel, FineLabel, LabelField, LabelScheme, Lang};
pub use trainer::{Classifier, ProbVector, TrainConfig};
