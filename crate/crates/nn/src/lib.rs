//! Transformer models on candle: encoder, text classifier and the masked
//! denoiser used for augmentation.

pub mod backbone;
pub mod bert;
pub mod classifier;
pub mod denoiser;
pub mod error;
pub mod init;
pub mod vocab;

pub use classifier::{load_ensemble, train_classifier, TextClassifier};
pub use denoiser::{fit_denoiser, Seq2SeqDenoiser};
pub use error::{Error, Result};
