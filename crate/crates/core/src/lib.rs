//! Multimodal affect-recognition pipeline: RBM pretraining, tied-weight
//! deep autoencoders producing shared representations, EEG/eye-movement
//! feature extraction, linear max-margin classification, and the three
//! evaluation protocols (unimodal enhancement, multimodal facilitation,
//! cross-modal learning).

pub mod autoencoder;
pub mod classifier;
pub mod error;
pub mod experiments;
pub mod features;
pub mod numeric;
pub mod rbm;

pub use error::{CoreError, Result};
