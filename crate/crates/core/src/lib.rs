//! Personal-attribute inference from short-text posts.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`corpus`]: ingest posts and account labels, tokenize, filter short posts.
//! * [`embedding`]: vocabulary and skip-gram negative-sampling word vectors.
//! * [`vectorize`]: post vectors by mean pooling, per-account blocks, task datasets.
//! * [`models`]: linear SVC, k-NN, AdaBoost, random forest and a fully connected net.
//! * [`eval`]: metrics, grouped cross-validation, per-entity recall, Welch t-tests.
//! * [`sweep`]: the (task × algorithm × dimension × block size) experiment grid.
//!
//! [`synth`] generates planted-signal corpora for demos and tests.

pub mod corpus;
pub mod embedding;
mod error;
pub mod eval;
pub mod matrix;
pub mod models;
pub mod seed;
pub mod sweep;
pub mod synth;
pub mod vectorize;

pub use error::{Error, ErrorKind, Result};
pub use matrix::Matrix;
