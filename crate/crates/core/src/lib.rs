//! Interpretable "wrapper box" classifiers over precomputed neural embeddings.
//!
//! A wrapper box replaces a network's linear head with a classic model fitted
//! on the network's pooled penultimate representations. Each prediction is
//! traced to the training rows that produced it:
//!
//! - [`models`]: kNN over a kd-tree, CART tree, L-means nearest centroid, and
//!   logistic regression (baseline and logit transform).
//! - [`explain`]: turn a prediction's support set into an example-based
//!   explanation, fully faithful or downsampled.
//! - [`attribute`]: find training subsets whose removal flips a prediction,
//!   verify them by refitting, and summarize coverage and correctness.
//! - [`evaluate`]: macro-averaged classification metrics, the pooled
//!   two-proportion z-test, and 2-D PCA projections.
//! - [`data`]: the WBX1/CSV dataset formats and stratified splitting.
//! - [`synth`]: Gaussian-blob datasets for experiments and tests.
//! - [`pipeline`]: the run configuration and commands behind the `wrapbox` binary.

pub mod attribute;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod explain;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use data::{load_dataset, stratified_split, write_dataset, DataFormat, EmbeddingDataset, SplitSpec};
pub use error::{Result, WrapError};
pub use models::{ModelSpec, Prediction, WrapperModel};
