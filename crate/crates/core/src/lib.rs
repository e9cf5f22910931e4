//! Crisis news sympathy toolkit.
//!
//! Reproducible building blocks for measuring how news media accounts covered
//! two crisis events on Twitter:
//!
//! - [`corpus`]: ingestion, account/term filtering, near-duplicate removal,
//!   language gating, temporal slicing and stratified day sampling.
//! - [`annotation`]: crowd label aggregation and agreement statistics.
//! - [`stats`]: coverage and sympathy bias tests, Fisher combination over
//!   downsampling runs, the sentiment logit model and evaluation metrics.
//! - [`embeddings`]: tokenization and skip-gram word vectors.
//! - [`classifier`]: a single-convolution-layer sentence classifier.
//!
//! Every stochastic routine takes an explicit seed; see [`rng`].

pub mod annotation;
pub mod classifier;
pub mod corpus;
pub mod embeddings;
pub mod rng;
pub mod stats;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
