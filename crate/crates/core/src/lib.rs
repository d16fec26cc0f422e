//! Zero-shot audio classification with a bilinear acoustic/semantic
//! compatibility model trained under the WARP ranking loss.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`]: embedding tables, class catalogs, sample sets, fold plans
//!   and models, with their on-disk formats.
//! * [`semantics`]: class embeddings from word vectors (label and sentence
//!   averaging, concatenation) and clip-level acoustic averaging.
//! * [`compat`]: the compatibility function `θᵀWφ` and the classifier.
//! * [`warp`]: the WARP objective, its subgradient and SGD training.
//! * [`splits`]: class-fold generation and undersampling.
//! * [`metrics`]: Top-1, mAP, random baselines and McNemar's test.

pub mod compat;
pub mod corpus;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod semantics;
pub mod splits;
pub mod warp;

pub use error::{Error, Result};
