//! Target-aware data augmentation toolkit for hate speech detection.
//!
//! The pipeline starts from a small target-annotated gold sample, produces
//! synthetic examples with EDA and with prompt-driven generation backends,
//! filters generated candidates for label consistency, and trains and
//! evaluates classifiers per target identity group.

pub mod annotation;
pub mod classifier;
pub mod corpus;
pub mod eda;
pub mod error;
pub mod evaluation;
pub mod generate;
pub mod pipeline;
mod util;

pub use error::{Error, Result};
pub use util::{derive_seed, file_digest, mean_std, sha256_hex};
