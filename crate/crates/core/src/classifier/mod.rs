//! Hashed n-gram logistic regression, used both to filter generated
//! candidates and as the downstream classifier.

mod features;
mod filter;
mod model;

pub use features::{featurize, vectorize, FeatureSpec, SparseVector};
pub use filter::{filter_generated, ExternalScore, ExternalScores, FilterCell, FilterReport, LabelSummary, Scorer};
pub use model::{
    dataset_loss, featurize_posts, label_from_probability, loss_and_gradient, predict, sigmoid, train, Gradient,
    LinearModel, TrainConfig, TrainMeta,
};
