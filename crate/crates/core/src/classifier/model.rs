use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{vectorize, FeatureSpec, SparseVector};
use crate::corpus::{Label, Post};
use crate::error::{Error, Result};
use crate::util::sub_rng;

type Examples = Vec<(SparseVector, Label)>;

const MODEL_FORMAT: &str = "hsaug-linear-model";
const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Examples per SGD step; 0 means full batch.
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
    /// When set, hold out this fraction (seeded) and keep the epoch with the
    /// lowest held-out loss.
    #[serde(default)]
    pub holdout_fraction: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            learning_rate: 0.1,
            batch_size: 16,
            seed: 42,
            l2: 1e-6,
            holdout_fraction: None,
        }
    }
}

impl TrainConfig {
    pub fn filter_default() -> Self {
        TrainConfig::default()
    }

    pub fn downstream_default() -> Self {
        TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Training("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Training("learning rate must be positive".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Training("l2 must be non-negative".into()));
        }
        if let Some(f) = self.holdout_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Training(format!("holdout fraction must be in (0,1), got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
    pub examples: usize,
    /// Mean training loss measured after each epoch.
    pub epoch_losses: Vec<f64>,
    pub final_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_epoch: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_spec: FeatureSpec,
    pub train_meta: Option<TrainMeta>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn target(label: Label) -> f64 {
    if label.is_hateful() {
        1.0
    } else {
        0.0
    }
}

/// Data term of the loss for a batch: summed cross-entropy and the sparse
/// per-example residuals `sigmoid(z) - y`.
fn batch_residuals(weights: &[f64], scale: f64, bias: f64, batch: &[(&SparseVector, Label)]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let residuals = batch
        .iter()
        .map(|(x, y)| {
            let z = scale * x.iter().map(|&(i, v)| weights[i as usize] * v).sum::<f64>() + bias;
            let t = target(*y);
            loss += softplus(z) - t * z;
            sigmoid(z) - t
        })
        .collect();
    (loss, residuals)
}

impl LinearModel {
    pub fn zeros(feature_spec: FeatureSpec) -> Self {
        LinearModel {
            weights: vec![0.0; feature_spec.hash_dim],
            bias: 0.0,
            feature_spec,
            train_meta: None,
        }
    }

    pub fn logit(&self, x: &SparseVector) -> f64 {
        x.iter().map(|&(i, v)| self.weights[i as usize] * v).sum::<f64>() + self.bias
    }

    pub fn probability(&self, text: &str) -> f64 {
        sigmoid(self.logit(&vectorize(text, &self.feature_spec)))
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }
}

/// Mean binary cross-entropy plus `l2 * ||w||^2 / 2`, and its exact gradient.
/// The bias is not regularized.
pub fn loss_and_gradient(model: &LinearModel, batch: &[(SparseVector, Label)], l2: f64) -> (f64, Gradient) {
    assert!(!batch.is_empty(), "loss_and_gradient needs a non-empty batch");
    let refs: Vec<(&SparseVector, Label)> = batch.iter().map(|(x, y)| (x, *y)).collect();
    let (loss_sum, residuals) = batch_residuals(&model.weights, 1.0, model.bias, &refs);
    let m = batch.len() as f64;
    let mut grad: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let mut bias = 0.0;
    for ((x, _), r) in batch.iter().zip(&residuals) {
        for &(i, v) in x {
            grad[i as usize] += r * v / m;
        }
        bias += r / m;
    }
    let penalty = 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    (loss_sum / m + penalty, Gradient { weights: grad, bias })
}

/// Mean regularized loss over a dataset.
pub fn dataset_loss(model: &LinearModel, data: &[(SparseVector, Label)], l2: f64) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let sum: f64 = data
        .iter()
        .map(|(x, y)| {
            let z = model.logit(x);
            softplus(z) - target(*y) * z
        })
        .sum();
    sum / data.len() as f64 + 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Weights kept as `scale * v` so the dense L2 shrink is one multiplication.
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
}

impl ScaledWeights {
    fn materialize(&self) -> Vec<f64> {
        self.v.iter().map(|x| x * self.scale).collect()
    }

    fn renormalize(&mut self) {
        for x in &mut self.v {
            *x *= self.scale;
        }
        self.scale = 1.0;
    }
}

pub fn featurize_posts(posts: &[Post], spec: &FeatureSpec) -> Vec<(SparseVector, Label)> {
    posts
        .par_iter()
        .map(|p| (vectorize(&p.text, spec), p.label))
        .collect()
}

/// Mini-batch SGD over seeded shuffles of the dataset.
pub fn train(dataset: &[Post], config: &TrainConfig, spec: &FeatureSpec) -> Result<LinearModel> {
    config.validate()?;
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    let first = dataset[0].label;
    if dataset.iter().all(|p| p.label == first) {
        return Err(Error::Training(format!("training set only contains {first} posts")));
    }

    let all = featurize_posts(dataset, spec);
    let (train_set, holdout): (Examples, Examples) = match config.holdout_fraction {
        Some(f) => {
            let n_hold = ((dataset.len() as f64 * f).round() as usize).clamp(1, dataset.len() - 1);
            let mut rng = sub_rng(config.seed, &[u64::MAX]);
            let held: std::collections::HashSet<usize> = index::sample(&mut rng, dataset.len(), n_hold).into_iter().collect();
            let mut tr = Vec::new();
            let mut ho = Vec::new();
            for (i, ex) in all.into_iter().enumerate() {
                if held.contains(&i) {
                    ho.push(ex);
                } else {
                    tr.push(ex);
                }
            }
            (tr, ho)
        }
        None => (all, Vec::new()),
    };

    let batch_size = if config.batch_size == 0 {
        train_set.len()
    } else {
        config.batch_size.min(train_set.len())
    };
    let mut w = ScaledWeights {
        v: vec![0.0; spec.hash_dim],
        scale: 1.0,
    };
    let mut bias = 0.0;
    let lr = config.learning_rate;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Vec<f64>, f64)> = None;

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..config.epochs {
        if batch_size < train_set.len() {
            order.shuffle(&mut sub_rng(config.seed, &[epoch as u64]));
        }
        for chunk in order.chunks(batch_size) {
            let batch: Vec<(&SparseVector, Label)> = chunk.iter().map(|&i| (&train_set[i].0, train_set[i].1)).collect();
            let (_, residuals) = batch_residuals(&w.v, w.scale, bias, &batch);
            let m = batch.len() as f64;

            // w <- w - lr * (l2 * w + data_grad)
            w.scale *= 1.0 - lr * config.l2;
            if w.scale < 1e-9 {
                w.renormalize();
            }
            let step = lr / (m * w.scale);
            let mut bias_grad = 0.0;
            for ((x, _), r) in batch.iter().zip(&residuals) {
                for &(i, v) in x.iter() {
                    w.v[i as usize] -= step * r * v;
                }
                bias_grad += r / m;
            }
            bias -= lr * bias_grad;
        }

        let snapshot = LinearModel {
            weights: w.materialize(),
            bias,
            feature_spec: spec.clone(),
            train_meta: None,
        };
        epoch_losses.push(dataset_loss(&snapshot, &train_set, config.l2));
        if !holdout.is_empty() {
            let held_loss = dataset_loss(&snapshot, &holdout, config.l2);
            if best.as_ref().is_none_or(|(l, ..)| held_loss < *l) {
                best = Some((held_loss, epoch + 1, snapshot.weights, bias));
            }
        }
    }

    let (weights, bias, selected_epoch) = match best {
        Some((_, epoch, weights, b)) => (weights, b, Some(epoch)),
        None => (w.materialize(), bias, None),
    };
    let mut model = LinearModel {
        weights,
        bias,
        feature_spec: spec.clone(),
        train_meta: None,
    };
    if !model.is_finite() {
        return Err(Error::Training("training diverged to non-finite weights".into()));
    }
    let final_loss = dataset_loss(&model, &train_set, config.l2);
    model.train_meta = Some(TrainMeta {
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        batch_size: config.batch_size,
        seed: config.seed,
        l2: config.l2,
        examples: train_set.len(),
        epoch_losses,
        final_loss,
        selected_epoch,
    });
    Ok(model)
}

/// Decision rule shared by every scorer: hateful iff p > 0.5.
pub fn label_from_probability(p: f64) -> Label {
    Label::from_hateful(p > 0.5)
}

pub fn predict(model: &LinearModel, text: &str) -> (Label, f64) {
    let p = model.probability(text);
    (label_from_probability(p), p)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    feature_spec: FeatureSpec,
    bias: f64,
    /// Non-zero weights as (index, value).
    weights: Vec<(u32, f64)>,
    train_meta: Option<TrainMeta>,
}

impl LinearModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_spec: self.feature_spec.clone(),
            bias: self.bias,
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i as u32, *w))
                .collect(),
            train_meta: self.train_meta.clone(),
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(f), &file)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_reader(BufReader::new(f))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Schema(format!(
                "{}: unsupported model format {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        file.feature_spec.validate()?;
        let mut weights = vec![0.0; file.feature_spec.hash_dim];
        for (i, w) in file.weights {
            let slot = weights
                .get_mut(i as usize)
                .ok_or_else(|| Error::Schema(format!("weight index {i} out of range")))?;
            *slot = w;
        }
        Ok(LinearModel {
            weights,
            bias: file.bias,
            feature_spec: file.feature_spec,
            train_meta: file.train_meta,
        })
    }
}
