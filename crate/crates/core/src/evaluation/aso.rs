//! Almost Stochastic Order: violation ratio of empirical quantile functions
//! with a bootstrap lower bound.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::util::{derive_seed, sub_rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsoConfig {
    pub bootstrap_iters: usize,
    pub confidence_alpha: f64,
    pub grid_points: usize,
    /// (highly significant, significant).
    pub thresholds: (f64, f64),
    pub seed: u64,
}

impl Default for AsoConfig {
    fn default() -> Self {
        AsoConfig {
            bootstrap_iters: 1000,
            confidence_alpha: 0.05,
            grid_points: 1000,
            thresholds: (0.2, 0.5),
            seed: 42,
        }
    }
}

impl AsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_iters < 100 {
            return Err(Error::Config(format!("bootstrap_iters must be >= 100, got {}", self.bootstrap_iters)));
        }
        if self.grid_points < 100 {
            return Err(Error::Config(format!("grid_points must be >= 100, got {}", self.grid_points)));
        }
        if !(self.confidence_alpha > 0.0 && self.confidence_alpha <= 0.5) {
            return Err(Error::Config(format!("confidence_alpha must be in (0,0.5], got {}", self.confidence_alpha)));
        }
        let (hi, lo) = self.thresholds;
        if !(0.0 < hi && hi <= lo && lo <= 1.0) {
            return Err(Error::Config(format!("thresholds must satisfy 0 < {hi} <= {lo} <= 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epsilon {
    pub value: f64,
    /// Quantile functions coincide; `value` is reported as 1 (no dominance).
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsoResult {
    pub epsilon: f64,
    pub epsilon_min: f64,
    pub bootstrap_std: f64,
    pub degenerate: bool,
    /// ε_min below the first threshold.
    pub highly_significant: bool,
    /// ε_min below the second threshold.
    pub significant: bool,
}

fn check_sample(name: &str, s: &[f64]) -> Result<()> {
    if s.len() < 2 {
        return Err(Error::Input(format!("ASO sample {name} needs at least 2 scores, got {}", s.len())));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input(format!("ASO sample {name} contains non-finite scores")));
    }
    Ok(())
}

fn sorted(s: &[f64]) -> Vec<f64> {
    let mut v = s.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Left-continuous empirical quantile: the smallest x with F(x) >= t.
fn quantile(sorted: &[f64], t: f64) -> f64 {
    let n = sorted.len();
    let k = ((t * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

fn epsilon_sorted(a: &[f64], b: &[f64], grid_points: usize) -> Epsilon {
    let mut violation = 0.0;
    let mut total = 0.0;
    for i in 0..grid_points {
        let t = (i as f64 + 0.5) / grid_points as f64;
        let d = quantile(b, t) - quantile(a, t);
        let sq = d * d;
        total += sq;
        if d > 0.0 {
            violation += sq;
        }
    }
    if total == 0.0 {
        Epsilon { value: 1.0, degenerate: true }
    } else {
        Epsilon {
            value: violation / total,
            degenerate: false,
        }
    }
}

/// Violation ratio for "A stochastically dominates B" (higher scores better).
/// 0 means A dominates everywhere; 1 means B does.
pub fn aso_epsilon(sample_a: &[f64], sample_b: &[f64], grid_points: usize) -> Result<Epsilon> {
    check_sample("A", sample_a)?;
    check_sample("B", sample_b)?;
    if grid_points == 0 {
        return Err(Error::Config("grid_points must be positive".into()));
    }
    Ok(epsilon_sorted(&sorted(sample_a), &sorted(sample_b), grid_points))
}

fn resample<R: Rng>(rng: &mut R, s: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = (0..s.len()).map(|_| s[rng.random_range(0..s.len())]).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Bootstrap-corrected lower bound ε_min = clip(ε̂ − z₁₋α·σ̂, 0, 1) and the
/// threshold decisions. Iteration `i` draws from its own derived seed, so the
/// result does not depend on thread scheduling.
pub fn aso_min_epsilon(sample_a: &[f64], sample_b: &[f64], config: &AsoConfig) -> Result<AsoResult> {
    config.validate()?;
    let point = aso_epsilon(sample_a, sample_b, config.grid_points)?;
    if point.degenerate {
        return Ok(AsoResult {
            epsilon: 1.0,
            epsilon_min: 1.0,
            bootstrap_std: 0.0,
            degenerate: true,
            highly_significant: false,
            significant: false,
        });
    }
    let base = derive_seed(config.seed, &[sample_a.len() as u64, sample_b.len() as u64]);
    let draws: Vec<f64> = (0..config.bootstrap_iters)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(base, &[i as u64]);
            let a = resample(&mut rng, sample_a);
            let b = resample(&mut rng, sample_b);
            epsilon_sorted(&a, &b, config.grid_points).value
        })
        .collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let std = (draws.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt();
    let z = Normal::standard().inverse_cdf(1.0 - config.confidence_alpha);
    let epsilon_min = (point.value - z * std).clamp(0.0, 1.0);
    Ok(AsoResult {
        epsilon: point.value,
        epsilon_min,
        bootstrap_std: std,
        degenerate: false,
        highly_significant: epsilon_min < config.thresholds.0,
        significant: epsilon_min < config.thresholds.1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsoComparison {
    pub system_a: String,
    pub system_b: String,
    #[serde(flatten)]
    pub result: AsoResult,
}

/// All ordered pairs of distinct systems, in input order.
pub fn aso_matrix(systems: &[(String, Vec<f64>)], config: &AsoConfig) -> Result<Vec<AsoComparison>> {
    let mut out = Vec::new();
    for (i, (name_a, a)) in systems.iter().enumerate() {
        for (j, (name_b, b)) in systems.iter().enumerate() {
            if i == j {
                continue;
            }
            let cfg = AsoConfig {
                seed: derive_seed(config.seed, &[i as u64, j as u64]),
                ..config.clone()
            };
            out.push(AsoComparison {
                system_a: name_a.clone(),
                system_b: name_b.clone(),
                result: aso_min_epsilon(a, b, &cfg)?,
            });
        }
    }
    Ok(out)
}
