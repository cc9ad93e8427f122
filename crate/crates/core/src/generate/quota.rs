use serde::{Deserialize, Serialize};

use crate::corpus::{Label, TargetIdentity};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub top_p: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Sequences requested per backend call.
    pub batch_size: usize,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            top_p: 0.9,
            min_tokens: 5,
            max_tokens: 150,
            batch_size: 10,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::Config(format!("top_p must be in (0,1], got {}", self.top_p)));
        }
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return Err(Error::Config(format!(
                "need 0 < min_tokens <= max_tokens, got {}..{}",
                self.min_tokens, self.max_tokens
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaCell {
    pub label: Label,
    pub target: Option<TargetIdentity>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaPlan {
    pub cells: Vec<QuotaCell>,
    pub total: usize,
    pub batch_size: usize,
}

impl QuotaPlan {
    pub fn planned(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }

    pub fn with_target(&self) -> bool {
        self.cells.iter().any(|c| c.target.is_some())
    }
}

/// Split a generation budget evenly over labels (and targets), rounding each
/// cell down to a whole number of batches.
///
/// With targets, 100,000 over 14 cells gives floor(50,000 / 7) = 7,142, which
/// rounds down to 7,140 at batch size 10.
pub fn plan_quotas(total: usize, with_target: bool, batch_size: usize) -> Result<QuotaPlan> {
    if batch_size == 0 {
        return Err(Error::Plan("batch size must be positive".into()));
    }
    if !total.is_multiple_of(2) {
        return Err(Error::Plan(format!("total {total} cannot be split evenly over two labels")));
    }
    let targets: Vec<Option<TargetIdentity>> = if with_target {
        TargetIdentity::ALL.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let per_cell = total / (2 * targets.len());
    let count = per_cell - per_cell % batch_size;
    if count == 0 {
        return Err(Error::Plan(format!(
            "total {total} leaves no full batch of {batch_size} per cell"
        )));
    }
    let cells = Label::ALL
        .iter()
        .flat_map(|&label| targets.iter().map(move |&target| QuotaCell { label, target, count }))
        .collect();
    Ok(QuotaPlan {
        cells,
        total,
        batch_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_per_target_quota() {
        let plan = plan_quotas(100_000, true, 10).unwrap();
        assert_eq!(plan.cells.len(), 14);
        assert!(plan.cells.iter().all(|c| c.count == 7_140));
        assert!(plan.planned() <= plan.total);
    }

    #[test]
    fn untargeted_plan_halves() {
        let plan = plan_quotas(100_000, false, 10).unwrap();
        assert_eq!(plan.cells.len(), 2);
        assert!(plan.cells.iter().all(|c| c.count == 50_000 && c.target.is_none()));
    }

    #[test]
    fn exact_division() {
        let plan = plan_quotas(28, true, 2).unwrap();
        assert_eq!(plan.cells.len(), 14);
        assert!(plan.cells.iter().all(|c| c.count == 2));
    }

    #[test]
    fn rejects_bad_totals() {
        assert!(plan_quotas(101, false, 10).is_err());
        assert!(plan_quotas(14, true, 10).is_err());
        assert!(plan_quotas(100, false, 0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(GenerationParams::default().validate().is_ok());
        let bad = GenerationParams { top_p: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = GenerationParams { min_tokens: 200, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
