//! Krippendorff's alpha for nominal data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationJudgment {
    pub item_id: String,
    pub annotator_id: String,
    /// The annotator's reading of the post as hateful or not.
    pub hateful: bool,
    /// Present only for items generated with target conditioning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_match: Option<bool>,
    pub realistic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Label,
    TargetMatch,
    Realism,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Label, Dimension::TargetMatch, Dimension::Realism];

    pub fn value(self, j: &AnnotationJudgment) -> Option<bool> {
        match self {
            Dimension::Label => Some(j.hateful),
            Dimension::TargetMatch => j.target_match,
            Dimension::Realism => Some(j.realistic),
        }
    }
}

/// Alpha over units of nominal values; units may have any number of values
/// (missing judgments are simply absent). Units with fewer than two values
/// are not pairable and are ignored.
pub fn alpha_nominal<V: Ord + Clone>(units: &[Vec<V>]) -> Result<f64> {
    let mut index: BTreeMap<V, usize> = BTreeMap::new();
    for u in units.iter().filter(|u| u.len() >= 2) {
        for v in u {
            let next = index.len();
            index.entry(v.clone()).or_insert(next);
        }
    }
    let pairable: Vec<&Vec<V>> = units.iter().filter(|u| u.len() >= 2).collect();
    if pairable.len() < 2 {
        return Err(Error::Input(format!(
            "agreement needs at least 2 units with 2 or more values, got {}",
            pairable.len()
        )));
    }

    // Coincidence matrix: every ordered pair of values within a unit adds
    // 1/(m_u - 1).
    let k = index.len();
    let mut o = vec![vec![0.0f64; k]; k];
    for u in &pairable {
        let mut counts = vec![0.0f64; k];
        for v in u.iter() {
            counts[index[v]] += 1.0;
        }
        let w = 1.0 / (u.len() as f64 - 1.0);
        for c in 0..k {
            for d in 0..k {
                let pairs = if c == d { counts[c] * (counts[c] - 1.0) } else { counts[c] * counts[d] };
                o[c][d] += pairs * w;
            }
        }
    }
    let n_c: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = n_c.iter().sum();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += o[c][d];
                expected += n_c[c] * n_c[d];
            }
        }
    }
    if expected == 0.0 {
        return Err(Error::UndefinedAgreement(
            "every pairable judgment has the same value, expected disagreement is 0".into(),
        ));
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

/// Alpha on one annotation dimension, grouping judgments by item.
pub fn krippendorff_alpha_nominal(judgments: &[AnnotationJudgment], dimension: Dimension) -> Result<f64> {
    let mut units: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for j in judgments {
        if let Some(v) = dimension.value(j) {
            units.entry(&j.item_id).or_default().push(v);
        }
    }
    let units: Vec<Vec<bool>> = units.into_values().collect();
    alpha_nominal(&units)
}
