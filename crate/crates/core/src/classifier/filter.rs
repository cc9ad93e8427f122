//! Label-consistency filtering of generated candidates.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::model::{label_from_probability, LinearModel};
use crate::corpus::{read_jsonl, Label, Post, TargetIdentity};
use crate::error::{Error, Result};
use crate::util::sub_rng;

/// Anything that can assign a hateful probability to a post.
pub trait Scorer: Sync {
    fn p_hateful(&self, post: &Post) -> Result<f64>;

    fn predict_label(&self, post: &Post) -> Result<Label> {
        Ok(label_from_probability(self.p_hateful(post)?))
    }
}

impl Scorer for LinearModel {
    fn p_hateful(&self, post: &Post) -> Result<f64> {
        Ok(self.probability(&post.text))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalScore {
    pub id: String,
    pub p_hateful: f64,
}

/// Probabilities produced outside this toolkit (e.g. by a transformer),
/// keyed by post id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExternalScores {
    scores: HashMap<String, f64>,
}

impl ExternalScores {
    pub fn new(records: impl IntoIterator<Item = ExternalScore>) -> Result<Self> {
        let mut scores = HashMap::new();
        for r in records {
            if !(0.0..=1.0).contains(&r.p_hateful) {
                return Err(Error::Input(format!("score for {} is outside [0,1]: {}", r.id, r.p_hateful)));
            }
            scores.insert(r.id, r.p_hateful);
        }
        Ok(ExternalScores { scores })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(read_jsonl::<ExternalScore>(path)?)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl Scorer for ExternalScores {
    fn p_hateful(&self, post: &Post) -> Result<f64> {
        self.scores
            .get(&post.post_id)
            .copied()
            .ok_or_else(|| Error::Input(format!("no external score for post {}", post.post_id)))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCell {
    pub label: Label,
    pub target: Option<TargetIdentity>,
    pub candidates: usize,
    pub passed: usize,
    pub kept: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub passed: usize,
    pub kept: usize,
    /// `cap - kept` when fewer than `cap` candidates passed.
    pub shortfall: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub cap_per_label: usize,
    pub cells: Vec<FilterCell>,
    pub per_label: BTreeMap<Label, LabelSummary>,
}

/// Keep candidates whose predicted label equals the label they were generated
/// for, then cap each label at `cap_per_label` by seeded uniform subsampling.
/// Kept posts stay in candidate order.
pub fn filter_generated(
    candidates: &[Post],
    scorer: &dyn Scorer,
    cap_per_label: usize,
    seed: u64,
) -> Result<(Vec<Post>, FilterReport)> {
    let mut cells: BTreeMap<(Label, Option<TargetIdentity>), FilterCell> = BTreeMap::new();
    let mut passing: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, post) in candidates.iter().enumerate() {
        let intended = post
            .intended_label()
            .ok_or_else(|| Error::Input(format!("candidate {} has no intended label", post.post_id)))?;
        let target = post.intended_target();
        let cell = cells.entry((intended, target)).or_insert_with(|| FilterCell {
            label: intended,
            target,
            ..FilterCell::default()
        });
        cell.candidates += 1;
        if scorer.predict_label(post)? == intended {
            cell.passed += 1;
            passing.entry(intended).or_default().push(i);
        }
    }

    let mut keep = vec![false; candidates.len()];
    let mut per_label = BTreeMap::new();
    for label in Label::ALL {
        let pass = passing.remove(&label).unwrap_or_default();
        let chosen: Vec<usize> = if pass.len() > cap_per_label {
            let mut rng = sub_rng(seed, &[label as u64]);
            index::sample(&mut rng, pass.len(), cap_per_label).into_iter().map(|k| pass[k]).collect()
        } else {
            if pass.len() < cap_per_label {
                log::info!("{label}: only {} candidates passed filtering (cap {cap_per_label})", pass.len());
            }
            pass.clone()
        };
        for &i in &chosen {
            keep[i] = true;
        }
        per_label.insert(
            label,
            LabelSummary {
                passed: pass.len(),
                kept: chosen.len(),
                shortfall: cap_per_label.saturating_sub(pass.len()),
            },
        );
    }

    let mut kept = Vec::new();
    for (i, post) in candidates.iter().enumerate() {
        if keep[i] {
            kept.push(post.clone());
            let cell = cells
                .get_mut(&(post.intended_label().expect("checked"), post.intended_target()))
                .expect("cell exists");
            cell.kept += 1;
        }
    }
    Ok((
        kept,
        FilterReport {
            cap_per_label,
            cells: cells.into_values().collect(),
            per_label,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Provenance, SourceMeta};

    fn candidate(id: usize, intended: Label) -> Post {
        Post {
            post_id: format!("c{id}"),
            text: format!("text {id}"),
            label: intended,
            targets: Default::default(),
            provenance: Provenance::Generated,
            source_meta: Some(SourceMeta {
                intended_label: Some(intended),
                ..Default::default()
            }),
        }
    }

    /// Scores every post with a fixed probability.
    struct Constant(f64);

    impl Scorer for Constant {
        fn p_hateful(&self, _: &Post) -> Result<f64> {
            Ok(self.0)
        }
    }

    #[test]
    fn matching_prediction_is_kept() {
        let c = vec![candidate(0, Label::Hateful), candidate(1, Label::NonHateful)];
        let (kept, report) = filter_generated(&c, &Constant(0.9), 10, 0).unwrap();
        assert_eq!(kept, vec![c[0].clone()]);
        assert_eq!(report.per_label[&Label::Hateful].passed, 1);
        assert_eq!(report.per_label[&Label::NonHateful].passed, 0);
    }

    #[test]
    fn cap_and_shortfall() {
        let c: Vec<Post> = (0..200).map(|i| candidate(i, Label::Hateful)).collect();
        let (kept, report) = filter_generated(&c, &Constant(0.99), 150, 3).unwrap();
        assert_eq!(kept.len(), 150);
        let (kept_all, report_all) = filter_generated(&c, &Constant(0.99), 1000, 3).unwrap();
        assert_eq!(kept_all.len(), 200);
        assert_eq!(report_all.per_label[&Label::Hateful].shortfall, 800);
        assert_eq!(report.per_label[&Label::Hateful].shortfall, 0);
        let again = filter_generated(&c, &Constant(0.99), 150, 3).unwrap().0;
        assert_eq!(kept, again);
    }

    #[test]
    fn candidate_without_intent_is_rejected() {
        let mut c = candidate(0, Label::Hateful);
        c.source_meta = None;
        assert!(filter_generated(&[c], &Constant(0.1), 1, 0).is_err());
    }

    #[test]
    fn external_scores_by_id() {
        let scores = ExternalScores::new([
            ExternalScore { id: "c0".into(), p_hateful: 0.7 },
            ExternalScore { id: "c1".into(), p_hateful: 0.2 },
        ])
        .unwrap();
        let c = [candidate(0, Label::Hateful), candidate(1, Label::Hateful), candidate(2, Label::Hateful)];
        assert_eq!(scores.predict_label(&c[0]).unwrap(), Label::Hateful);
        assert_eq!(scores.predict_label(&c[1]).unwrap(), Label::NonHateful);
        assert!(scores.p_hateful(&c[2]).is_err());
        assert!(ExternalScores::new([ExternalScore { id: "x".into(), p_hateful: 1.5 }]).is_err());
    }
}
