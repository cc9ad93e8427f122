use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::Scorer;
use crate::corpus::{Label, Post, TargetIdentity};
use crate::error::{Error, Result};
use crate::util::sha256_hex;

/// Confusion counts with the hateful class as positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a Label, &'a Label)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (gold, pred) in pairs {
            c.add(*gold, *pred);
        }
        c
    }

    pub fn add(&mut self, gold: Label, pred: Label) {
        match (gold.is_hateful(), pred.is_hateful()) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// F1 of the hateful class, 0 when undefined.
    pub fn hate_f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    /// F1 of the non-hateful class, 0 when undefined.
    pub fn non_hate_f1(&self) -> f64 {
        ratio(2 * self.tn, 2 * self.tn + self.fn_ + self.fp)
    }

    pub fn macro_f1(&self) -> f64 {
        (self.hate_f1() + self.non_hate_f1()) / 2.0
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub macro_f1: f64,
    pub hate_f1: f64,
    pub non_hate_f1: f64,
    pub counts: ConfusionCounts,
}

impl From<ConfusionCounts> for F1Scores {
    fn from(counts: ConfusionCounts) -> Self {
        F1Scores {
            macro_f1: counts.macro_f1(),
            hate_f1: counts.hate_f1(),
            non_hate_f1: counts.non_hate_f1(),
            counts,
        }
    }
}

pub fn f1_scores(gold: &[Label], predicted: &[Label]) -> Result<F1Scores> {
    if gold.len() != predicted.len() {
        return Err(Error::Input(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Input("no labels to score".into()));
    }
    Ok(ConfusionCounts::from_pairs(gold.iter().zip(predicted)).into())
}

/// Hate-F1 restricted to posts carrying each target. Multi-target posts count
/// in every matching bucket; untargeted posts in none; empty buckets are
/// omitted.
pub fn per_target_hate_f1(eval_set: &[Post], predictions: &[Label]) -> Result<BTreeMap<TargetIdentity, f64>> {
    if eval_set.len() != predictions.len() {
        return Err(Error::Input(format!(
            "{} posts but {} predictions",
            eval_set.len(),
            predictions.len()
        )));
    }
    let mut buckets: BTreeMap<TargetIdentity, ConfusionCounts> = BTreeMap::new();
    for (post, pred) in eval_set.iter().zip(predictions) {
        for t in &post.targets {
            buckets.entry(*t).or_default().add(post.label, *pred);
        }
    }
    Ok(buckets.into_iter().map(|(t, c)| (t, c.hate_f1())).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub dataset_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub macro_f1: f64,
    pub hate_f1: f64,
    pub per_target_hate_f1: BTreeMap<TargetIdentity, f64>,
    pub n_eval: usize,
    pub counts: ConfusionCounts,
    pub run_meta: RunMeta,
}

pub fn predict_all(posts: &[Post], scorer: &dyn Scorer) -> Result<Vec<Label>> {
    posts.iter().map(|p| scorer.predict_label(p)).collect()
}

/// Digest of the evaluation set's ids, labels and texts.
pub fn dataset_digest(posts: &[Post]) -> String {
    let mut buf = Vec::new();
    for p in posts {
        buf.extend_from_slice(p.post_id.as_bytes());
        buf.push(0);
        buf.extend_from_slice(p.label.as_str().as_bytes());
        buf.push(0);
        buf.extend_from_slice(p.text.as_bytes());
        buf.push(b'\n');
    }
    sha256_hex(&buf)
}

pub fn evaluate(eval_set: &[Post], scorer: &dyn Scorer, seed: u64) -> Result<EvalReport> {
    let predictions = predict_all(eval_set, scorer)?;
    let gold: Vec<Label> = eval_set.iter().map(|p| p.label).collect();
    let scores = f1_scores(&gold, &predictions)?;
    Ok(EvalReport {
        macro_f1: scores.macro_f1,
        hate_f1: scores.hate_f1,
        per_target_hate_f1: per_target_hate_f1(eval_set, &predictions)?,
        n_eval: eval_set.len(),
        counts: scores.counts,
        run_meta: RunMeta {
            seed,
            dataset_digest: dataset_digest(eval_set),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::*;

    /// Precision/recall route, kept separate from the 2tp/(2tp+fp+fn) form.
    fn f1_via_pr(tp: usize, fp: usize, fn_: usize) -> f64 {
        let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
    }

    #[test]
    fn perfect_predictions() {
        let gold = [Hateful, NonHateful, Hateful];
        let s = f1_scores(&gold, &gold).unwrap();
        assert_eq!((s.macro_f1, s.hate_f1), (1.0, 1.0));
    }

    #[test]
    fn two_thirds_hate_f1() {
        // tp=2, fp=1, fn=1, tn=1
        let gold = [Hateful, Hateful, Hateful, NonHateful, NonHateful];
        let pred = [Hateful, Hateful, NonHateful, Hateful, NonHateful];
        let s = f1_scores(&gold, &pred).unwrap();
        assert_eq!(s.counts, ConfusionCounts { tp: 2, fp: 1, fn_: 1, tn: 1 });
        assert!((s.hate_f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn all_negative_predictions_score_zero() {
        let s = f1_scores(&[Hateful, NonHateful], &[NonHateful, NonHateful]).unwrap();
        assert_eq!(s.hate_f1, 0.0);
    }

    #[test]
    fn input_errors() {
        assert!(f1_scores(&[Hateful], &[]).is_err());
        assert!(f1_scores(&[], &[]).is_err());
    }

    #[test]
    fn per_target_restriction() {
        use TargetIdentity::*;
        let eval = vec![
            Post::gold("1", "a", Hateful, [Race]),
            Post::gold("2", "b", NonHateful, [Race]),
            Post::gold("3", "c", Hateful, [Gender, Race]),
            Post::gold("4", "d", Hateful, [Gender]),
            Post::gold("5", "e", Hateful, []),
        ];
        let pred = [Hateful, NonHateful, Hateful, NonHateful, NonHateful];
        let m = per_target_hate_f1(&eval, &pred).unwrap();
        assert_eq!(m[&Race], 1.0);
        // gender: tp=1 (post 3), fn=1 (post 4)
        assert!((m[&Gender] - 2.0 / 3.0).abs() < 1e-15);
        assert!(!m.contains_key(&Age));
    }

    fn labels() -> impl Strategy<Value = Vec<(bool, bool)>> {
        prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)
    }

    proptest! {
        #[test]
        fn f1_matches_precision_recall_and_macro_is_mean(pairs in labels()) {
            let gold: Vec<Label> = pairs.iter().map(|p| Label::from_hateful(p.0)).collect();
            let pred: Vec<Label> = pairs.iter().map(|p| Label::from_hateful(p.1)).collect();
            let s = f1_scores(&gold, &pred).unwrap();
            let c = s.counts;
            prop_assert!((s.hate_f1 - f1_via_pr(c.tp, c.fp, c.fn_)).abs() < 1e-12);
            prop_assert!((s.non_hate_f1 - f1_via_pr(c.tn, c.fn_, c.fp)).abs() < 1e-12);
            prop_assert_eq!(s.macro_f1, (s.hate_f1 + s.non_hate_f1) / 2.0);
            prop_assert!((0.0..=1.0).contains(&s.macro_f1));
            prop_assert_eq!(c.total(), pairs.len());
        }

        #[test]
        fn single_target_buckets_equal_subset_scores(rows in prop::collection::vec((0usize..7, any::<bool>(), any::<bool>()), 1..80)) {
            let eval: Vec<Post> = rows.iter().enumerate()
                .map(|(i, (t, g, _))| Post::gold(i.to_string(), "x", Label::from_hateful(*g), [TargetIdentity::ALL[*t]]))
                .collect();
            let pred: Vec<Label> = rows.iter().map(|r| Label::from_hateful(r.2)).collect();
            let buckets = per_target_hate_f1(&eval, &pred).unwrap();
            for t in TargetIdentity::ALL {
                let idx: Vec<usize> = (0..eval.len()).filter(|&i| eval[i].targets.contains(&t)).collect();
                if idx.is_empty() {
                    prop_assert!(!buckets.contains_key(&t));
                    continue;
                }
                let g: Vec<Label> = idx.iter().map(|&i| eval[i].label).collect();
                let p: Vec<Label> = idx.iter().map(|&i| pred[i]).collect();
                prop_assert_eq!(buckets[&t], f1_scores(&g, &p).unwrap().hate_f1);
            }
        }
    }
}
