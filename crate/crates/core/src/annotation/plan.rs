use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Post, TargetIdentity};
use crate::error::{Error, Result};
use crate::util::{fnv1a, sub_rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    /// Items drawn from each generated corpus (one corpus per setup).
    pub items_per_setup: usize,
    /// Share of planned items that every annotator judges.
    pub overlap_fraction: f64,
    /// Number of disjoint shards the remaining items are split into.
    pub annotators: usize,
    pub seed: u64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            items_per_setup: 70,
            overlap_fraction: 0.1,
            annotators: 2,
            seed: 42,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.items_per_setup == 0 {
            return Err(Error::Config("items_per_setup must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap_fraction) {
            return Err(Error::Config(format!(
                "overlap_fraction must be in [0,1], got {}",
                self.overlap_fraction
            )));
        }
        if self.annotators == 0 {
            return Err(Error::Config("annotators must be positive".into()));
        }
        Ok(())
    }
}

/// One post chosen for annotation. `item_id` is opaque so that it reveals
/// nothing about the intended label, target or setup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanItem {
    pub item_id: String,
    pub setup: String,
    pub post_id: String,
    pub text: String,
    pub intended_label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intended_target: Option<TargetIdentity>,
    pub target_match_applies: bool,
    pub overlap: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub config: PlanConfig,
    pub items: Vec<PlanItem>,
    /// Non-overlap item ids per shard.
    pub shards: Vec<Vec<String>>,
}

fn intended_label(p: &Post) -> Label {
    p.intended_label().unwrap_or(p.label)
}

fn intended_target(p: &Post) -> Option<TargetIdentity> {
    p.intended_target().or_else(|| p.targets.iter().next().copied())
}

fn target_conditioned(p: &Post) -> bool {
    p.intended_target().is_some() || p.source_meta.as_ref().and_then(|m| m.with_target).unwrap_or(false)
}

/// Spread `n` over groups round-robin, skipping exhausted groups.
fn round_robin(n: usize, available: &[usize]) -> Vec<usize> {
    let mut take = vec![0; available.len()];
    let mut left = n;
    while left > 0 {
        let mut moved = false;
        for (t, &a) in take.iter_mut().zip(available) {
            if left > 0 && *t < a {
                *t += 1;
                left -= 1;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    take
}

/// Indices of the posts chosen from one setup, split evenly across labels
/// and, within a label, across intended targets.
fn stratify(posts: &[Post], n: usize, seed: u64) -> Vec<usize> {
    let mut cells: BTreeMap<Label, BTreeMap<Option<TargetIdentity>, Vec<usize>>> = BTreeMap::new();
    for (i, p) in posts.iter().enumerate() {
        cells
            .entry(intended_label(p))
            .or_default()
            .entry(intended_target(p))
            .or_default()
            .push(i);
    }
    let label_avail: Vec<usize> = cells.values().map(|c| c.values().map(Vec::len).sum()).collect();
    let label_take = round_robin(n, &label_avail);

    let mut chosen = Vec::new();
    for (k, (by_target, take)) in cells.values().zip(label_take).enumerate() {
        let avail: Vec<usize> = by_target.values().map(Vec::len).collect();
        for (j, (members, m)) in by_target.values().zip(round_robin(take, &avail)).enumerate() {
            let mut rng = sub_rng(seed, &[k as u64, j as u64]);
            let mut picked: Vec<usize> = index::sample(&mut rng, members.len(), m).into_iter().collect();
            picked.sort_unstable();
            chosen.extend(picked.into_iter().map(|i| members[i]));
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Build the annotation plan. Each setup contributes `items_per_setup`
/// posts, so the plan scales with the number of setups supplied.
pub fn plan_sessions(setups: &[(String, Vec<Post>)], config: &PlanConfig) -> Result<SessionPlan> {
    config.validate()?;
    if setups.is_empty() {
        return Err(Error::Input("no generated corpora to plan from".into()));
    }
    let names: BTreeSet<&str> = setups.iter().map(|(n, _)| n.as_str()).collect();
    if names.len() != setups.len() {
        return Err(Error::Input("setup names must be unique".into()));
    }

    let mut picked: Vec<(&str, &Post)> = Vec::new();
    for (s, (name, posts)) in setups.iter().enumerate() {
        if posts.is_empty() {
            return Err(Error::Input(format!("setup {name} has no posts")));
        }
        let idx = stratify(posts, config.items_per_setup, crate::derive_seed(config.seed, &[1, s as u64]));
        picked.extend(idx.into_iter().map(|i| (name.as_str(), &posts[i])));
    }

    // Opaque ids come from a shuffled order so they carry no setup or cell.
    let mut order: Vec<usize> = (0..picked.len()).collect();
    order.shuffle(&mut sub_rng(config.seed, &[2]));
    let n_overlap = (config.overlap_fraction * picked.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    let overlap: BTreeSet<usize> = index::sample(&mut sub_rng(config.seed, &[3]), picked.len(), n_overlap.min(picked.len()))
        .into_iter()
        .collect();

    let mut items = Vec::with_capacity(picked.len());
    let mut shards = vec![Vec::new(); config.annotators];
    for (pos, &i) in order.iter().enumerate() {
        let (setup, post) = picked[i];
        let item = PlanItem {
            item_id: format!("item-{:05}", pos + 1),
            setup: setup.to_string(),
            post_id: post.post_id.clone(),
            text: post.text.clone(),
            intended_label: intended_label(post),
            intended_target: intended_target(post),
            target_match_applies: target_conditioned(post),
            overlap: overlap.contains(&pos),
        };
        if !item.overlap {
            let k = shards.iter().map(Vec::len).enumerate().min_by_key(|&(_, l)| l).unwrap().0;
            shards[k].push(item.item_id.clone());
        }
        items.push(item);
    }
    Ok(SessionPlan {
        config: config.clone(),
        items,
        shards,
    })
}

impl SessionPlan {
    pub fn item(&self, item_id: &str) -> Option<&PlanItem> {
        self.items
            .binary_search_by(|it| it.item_id.as_str().cmp(item_id))
            .ok()
            .map(|i| &self.items[i])
    }

    pub fn overlap_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter(|it| it.overlap).map(|it| it.item_id.as_str())
    }

    /// The seeded queue for an annotator assigned to `shard`: the shared
    /// overlap slice plus that shard, shuffled per annotator.
    pub fn queue(&self, shard: usize, annotator_id: &str) -> Vec<String> {
        let mut q: Vec<String> = self.overlap_ids().map(str::to_string).collect();
        if let Some(own) = self.shards.get(shard) {
            q.extend(own.iter().cloned());
        }
        q.shuffle(&mut sub_rng(self.config.seed, &[4, shard as u64, fnv1a(annotator_id.as_bytes())]));
        q
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: SessionPlan = serde_json::from_str(&text)?;
        if plan.shards.len() != plan.config.annotators {
            return Err(Error::Schema(format!("{}: shard count does not match config", path.display())));
        }
        Ok(plan)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::pipeline::write_json(path, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Provenance, SourceMeta};

    pub(crate) fn generated(setup: &str, n_per_cell: usize, with_target: bool) -> Vec<Post> {
        let targets: Vec<Option<TargetIdentity>> = if with_target {
            TargetIdentity::ALL.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let mut out = Vec::new();
        for label in [Label::Hateful, Label::NonHateful] {
            for &t in &targets {
                for k in 0..n_per_cell {
                    out.push(Post {
                        post_id: format!("{setup}-{}-{}-{k}", label, t.map_or("none", |t| t.as_str())),
                        text: format!("text {setup} {k}"),
                        label,
                        targets: t.into_iter().collect(),
                        provenance: Provenance::Generated,
                        source_meta: Some(SourceMeta {
                            with_target: Some(with_target),
                            intended_label: Some(label),
                            intended_target: t,
                            ..Default::default()
                        }),
                    });
                }
            }
        }
        out
    }

    #[test]
    fn per_setup_stratification_is_even() {
        let setups: Vec<(String, Vec<Post>)> = (0..16)
            .map(|s| {
                let name = format!("setup{s}");
                let posts = generated(&name, if s % 2 == 0 { 20 } else { 40 }, s % 2 == 0);
                (name, posts)
            })
            .collect();
        let plan = plan_sessions(&setups, &PlanConfig::default()).unwrap();
        assert_eq!(plan.items.len(), 70 * 16);
        for (name, _) in &setups {
            let items: Vec<&PlanItem> = plan.items.iter().filter(|i| &i.setup == name).collect();
            assert_eq!(items.len(), 70);
            let hateful = items.iter().filter(|i| i.intended_label.is_hateful()).count();
            assert_eq!(hateful, 35);
            if items[0].target_match_applies {
                for label in [Label::Hateful, Label::NonHateful] {
                    let mut per: BTreeMap<TargetIdentity, usize> = BTreeMap::new();
                    for i in items.iter().filter(|i| i.intended_label == label) {
                        *per.entry(i.intended_target.unwrap()).or_default() += 1;
                    }
                    assert_eq!(per.len(), 7);
                    assert!(per.values().all(|&c| c == 5));
                }
            }
        }
        assert_eq!(plan.items.iter().filter(|i| i.overlap).count(), 112);
    }

    #[test]
    fn fewer_setups_scale_down() {
        let setups = vec![("a".to_string(), generated("a", 10, true))];
        let plan = plan_sessions(&setups, &PlanConfig::default()).unwrap();
        assert_eq!(plan.items.len(), 70);
        assert_eq!(plan.items.iter().filter(|i| i.overlap).count(), 7);
    }

    #[test]
    fn scarce_cells_are_topped_up_elsewhere() {
        let mut posts = generated("a", 30, false);
        posts.retain(|p| p.label.is_hateful() || p.post_id.ends_with("-0"));
        let plan = plan_sessions(&[("a".into(), posts)], &PlanConfig::default()).unwrap();
        assert_eq!(plan.items.len(), 31);
        let cfg = PlanConfig { items_per_setup: 20, ..Default::default() };
        let setups = vec![("a".to_string(), generated("a", 30, false))];
        let plan = plan_sessions(&setups, &cfg).unwrap();
        assert_eq!(plan.items.iter().filter(|i| i.intended_label.is_hateful()).count(), 10);
    }

    #[test]
    fn queues_share_overlap_and_split_the_rest() {
        let setups = vec![("a".to_string(), generated("a", 10, true)), ("b".to_string(), generated("b", 40, false))];
        let plan = plan_sessions(&setups, &PlanConfig::default()).unwrap();
        let q0: BTreeSet<String> = plan.queue(0, "ann1").into_iter().collect();
        let q1: BTreeSet<String> = plan.queue(1, "ann2").into_iter().collect();
        let overlap: BTreeSet<String> = plan.overlap_ids().map(str::to_string).collect();
        assert_eq!(q0.intersection(&q1).cloned().collect::<BTreeSet<_>>(), overlap);
        assert_eq!(q0.len() + q1.len() - overlap.len(), plan.items.len());
        assert_eq!(plan.queue(0, "ann1"), plan.queue(0, "ann1"));
        assert!(plan.items.windows(2).all(|w| w[0].item_id < w[1].item_id));
    }

    #[test]
    fn plan_is_seeded() {
        let setups = vec![("a".to_string(), generated("a", 10, true))];
        let a = plan_sessions(&setups, &PlanConfig::default()).unwrap();
        assert_eq!(a, plan_sessions(&setups, &PlanConfig::default()).unwrap());
        let other = plan_sessions(&setups, &PlanConfig { seed: 7, ..Default::default() }).unwrap();
        assert_ne!(a, other);
    }
}
