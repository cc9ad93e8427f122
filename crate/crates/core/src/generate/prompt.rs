use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Post, TargetIdentity};
use crate::error::{Error, Result};

/// Number of demonstrations shown in a few-shot prompt.
pub const DEMONSTRATIONS: usize = 3;

const PREFIX: &str = "Write a ";
const BODY: &str = "social media post";
const HATEFUL: &str = "hateful ";
const ABOUT: &str = " about ";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    /// Label-conditioned training sequences for an external finetuning run.
    FinetuneExport,
    /// Instruction with three matching gold demonstrations.
    FewShot,
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptMode::FinetuneExport => "finetune_export",
            PromptMode::FewShot => "few_shot",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromptSpec {
    pub mode: PromptMode,
    pub intended_label: Label,
    pub target: Option<TargetIdentity>,
    pub demonstrations: Vec<Post>,
}

impl PromptSpec {
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            PromptMode::FinetuneExport if !self.demonstrations.is_empty() => Err(Error::Contract(
                "finetune-export prompts take no demonstrations".into(),
            )),
            PromptMode::FewShot => {
                if self.demonstrations.len() != DEMONSTRATIONS {
                    return Err(Error::Contract(format!(
                        "few-shot prompts need exactly {DEMONSTRATIONS} demonstrations, got {}",
                        self.demonstrations.len()
                    )));
                }
                for d in &self.demonstrations {
                    if d.label != self.intended_label {
                        return Err(Error::Contract(format!(
                            "demonstration {} is {} but the prompt asks for {}",
                            d.post_id, d.label, self.intended_label
                        )));
                    }
                    if let Some(t) = self.target {
                        if !d.targets.contains(&t) {
                            return Err(Error::Contract(format!(
                                "demonstration {} is not about {t}",
                                d.post_id
                            )));
                        }
                    }
                }
                Ok(())
            }
            PromptMode::FinetuneExport => Ok(()),
        }
    }
}

/// The instruction line: `Write a [hateful ]social media post[ about t1, t2]:`.
///
/// Targets are listed alphabetically and deduplicated.
pub fn instruction(label: Label, targets: &[TargetIdentity]) -> String {
    let mut targets = targets.to_vec();
    targets.sort();
    targets.dedup();
    let mut s = String::from(PREFIX);
    if label.is_hateful() {
        s.push_str(HATEFUL);
    }
    s.push_str(BODY);
    if !targets.is_empty() {
        s.push_str(ABOUT);
        let names: Vec<&str> = targets.iter().map(|t| t.as_str()).collect();
        s.push_str(&names.join(", "));
    }
    s.push(':');
    s
}

fn single_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn build_prompt(spec: &PromptSpec) -> Result<String> {
    spec.validate()?;
    let targets: Vec<TargetIdentity> = spec.target.into_iter().collect();
    let line = instruction(spec.intended_label, &targets);
    let mut prompt = String::new();
    for demo in &spec.demonstrations {
        prompt.push_str(&line);
        prompt.push('\n');
        prompt.push_str(&single_line(&demo.text));
        prompt.push_str("\n\n");
    }
    prompt.push_str(&line);
    Ok(prompt)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedInstruction {
    pub label: Label,
    pub targets: Vec<TargetIdentity>,
}

/// Parse a single instruction line.
pub fn parse_instruction(line: &str) -> Option<ParsedInstruction> {
    let rest = line.strip_prefix(PREFIX)?.strip_suffix(':')?;
    let (label, rest) = match rest.strip_prefix(HATEFUL) {
        Some(r) => (Label::Hateful, r),
        None => (Label::NonHateful, rest),
    };
    let rest = rest.strip_prefix(BODY)?;
    let targets = if rest.is_empty() {
        Vec::new()
    } else {
        rest.strip_prefix(ABOUT)?
            .split(", ")
            .map(|t| t.parse().ok())
            .collect::<Option<Vec<_>>>()?
    };
    Some(ParsedInstruction { label, targets })
}

/// Recover the intended label and targets from a full prompt: the final line
/// is always the bare instruction.
pub fn parse_prompt(prompt: &str) -> Option<ParsedInstruction> {
    parse_instruction(prompt.lines().last()?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub prompt: String,
    pub text: String,
}

impl FinetuneRecord {
    /// The label-encoded training sequence: prompt, one space, text.
    pub fn sequence(&self) -> String {
        format!("{} {}", self.prompt, self.text)
    }
}

pub fn export_finetune_corpus(gold: &[Post], with_target: bool) -> Result<Vec<FinetuneRecord>> {
    if gold.is_empty() {
        return Err(Error::Input("finetune export needs gold posts".into()));
    }
    Ok(gold
        .iter()
        .map(|post| {
            let targets: Vec<TargetIdentity> = if with_target {
                post.targets.iter().copied().collect()
            } else {
                Vec::new()
            };
            FinetuneRecord {
                prompt: instruction(post.label, &targets),
                text: post.text.clone(),
            }
        })
        .collect())
}

fn cell_name(label: Label, target: Option<TargetIdentity>) -> String {
    match target {
        Some(t) => format!("({label}, {t})"),
        None => format!("({label}, any target)"),
    }
}

pub fn matching_posts(gold: &[Post], label: Label, target: Option<TargetIdentity>) -> Vec<&Post> {
    gold.iter()
        .filter(|p| p.label == label && target.is_none_or(|t| p.targets.contains(&t)))
        .collect()
}

/// Uniformly sample `k` distinct gold posts with the given label (and target).
pub fn select_demonstrations<R: Rng + ?Sized>(
    gold: &[Post],
    label: Label,
    target: Option<TargetIdentity>,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Post>> {
    let pool = matching_posts(gold, label, target);
    if pool.len() < k {
        return Err(Error::Scarcity {
            cell: cell_name(label, target),
            needed: k,
            found: pool.len(),
        });
    }
    Ok(index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect())
}
