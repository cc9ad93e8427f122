//! Label- and target-conditioned generation of candidate synthetic posts.

mod http;
pub mod mock;
mod prompt;
mod quota;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use http::{HttpBackend, HttpBackendConfig};
pub use mock::{mock_generate, MockBackend};
pub use prompt::{
    build_prompt, export_finetune_corpus, instruction, matching_posts, parse_instruction, parse_prompt,
    select_demonstrations, FinetuneRecord, ParsedInstruction, PromptMode, PromptSpec, DEMONSTRATIONS,
};
pub use quota::{plan_quotas, GenerationParams, QuotaCell, QuotaPlan};

use crate::corpus::{Label, Post, Provenance, SourceMeta, TargetIdentity};
use crate::error::{Error, Result};
use crate::util::{derive_seed, sha256_hex, sub_rng};

/// Something that turns a prompt into `count` completions.
pub trait GenerationBackend: Send + Sync {
    /// Identity recorded in the provenance of every generated post.
    fn id(&self) -> String;

    fn generate(&self, prompt: &str, params: &GenerationParams, count: usize, seed: u64) -> Result<Vec<String>>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateOptions {
    /// Extra backend calls allowed per batch for empty or failed completions.
    pub retry_budget: usize,
    /// Concurrent backend calls.
    pub parallelism: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            retry_budget: 3,
            parallelism: 4,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellReport {
    pub label: Label,
    pub target: Option<TargetIdentity>,
    pub requested: usize,
    pub produced: usize,
    pub calls: usize,
    pub empty_dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub backend: String,
    pub mode: PromptMode,
    pub with_target: bool,
    pub cells: Vec<CellReport>,
    pub shortfall: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationOutput {
    pub posts: Vec<Post>,
    pub report: GenerationReport,
}

struct BatchOutput {
    posts: Vec<Post>,
    calls: usize,
    empty_dropped: usize,
}

fn truncate_tokens(text: &str, max_tokens: usize) -> String {
    text.split_whitespace().take(max_tokens).collect::<Vec<_>>().join(" ")
}

fn target_slug(target: Option<TargetIdentity>) -> &'static str {
    target.map_or("any", TargetIdentity::as_str)
}

#[allow(clippy::too_many_arguments)]
fn run_batch(
    gold: &[Post],
    backend: &dyn GenerationBackend,
    backend_id: &str,
    mode: PromptMode,
    with_target: bool,
    cell_index: usize,
    cell: &QuotaCell,
    batch_index: usize,
    want: usize,
    params: &GenerationParams,
    seed: u64,
    options: &GenerateOptions,
) -> Result<BatchOutput> {
    let mut rng = sub_rng(seed, &[cell_index as u64, batch_index as u64]);
    let demonstrations = match mode {
        PromptMode::FinetuneExport => Vec::new(),
        PromptMode::FewShot => select_demonstrations(gold, cell.label, cell.target, DEMONSTRATIONS, &mut rng)?,
    };
    let prompt = build_prompt(&PromptSpec {
        mode,
        intended_label: cell.label,
        target: cell.target,
        demonstrations,
    })?;
    let prompt_hash = sha256_hex(prompt.as_bytes())[..16].to_string();

    let mut texts: Vec<String> = Vec::with_capacity(want);
    let mut calls = 0;
    let mut empty_dropped = 0;
    let mut last_error = None;
    for attempt in 0..=options.retry_budget {
        if texts.len() >= want {
            break;
        }
        calls += 1;
        let call_seed = derive_seed(seed, &[cell_index as u64, batch_index as u64, attempt as u64]);
        match backend.generate(&prompt, params, want - texts.len(), call_seed) {
            Ok(completions) => {
                last_error = None;
                for c in completions {
                    let c = truncate_tokens(&c, params.max_tokens);
                    if c.is_empty() {
                        empty_dropped += 1;
                    } else if texts.len() < want {
                        texts.push(c);
                    }
                }
            }
            Err(e) => {
                log::warn!("backend call failed (cell {cell_index}, batch {batch_index}, attempt {attempt}): {e}");
                last_error = Some(e);
            }
        }
    }
    if let Some(e) = last_error {
        if texts.is_empty() {
            return Err(e);
        }
    }

    let posts = texts
        .into_iter()
        .enumerate()
        .map(|(j, text)| Post {
            post_id: format!(
                "gen-{}-{}-{batch_index:05}-{j:02}",
                cell.label,
                target_slug(cell.target)
            ),
            text,
            label: cell.label,
            targets: cell.target.into_iter().collect(),
            provenance: Provenance::Generated,
            source_meta: Some(SourceMeta {
                generator: Some(backend_id.to_string()),
                prompt_mode: Some(mode),
                with_target: Some(with_target),
                intended_label: Some(cell.label),
                intended_target: cell.target,
                prompt_hash: Some(prompt_hash.clone()),
                ..SourceMeta::default()
            }),
        })
        .collect();
    Ok(BatchOutput {
        posts,
        calls,
        empty_dropped,
    })
}

/// Drive `backend` over every cell of `plan`.
///
/// Each cell is served by `ceil(count / batch_size)` batches, each with its own
/// prompt (few-shot demonstrations are resampled per batch). Batches may run
/// concurrently but the output is always in (cell, batch) order and depends
/// only on the inputs and `seed`.
#[allow(clippy::too_many_arguments)]
pub fn generate_dataset(
    gold: &[Post],
    backend: &dyn GenerationBackend,
    mode: PromptMode,
    with_target: bool,
    plan: &QuotaPlan,
    params: &GenerationParams,
    seed: u64,
    options: &GenerateOptions,
) -> Result<GenerationOutput> {
    params.validate()?;
    if plan.with_target() != with_target {
        return Err(Error::Plan("quota plan and with_target flag disagree".into()));
    }
    if plan.batch_size != params.batch_size {
        return Err(Error::Plan(format!(
            "plan batch size {} differs from generation batch size {}",
            plan.batch_size, params.batch_size
        )));
    }
    if mode == PromptMode::FewShot {
        for cell in &plan.cells {
            let found = matching_posts(gold, cell.label, cell.target).len();
            if found < DEMONSTRATIONS {
                return Err(Error::Scarcity {
                    cell: format!("({}, {})", cell.label, target_slug(cell.target)),
                    needed: DEMONSTRATIONS,
                    found,
                });
            }
        }
    }

    let backend_id = backend.id();
    let batch = params.batch_size;
    let jobs: Vec<(usize, usize, usize)> = plan
        .cells
        .iter()
        .enumerate()
        .flat_map(|(ci, cell)| {
            (0..cell.count.div_ceil(batch)).map(move |b| (ci, b, batch.min(cell.count - b * batch)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism.max(1))
        .build()
        .map_err(|e| Error::Backend(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<BatchOutput>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(ci, b, want)| {
                run_batch(
                    gold, backend, &backend_id, mode, with_target, ci, &plan.cells[ci], b, want, params, seed,
                    options,
                )
            })
            .collect()
    });

    let mut cells: Vec<CellReport> = plan
        .cells
        .iter()
        .map(|c| CellReport {
            label: c.label,
            target: c.target,
            requested: c.count,
            ..CellReport::default()
        })
        .collect();
    let mut posts = Vec::new();
    let mut failure = None;
    for (&(ci, _, _), result) in jobs.iter().zip(results) {
        match result {
            Ok(out) => {
                cells[ci].produced += out.posts.len();
                cells[ci].calls += out.calls;
                cells[ci].empty_dropped += out.empty_dropped;
                posts.extend(out.posts);
            }
            Err(e) if failure.is_none() => failure = Some(e),
            Err(_) => {}
        }
    }
    if let Some(e) = failure {
        return Err(Error::PartialGeneration {
            produced: Box::new(posts),
            source: Box::new(e),
        });
    }

    let shortfall = cells.iter().map(|c| c.requested - c.produced).sum();
    if shortfall > 0 {
        log::warn!("generation fell {shortfall} short of the plan");
    }
    Ok(GenerationOutput {
        posts,
        report: GenerationReport {
            backend: backend_id,
            mode,
            with_target,
            cells,
            shortfall,
        },
    })
}

/// Per-cell candidate counts keyed by (intended label, intended target).
pub fn count_by_cell(posts: &[Post]) -> BTreeMap<(Label, Option<TargetIdentity>), usize> {
    let mut counts = BTreeMap::new();
    for p in posts {
        if let Some(label) = p.intended_label() {
            *counts.entry((label, p.intended_target())).or_default() += 1;
        }
    }
    counts
}
