use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Strategy};
use super::manifest::{check_upstream, manifest_path, write_json, RunManifest, StageBuilder, TIMINGS_FILE};
use crate::classifier::{filter_generated, train, ExternalScores, LinearModel, Scorer, TrainConfig};
use crate::corpus::{aggregate, corpus_stats, read_annotations, read_corpus, sample_gold, write_corpus, Post, TargetIdentity};
use crate::eda::{eda_augment_corpus, EdaConfig, EdaOperation, Stopwords, SynonymLexicon};
use crate::error::{Error, Result};
use crate::evaluation::{aso_matrix, evaluate, hatecheck_evaluate, read_hatecheck, AsoComparison, EvalReport, HateCheckReport};
use crate::generate::{export_finetune_corpus, generate_dataset, plan_quotas};
use crate::util::{derive_seed, mean_std, sub_rng};

// Sub-seed streams derived from each fold seed.
const EDA_STREAM: u64 = 1;
const GENERATE_STREAM: u64 = 2;
const FILTER_TRAIN_STREAM: u64 = 3;
const FILTER_CAP_STREAM: u64 = 4;
const MIX_STREAM: u64 = 5;
const TRAIN_STREAM: u64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (0 for a single run).
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        MeanStd {
            mean,
            std,
            n: values.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub macro_f1: MeanStd,
    pub hate_f1: MeanStd,
    /// Over the seeds where the target occurs in the evaluation set.
    pub per_target_hate_f1: BTreeMap<TargetIdentity, MeanStd>,
    pub per_seed_macro_f1: BTreeMap<u64, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seeds: Vec<u64>,
    pub strategies: BTreeMap<Strategy, StrategySummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HateCheckSummary {
    pub seeds: Vec<u64>,
    /// Strategy → category → hate-F1 over seeds.
    pub per_category: BTreeMap<Strategy, BTreeMap<TargetIdentity, MeanStd>>,
    /// Strategy → HateCheck identity → hate-F1 over seeds.
    pub per_target: BTreeMap<Strategy, BTreeMap<String, MeanStd>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsoReport {
    pub seeds: Vec<u64>,
    pub macro_f1: Vec<AsoComparison>,
    pub hate_f1: Vec<AsoComparison>,
}

/// Stage runner over one output directory. Every stage records digests of
/// what it read and wrote, and refuses to read run-directory files that are
/// missing from the manifest or changed since they were written.
pub struct Pipeline {
    config: RunConfig,
    root: PathBuf,
    manifest: RunManifest,
    timings: BTreeMap<String, f64>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn subsample(posts: &[Post], n: usize, seed: u64, stream: &[u64]) -> Vec<Post> {
    if posts.len() <= n {
        return posts.to_vec();
    }
    let mut idx = index::sample(&mut sub_rng(seed, stream), posts.len(), n).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| posts[i].clone()).collect()
}

/// Repeat `gold` in order until `size` posts; later copies get suffixed ids.
pub fn oversample(gold: &[Post], size: usize) -> Vec<Post> {
    (0..size)
        .map(|i| {
            let mut p = gold[i % gold.len()].clone();
            let copy = i / gold.len();
            if copy > 0 {
                p.post_id = format!("{}~copy-{copy}", p.post_id);
            }
            p
        })
        .collect()
}

impl Pipeline {
    pub fn open(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let root = config.paths.out_dir.clone();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let digest = config.digest();
        let path = manifest_path(&root);
        let manifest = match path.exists() {
            true => {
                let m = RunManifest::load(&path)?;
                if m.config_digest == digest {
                    m
                } else {
                    log::warn!("configuration changed since the last run; starting a fresh manifest");
                    RunManifest::new(digest, config.backend.id())
                }
            }
            false => RunManifest::new(digest, config.backend.id()),
        };
        let timings_path = root.join(TIMINGS_FILE);
        let timings = if timings_path.exists() && !manifest.stages.is_empty() {
            read_json(&timings_path)?
        } else {
            BTreeMap::new()
        };
        Ok(Pipeline {
            config,
            root,
            manifest,
            timings,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn out_dir(&self) -> &Path {
        &self.root
    }

    pub fn fold_dir(&self, seed: u64) -> PathBuf {
        self.root.join(format!("seed-{seed}"))
    }

    pub fn training_set_path(&self, seed: u64, strategy: Strategy) -> PathBuf {
        self.fold_dir(seed).join(format!("train-{strategy}.jsonl"))
    }

    pub fn model_path(&self, seed: u64, strategy: Strategy) -> PathBuf {
        self.fold_dir(seed).join(format!("model-{strategy}.json"))
    }

    pub fn eval_report_path(&self, seed: u64, strategy: Strategy) -> PathBuf {
        self.fold_dir(seed).join(format!("eval-{strategy}.json"))
    }

    fn commit(&mut self, builder: StageBuilder<'_>, started: Instant) -> Result<()> {
        let (name, record) = builder.finish();
        log::info!("stage {name} done in {:.2}s", started.elapsed().as_secs_f64());
        self.timings.insert(name.clone(), started.elapsed().as_secs_f64());
        self.manifest.stages.insert(name, record);
        self.manifest.save(&manifest_path(&self.root))?;
        write_json(&self.root.join(TIMINGS_FILE), &self.timings)
    }

    /// Record `path` as an input, checking it against the manifest when it
    /// lives inside the run directory.
    fn use_input(&self, b: &mut StageBuilder<'_>, path: &Path) -> Result<()> {
        if path.starts_with(&self.root) {
            check_upstream(&self.manifest, &self.root, path, &b.name)?;
        } else if !path.exists() {
            return Err(Error::Dependency {
                stage: b.name.clone(),
                missing: path.display().to_string(),
            });
        }
        b.input(path)
    }

    fn corpus_path(&self) -> Result<PathBuf> {
        if self.config.paths.annotations.is_some() {
            Ok(self.root.join("ingest/corpus.jsonl"))
        } else {
            self.config
                .paths
                .gold
                .clone()
                .ok_or_else(|| Error::Config("set paths.gold or paths.annotations".into()))
        }
    }

    fn eval_set_path(&self, seed: u64) -> PathBuf {
        match &self.config.paths.eval {
            Some(p) => p.clone(),
            None => self.fold_dir(seed).join("heldout.jsonl"),
        }
    }

    fn lexicon(&self) -> Result<(Stopwords, SynonymLexicon, Vec<PathBuf>)> {
        let mut used = Vec::new();
        let stopwords = match &self.config.paths.stopwords {
            Some(p) => {
                used.push(p.clone());
                Stopwords::load(p)?
            }
            None => Stopwords::bundled(),
        };
        let lexicon = match &self.config.paths.lexicon {
            Some(p) => {
                used.push(p.clone());
                SynonymLexicon::load(p, &stopwords)?
            }
            None => SynonymLexicon::bundled(&stopwords),
        };
        Ok((stopwords, lexicon, used))
    }

    pub fn ingest(&mut self) -> Result<()> {
        let started = Instant::now();
        let src = self
            .config
            .paths
            .annotations
            .clone()
            .ok_or_else(|| Error::Config("ingest needs paths.annotations".into()))?;
        let root = self.root.clone();
        let mut b = StageBuilder::new("ingest", &root);
        self.use_input(&mut b, &src)?;
        let raw = read_annotations(&src)?;
        let agg = aggregate(&raw)?;
        let corpus = root.join("ingest/corpus.jsonl");
        write_corpus(&corpus, &agg.posts)?;
        let excluded = root.join("ingest/excluded.json");
        write_json(&excluded, &agg.excluded)?;
        let stats = root.join("ingest/stats.json");
        write_json(&stats, &corpus_stats(&agg.posts))?;
        for p in [&corpus, &excluded, &stats] {
            b.output(p)?;
        }
        b.count("annotations", raw.len());
        b.count("posts", agg.posts.len());
        b.count("excluded", agg.excluded.len());
        self.commit(b, started)
    }

    pub fn sample(&mut self, seed: u64) -> Result<()> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new(format!("seed-{seed}/sample"), &root);
        let src = self.corpus_path()?;
        self.use_input(&mut b, &src)?;
        let corpus = read_corpus(&src)?;
        let sample = sample_gold(&corpus, self.config.gold_sample_n, seed)?;
        let dir = self.fold_dir(seed);
        let out = dir.join("sample.jsonl");
        write_corpus(&out, &sample)?;
        b.output(&out)?;
        let stats = corpus_stats(&sample);
        b.count("sample", sample.len());
        b.count("sample.hateful", stats.hateful_posts);
        b.count("sample.untargeted", stats.untargeted_count);
        for (t, n) in &stats.per_target_counts {
            b.count(format!("sample.target.{t}"), *n);
        }
        if self.config.paths.eval.is_none() {
            let chosen: HashSet<&str> = sample.iter().map(|p| p.post_id.as_str()).collect();
            let heldout: Vec<Post> = corpus.iter().filter(|p| !chosen.contains(p.post_id.as_str())).cloned().collect();
            let path = dir.join("heldout.jsonl");
            write_corpus(&path, &heldout)?;
            b.output(&path)?;
            b.count("heldout", heldout.len());
        }
        self.commit(b, started)
    }

    pub fn eda(&mut self, seed: u64) -> Result<()> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new(format!("seed-{seed}/eda"), &root);
        let dir = self.fold_dir(seed);
        let sample_path = dir.join("sample.jsonl");
        self.use_input(&mut b, &sample_path)?;
        let (stopwords, lexicon, used) = self.lexicon()?;
        for p in &used {
            self.use_input(&mut b, p)?;
        }
        let sample = read_corpus(&sample_path)?;
        let config = EdaConfig {
            alpha: self.config.eda.alpha,
            deletion_p: self.config.eda.deletion_p,
            seed: derive_seed(seed, &[EDA_STREAM]),
        };
        let posts = eda_augment_corpus(&sample, self.config.eda_total, &config, &lexicon, &stopwords)?;
        let out = dir.join("eda.jsonl");
        write_corpus(&out, &posts)?;
        b.output(&out)?;
        b.count("eda", posts.len());
        for op in EdaOperation::ALL {
            let n = posts
                .iter()
                .filter(|p| p.source_meta.as_ref().and_then(|m| m.eda_operation) == Some(op))
                .count();
            b.count(format!("eda.{}", op.short_name()), n);
        }
        self.commit(b, started)
    }

    pub fn export_finetune(&mut self, seed: u64) -> Result<()> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new(format!("seed-{seed}/export-finetune"), &root);
        let dir = self.fold_dir(seed);
        let sample_path = dir.join("sample.jsonl");
        self.use_input(&mut b, &sample_path)?;
        let records = export_finetune_corpus(&read_corpus(&sample_path)?, self.config.with_target)?;
        let out = dir.join("finetune.jsonl");
        crate::corpus::write_jsonl(&out, &records)?;
        b.output(&out)?;
        b.count("records", records.len());
        self.commit(b, started)
    }

    pub fn generate(&mut self, seed: u64) -> Result<()> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new(format!("seed-{seed}/generate"), &root);
        let dir = self.fold_dir(seed);
        let sample_path = dir.join("sample.jsonl");
        self.use_input(&mut b, &sample_path)?;
        let sample = read_corpus(&sample_path)?;
        let cfg = &self.config;
        let plan = plan_quotas(cfg.generation_total, cfg.with_target, cfg.generation.batch_size)?;
        let backend = cfg.backend.build();
        let output = match generate_dataset(
            &sample,
            backend.as_ref(),
            cfg.prompt_mode,
            cfg.with_target,
            &plan,
            &cfg.generation,
            derive_seed(seed, &[GENERATE_STREAM]),
            &cfg.generate_options,
        ) {
            Ok(o) => o,
            Err(Error::PartialGeneration { produced, source }) => {
                let partial = dir.join("candidates.partial.jsonl");
                write_corpus(&partial, &produced)?;
                log::error!("generation failed; {} candidates kept in {}", produced.len(), partial.display());
                return Err(Error::PartialGeneration { produced, source });
            }
            Err(e) => return Err(e),
        };
        let out = dir.join("candidates.jsonl");
        write_corpus(&out, &output.posts)?;
        let report = dir.join("generation_report.json");
        write_json(&report, &output.report)?;
        b.output(&out)?;
        b.output(&report)?;
        b.count("planned", plan.planned());
        b.count("generated", output.posts.len());
        b.count("shortfall", output.report.shortfall);
        for cell in &output.report.cells {
            let target = cell.target.map_or("any", |t| t.as_str());
            b.count(format!("generated.{}.{target}", cell.label), cell.produced);
        }
        self.commit(b, started)
    }

    /// Label-consistency filtering. With `scores`, external probabilities
    /// replace the filter classifier trained on the gold sample.
    pub fn filter(&mut self, seed: u64, scores: Option<&Path>) -> Result<()> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new(format!("seed-{seed}/filter"), &root);
        let dir = self.fold_dir(seed);
        let candidates_path = dir.join("candidates.jsonl");
        self.use_input(&mut b, &candidates_path)?;
        let candidates = read_corpus(&candidates_path)?;

        let external;
        let model;
        let scorer: &dyn Scorer = match scores {
            Some(p) => {
                self.use_input(&mut b, p)?;
                external = ExternalScores::load(p)?;
                &external
            }
            None => {
                let sample_path = dir.join("sample.jsonl");
                self.use_input(&mut b, &sample_path)?;
                let tc = TrainConfig {
                    seed: derive_seed(seed, &[FILTER_TRAIN_STREAM]),
                    ..self.config.filter_training.clone()
                };
                model = train(&read_corpus(&sample_path)?, &tc, &self.config.features)?;
                let model_path = dir.join("filter_model.json");
                model.save(&model_path)?;
                b.output(&model_path)?;
                &model
            }
        };
        let (kept, report) = filter_generated(
            &candidates,
            scorer,
            self.config.cap_per_label,
            derive_seed(seed, &[FILTER_CAP_STREAM]),
        )?;
        let out = dir.join("filtered.jsonl");
        write_corpus(&out, &kept)?;
        let report_path = dir.join("filter_report.json");
        write_json(&report_path, &report)?;
        b.output(&out)?;
        b.output(&report_path)?;
        b.count("candidates", candidates.len());
        b.count("kept", kept.len());
        for (label, s) in &report.per_label {
            b.count(format!("passed.{label}"), s.passed);
            b.count(format!("kept.{label}"), s.kept);
            b.count(format!("shortfall.{label}"), s.shortfall);
        }
        for cell in &report.cells {
            let target = cell.target.map_or("any", |t| t.as_str());
            b.count(format!("passed.{}.{target}", cell.label), cell.passed);
        }
        self.commit(b, started)
    }

    pub fn mix(&mut self, seed: u64) -> Result<()> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new(format!("seed-{seed}/mix"), &root);
        let dir = self.fold_dir(seed);
        let strategies = self.config.strategies.clone();
        let sample_path = dir.join("sample.jsonl");
        self.use_input(&mut b, &sample_path)?;
        let gold = read_corpus(&sample_path)?;
        let eda = if strategies.iter().any(|s| s.needs_eda()) {
            let p = dir.join("eda.jsonl");
            self.use_input(&mut b, &p)?;
            read_corpus(&p)?
        } else {
            Vec::new()
        };
        let generated = if strategies.iter().any(|s| s.needs_generated()) {
            let p = dir.join("filtered.jsonl");
            self.use_input(&mut b, &p)?;
            read_corpus(&p)?
        } else {
            Vec::new()
        };

        let aug = self.config.eda_total;
        let mix_seed = derive_seed(seed, &[MIX_STREAM]);
        for (si, strategy) in strategies.iter().enumerate() {
            let (set, wanted) = match strategy {
                Strategy::None => (gold.clone(), 0),
                Strategy::Oversample => (oversample(&gold, gold.len() + aug), aug),
                Strategy::Eda => {
                    let mut set = gold.clone();
                    set.extend(subsample(&eda, aug, mix_seed, &[si as u64, 0]));
                    (set, aug)
                }
                Strategy::Generated => {
                    let mut set = gold.clone();
                    set.extend(subsample(&generated, aug, mix_seed, &[si as u64, 1]));
                    (set, aug)
                }
                Strategy::Mix => {
                    let m = &self.config.mixture;
                    let mut set = gold.clone();
                    set.extend(subsample(&eda, m.eda, mix_seed, &[si as u64, 0]));
                    set.extend(subsample(&generated, m.generated, mix_seed, &[si as u64, 1]));
                    (set, m.eda + m.generated)
                }
            };
            let added = set.len() - gold.len();
            if added < wanted {
                log::warn!("{strategy}: {added} of {wanted} augmentation posts available");
            }
            let path = self.training_set_path(seed, *strategy);
            write_corpus(&path, &set)?;
            b.output(&path)?;
            b.count(format!("train.{strategy}"), set.len());
            b.count(format!("augmentation.{strategy}"), added);
            b.count(format!("shortfall.{strategy}"), wanted - added);
        }
        self.commit(b, started)
    }

    pub fn train(&mut self) -> Result<()> {
        for seed in self.config.seeds.clone() {
            self.train_fold(seed)?;
        }
        Ok(())
    }

    pub fn train_fold(&mut self, seed: u64) -> Result<()> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new(format!("seed-{seed}/train"), &root);
        let tc = TrainConfig {
            seed: derive_seed(seed, &[TRAIN_STREAM]),
            ..self.config.downstream_training.clone()
        };
        for strategy in self.config.strategies.clone() {
            let data = self.training_set_path(seed, strategy);
            self.use_input(&mut b, &data)?;
            let model = train(&read_corpus(&data)?, &tc, &self.config.features)?;
            let path = self.model_path(seed, strategy);
            model.save(&path)?;
            b.output(&path)?;
            if let Some(meta) = &model.train_meta {
                b.count(format!("examples.{strategy}"), meta.examples);
                if let Some(e) = meta.selected_epoch {
                    b.count(format!("selected_epoch.{strategy}"), e);
                }
            }
        }
        self.commit(b, started)
    }

    /// Evaluate every (seed, strategy) model and write the mean±stdev summary.
    pub fn eval(&mut self) -> Result<RunSummary> {
        let seeds = self.config.seeds.clone();
        for &seed in &seeds {
            self.eval_fold(seed)?;
        }
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new("summary", &root);
        let reports = self.collect_eval_reports(&mut b)?;
        let summary = summarize(&seeds, &reports);
        let path = root.join("summary.json");
        write_json(&path, &summary)?;
        b.output(&path)?;
        self.commit(b, started)?;
        Ok(summary)
    }

    pub fn eval_fold(&mut self, seed: u64) -> Result<()> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new(format!("seed-{seed}/eval"), &root);
        let eval_path = self.eval_set_path(seed);
        self.use_input(&mut b, &eval_path)?;
        let eval_set = read_corpus(&eval_path)?;
        b.count("eval", eval_set.len());
        for strategy in self.config.strategies.clone() {
            let model_path = self.model_path(seed, strategy);
            self.use_input(&mut b, &model_path)?;
            let model = LinearModel::load(&model_path)?;
            let report = evaluate(&eval_set, &model, seed)?;
            let path = self.eval_report_path(seed, strategy);
            write_json(&path, &report)?;
            b.output(&path)?;
        }
        self.commit(b, started)
    }

    fn collect_eval_reports(&self, b: &mut StageBuilder<'_>) -> Result<BTreeMap<Strategy, Vec<(u64, EvalReport)>>> {
        let mut out: BTreeMap<Strategy, Vec<(u64, EvalReport)>> = BTreeMap::new();
        for &strategy in &self.config.strategies {
            for &seed in &self.config.seeds {
                let path = self.eval_report_path(seed, strategy);
                self.use_input(b, &path)?;
                out.entry(strategy).or_default().push((seed, read_json(&path)?));
            }
        }
        Ok(out)
    }

    pub fn hatecheck(&mut self) -> Result<HateCheckSummary> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new("hatecheck", &root);
        let src = self
            .config
            .paths
            .hatecheck
            .clone()
            .ok_or_else(|| Error::Config("hatecheck needs paths.hatecheck".into()))?;
        self.use_input(&mut b, &src)?;
        let cases = read_hatecheck(&src)?;
        b.count("cases", cases.len());
        let mut reports: BTreeMap<Strategy, Vec<HateCheckReport>> = BTreeMap::new();
        for seed in self.config.seeds.clone() {
            for strategy in self.config.strategies.clone() {
                let model_path = self.model_path(seed, strategy);
                self.use_input(&mut b, &model_path)?;
                let report = hatecheck_evaluate(&cases, &LinearModel::load(&model_path)?)?;
                let path = self.fold_dir(seed).join(format!("hatecheck-{strategy}.json"));
                write_json(&path, &report)?;
                b.output(&path)?;
                reports.entry(strategy).or_default().push(report);
            }
        }
        let summary = HateCheckSummary {
            seeds: self.config.seeds.clone(),
            per_category: reports
                .iter()
                .map(|(s, rs)| (*s, pool(rs.iter().map(|r| r.per_category.iter().map(|(k, v)| (*k, v.hate_f1))))))
                .collect(),
            per_target: reports
                .iter()
                .map(|(s, rs)| (*s, pool(rs.iter().map(|r| r.per_target.iter().map(|(k, v)| (k.clone(), v.hate_f1))))))
                .collect(),
        };
        let path = root.join("hatecheck_summary.json");
        write_json(&path, &summary)?;
        b.output(&path)?;
        self.commit(b, started)?;
        Ok(summary)
    }

    /// Pairwise ASO over the per-seed scores of every strategy.
    pub fn aso(&mut self) -> Result<AsoReport> {
        let started = Instant::now();
        let root = self.root.clone();
        let mut b = StageBuilder::new("aso", &root);
        let reports = self.collect_eval_reports(&mut b)?;
        let systems = |metric: fn(&EvalReport) -> f64| -> Vec<(String, Vec<f64>)> {
            reports
                .iter()
                .map(|(s, rs)| (s.to_string(), rs.iter().map(|(_, r)| metric(r)).collect()))
                .collect()
        };
        let report = AsoReport {
            seeds: self.config.seeds.clone(),
            macro_f1: aso_matrix(&systems(|r| r.macro_f1), &self.config.aso)?,
            hate_f1: aso_matrix(&systems(|r| r.hate_f1), &self.config.aso)?,
        };
        let path = root.join("aso.json");
        write_json(&path, &report)?;
        b.output(&path)?;
        self.commit(b, started)?;
        Ok(report)
    }

    /// Every stage in order for every seed. Optional stages run when their
    /// inputs are configured.
    pub fn run_all(&mut self) -> Result<RunSummary> {
        if self.config.paths.annotations.is_some() {
            self.ingest()?;
        }
        let needs_eda = self.config.strategies.iter().any(|s| s.needs_eda());
        let needs_gen = self.config.strategies.iter().any(|s| s.needs_generated());
        for seed in self.config.seeds.clone() {
            self.sample(seed)?;
            if needs_eda {
                self.eda(seed)?;
            }
            if needs_gen {
                self.generate(seed)?;
                self.filter(seed, None)?;
            }
            self.mix(seed)?;
        }
        self.train()?;
        let summary = self.eval()?;
        if self.config.paths.hatecheck.is_some() {
            self.hatecheck()?;
        }
        if self.config.seeds.len() >= 2 && self.config.strategies.len() >= 2 {
            self.aso()?;
        }
        Ok(summary)
    }
}

/// Mean±stdev per key over runs; keys absent from a run are skipped for it.
fn pool<K: Ord, I: IntoIterator<Item = (K, f64)>>(runs: impl Iterator<Item = I>) -> BTreeMap<K, MeanStd> {
    let mut values: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for run in runs {
        for (k, v) in run {
            values.entry(k).or_default().push(v);
        }
    }
    values.into_iter().map(|(k, v)| (k, MeanStd::of(&v))).collect()
}

pub fn summarize(seeds: &[u64], reports: &BTreeMap<Strategy, Vec<(u64, EvalReport)>>) -> RunSummary {
    let strategies = reports
        .iter()
        .map(|(s, runs)| {
            let macro_f1: Vec<f64> = runs.iter().map(|(_, r)| r.macro_f1).collect();
            let hate_f1: Vec<f64> = runs.iter().map(|(_, r)| r.hate_f1).collect();
            (
                *s,
                StrategySummary {
                    macro_f1: MeanStd::of(&macro_f1),
                    hate_f1: MeanStd::of(&hate_f1),
                    per_target_hate_f1: pool(runs.iter().map(|(_, r)| r.per_target_hate_f1.clone())),
                    per_seed_macro_f1: runs.iter().map(|(seed, r)| (*seed, r.macro_f1)).collect(),
                },
            )
        })
        .collect();
    RunSummary {
        seeds: seeds.to_vec(),
        strategies,
    }
}

/// Plain-text table: one row per strategy, `mean±std` cells.
pub fn format_summary(summary: &RunSummary) -> String {
    let mut out = format!("{:<11} {:>13} {:>13}", "strategy", "macro-F1", "hate-F1");
    for t in TargetIdentity::ALL {
        out.push_str(&format!(" {:>13}", t.as_str()));
    }
    out.push('\n');
    let cell = |m: Option<&MeanStd>| match m {
        Some(m) => format!("{:.3}±{:.3}", m.mean, m.std),
        None => "-".into(),
    };
    for (s, row) in &summary.strategies {
        out.push_str(&format!(
            "{:<11} {:>13} {:>13}",
            s.as_str(),
            cell(Some(&row.macro_f1)),
            cell(Some(&row.hate_f1))
        ));
        for t in TargetIdentity::ALL {
            out.push_str(&format!(" {:>13}", cell(row.per_target_hate_f1.get(&t))));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    #[test]
    fn oversampling_repeats_in_order() {
        let gold: Vec<Post> = (0..3).map(|i| Post::gold(format!("g{i}"), "t", Label::Hateful, [])).collect();
        let set = oversample(&gold, 7);
        let ids: Vec<&str> = set.iter().map(|p| p.post_id.as_str()).collect();
        assert_eq!(ids, ["g0", "g1", "g2", "g0~copy-1", "g1~copy-1", "g2~copy-1", "g0~copy-2"]);
    }

    #[test]
    fn thirty_one_copies_of_a_thousand() {
        let gold: Vec<Post> = (0..1000).map(|i| Post::gold(format!("g{i}"), "t", Label::Hateful, [])).collect();
        let set = oversample(&gold, 1000 + 30_000);
        assert_eq!(set.len(), 31_000);
        assert_eq!(set.last().unwrap().post_id, "g999~copy-30");
    }

    #[test]
    fn subsample_keeps_order_and_is_seeded() {
        let posts: Vec<Post> = (0..50).map(|i| Post::gold(format!("{i:02}"), "t", Label::Hateful, [])).collect();
        let a = subsample(&posts, 10, 1, &[0]);
        assert_eq!(a, subsample(&posts, 10, 1, &[0]));
        assert!(a.windows(2).all(|w| w[0].post_id < w[1].post_id));
        assert_eq!(subsample(&posts, 80, 1, &[0]).len(), 50);
    }
}
