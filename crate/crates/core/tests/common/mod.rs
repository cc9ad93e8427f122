#![allow(dead_code)]

use std::path::{Path, PathBuf};

use hsaug::corpus::{Label, Post, TargetIdentity};
use hsaug::generate::mock::synthesize;
use hsaug::pipeline::{MixtureSizes, RunConfig};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// The small end-to-end setup: 400-post gold fixture, 200-post sample,
/// 2,000 mock generations, one fold per default seed.
pub fn fixture_config(out_dir: &Path) -> RunConfig {
    let fx = fixtures();
    let mut c = RunConfig::default();
    c.paths.gold = Some(fx.join("gold.jsonl"));
    c.paths.eval = Some(fx.join("eval.jsonl"));
    c.paths.hatecheck = Some(fx.join("hatecheck.csv"));
    c.paths.out_dir = out_dir.to_path_buf();
    c.gold_sample_n = 200;
    c.generation_total = 2000;
    c.cap_per_label = 600;
    c.eda_total = 1200;
    c.mixture = MixtureSizes { eda: 600, generated: 600 };
    c
}

/// A synthetic gold corpus of `n` posts in the mock vocabulary, alternating
/// labels and cycling through single targets plus untargeted posts.
pub fn synthetic_gold(n: usize, seed: u64) -> Vec<Post> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut choices: Vec<Option<TargetIdentity>> = TargetIdentity::ALL.iter().copied().map(Some).collect();
    choices.push(None);
    (0..n)
        .map(|i| {
            let label = Label::from_hateful(i % 2 == 0);
            let target = *choices.choose(&mut rng).unwrap();
            let targets: Vec<TargetIdentity> = target.into_iter().collect();
            let text = synthesize(label, &targets, 8, 20, &mut rng);
            Post::gold(format!("s{i:05}"), text, label, targets)
        })
        .collect()
}
