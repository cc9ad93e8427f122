//! Regenerates the test fixtures under `tests/fixtures/`.
//!
//! ```text
//! cargo run -p hsaug --example make_fixtures -- crates/core/tests/fixtures
//! ```
//!
//! The gold corpus is deliberately skewed: age and disability are rare, so a
//! 200-post sample holds only a handful of hateful examples for them. Its
//! hateful posts always carry a general slur; target-specific slurs appear
//! only some of the time. Evaluation posts lean on the target-specific slurs
//! instead, which is what generated data can teach for rare targets.

use std::fmt::Write as _;
use std::path::PathBuf;

use hsaug::corpus::{write_corpus, Label, Post, TargetIdentity};
use hsaug::generate::mock::{target_keywords, target_markers, FILLER_WORDS, FRIENDLY_WORDS, TOXIC_MARKERS};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use TargetIdentity::*;

struct Style {
    general_marker_p: f64,
    target_marker_p: f64,
    friendly_p: f64,
}

const GOLD_STYLE: Style = Style {
    general_marker_p: 1.0,
    target_marker_p: 0.4,
    friendly_p: 0.8,
};

const EVAL_STYLE: Style = Style {
    general_marker_p: 0.3,
    target_marker_p: 1.0,
    friendly_p: 0.6,
};

fn text(rng: &mut ChaCha8Rng, label: Label, targets: &[TargetIdentity], style: &Style) -> String {
    let mut words: Vec<&str> = Vec::new();
    for &t in targets {
        words.push(target_keywords(t).choose(rng).unwrap());
    }
    if label.is_hateful() {
        let general = rng.random_bool(style.general_marker_p);
        for &t in targets {
            // Untargeted or marker-free hateful text still needs some signal.
            if rng.random_bool(style.target_marker_p) || !general {
                words.push(target_markers(t).choose(rng).unwrap());
            }
        }
        if general || targets.is_empty() {
            words.push(TOXIC_MARKERS.choose(rng).unwrap());
        }
    } else if rng.random_bool(style.friendly_p) {
        words.push(FRIENDLY_WORDS.choose(rng).unwrap());
    }
    let len = rng.random_range(8..=16);
    let mut tokens: Vec<&str> = (0..len).map(|_| *FILLER_WORDS.choose(rng).unwrap()).collect();
    for w in words {
        let at = rng.random_range(0..=tokens.len());
        tokens.insert(at, w);
    }
    tokens.join(" ")
}

fn corpus(rng: &mut ChaCha8Rng, prefix: &str, groups: &[(&[TargetIdentity], usize)], style: &Style) -> Vec<Post> {
    let mut posts = Vec::new();
    for (targets, n) in groups {
        for i in 0..*n {
            let label = Label::from_hateful(i % 2 == 0);
            let id = format!("{prefix}{:04}", posts.len());
            posts.push(Post::gold(id, text(rng, label, targets, style), label, targets.iter().copied()));
        }
    }
    posts
}

fn annotations_csv(rng: &mut ChaCha8Rng, gold: &[Post]) -> String {
    let mut out = String::from("comment_id,annotator_id,text,hatespeech");
    for t in TargetIdentity::ALL {
        write!(out, ",target_{t}").unwrap();
    }
    out.push_str(",target_race_black\n");
    for (k, post) in gold.iter().take(60).enumerate() {
        // Every tenth post gets scores 0,1,2: a mean of exactly 1.
        let scores: [u8; 3] = if k % 10 == 9 {
            [0, 1, 2]
        } else if post.label.is_hateful() {
            [2, 2, rng.random_range(1..=2)]
        } else {
            [0, 0, rng.random_range(0..=1)]
        };
        let stray = *TargetIdentity::ALL.choose(rng).unwrap();
        for (a, score) in scores.iter().enumerate() {
            write!(out, "{},ann{},\"{}\",{score}", post.post_id, a + 1, post.text).unwrap();
            for t in TargetIdentity::ALL {
                // Two of three annotators agree on the gold targets; the third
                // adds a stray flag that must not survive aggregation.
                let flag = (a < 2 && post.targets.contains(&t)) || (a == 2 && t == stray);
                out.push_str(if flag { ",True" } else { ",False" });
            }
            // Race arrives through the subgroup column for the first annotator.
            out.push_str(if a == 0 && post.targets.contains(&Race) { ",1\n" } else { ",0\n" });
        }
    }
    out
}

fn hatecheck_csv() -> String {
    let idents: [(&str, TargetIdentity); 7] = [
        ("women", Gender),
        ("trans people", Gender),
        ("gay people", Sexuality),
        ("black people", Race),
        ("disabled people", Disability),
        ("Muslims", Religion),
        ("immigrants", Origin),
    ];
    let templates: [(&str, &str, Label); 7] = [
        ("derog_neg_emote_h", "I hate {I}.", Label::Hateful),
        ("derog_dehum_h", "{I} are scum and vermin.", Label::Hateful),
        ("derog_impl_h", "All {I} are {M}.", Label::Hateful),
        ("threat_dir_h", "{I} are trash and should disappear.", Label::Hateful),
        ("ident_neutral_nh", "We are a group of {I}.", Label::NonHateful),
        ("ident_pos_nh", "I love {I}, they are wonderful friends.", Label::NonHateful),
        ("counter_ref_nh", "Calling {I} {M} is wrong and we support them.", Label::NonHateful),
    ];
    let mut out = String::from("functionality,case_id,test_case,label_gold,target_ident\n");
    let mut id = 1;
    for (func, template, label) in templates {
        for (ident, category) in idents {
            let marker = target_markers(category)[0];
            let case = template.replace("{I}", ident).replace("{M}", marker);
            let gold = if label.is_hateful() { "hateful" } else { "non-hateful" };
            writeln!(out, "{func},{id},\"{case}\",{gold},{ident}").unwrap();
            id += 1;
        }
    }
    for thing in ["mondays", "traffic", "rainy weather"] {
        writeln!(out, "target_obj_nh,{id},\"I hate {thing}.\",non-hateful,none").unwrap();
        id += 1;
    }
    out
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/tests/fixtures".into()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);

    let gold_groups: &[(&[TargetIdentity], usize)] = &[
        (&[Race], 96),
        (&[Gender], 88),
        (&[Religion], 64),
        (&[Origin], 56),
        (&[Sexuality], 28),
        (&[Disability], 14),
        (&[Age], 10),
        (&[Gender, Race], 8),
        (&[Origin, Religion], 6),
        (&[], 30),
    ];
    let gold = corpus(&mut rng, "g", gold_groups, &GOLD_STYLE);
    assert_eq!(gold.len(), 400);
    write_corpus(&dir.join("gold.jsonl"), &gold).unwrap();

    let eval_groups: Vec<(&[TargetIdentity], usize)> = vec![
        (&[Age], 40),
        (&[Disability], 40),
        (&[Gender], 40),
        (&[Origin], 40),
        (&[Race], 40),
        (&[Religion], 40),
        (&[Sexuality], 40),
        (&[], 20),
    ];
    let eval = corpus(&mut rng, "e", &eval_groups, &EVAL_STYLE);
    write_corpus(&dir.join("eval.jsonl"), &eval).unwrap();

    std::fs::write(dir.join("annotations.csv"), annotations_csv(&mut rng, &gold)).unwrap();
    std::fs::write(dir.join("hatecheck.csv"), hatecheck_csv()).unwrap();
    println!("wrote fixtures to {}", dir.display());
}
