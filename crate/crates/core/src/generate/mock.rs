//! Offline generation backend driven by a small phrase bank.
//!
//! Outputs are steered by the prompt's final instruction line: a keyword for
//! every named target, and toxic markers only when the instruction asks for a
//! hateful post.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::prompt::parse_prompt;
use super::quota::GenerationParams;
use super::GenerationBackend;
use crate::corpus::{Label, TargetIdentity};
use crate::error::Result;
use crate::util::{fnv1a, sub_rng};

pub fn target_keywords(target: TargetIdentity) -> &'static [&'static str] {
    match target {
        TargetIdentity::Age => &["elderly", "boomers", "teenagers", "seniors", "retirees", "pensioners"],
        TargetIdentity::Disability => &["disabled", "autistic", "blind", "deaf", "amputees", "paraplegics"],
        TargetIdentity::Gender => &["women", "feminists", "girls", "ladies", "mothers", "wives"],
        TargetIdentity::Origin => &["immigrants", "refugees", "foreigners", "migrants", "expats", "newcomers"],
        TargetIdentity::Race => &["blacks", "whites", "asians", "latinos", "hispanics", "africans"],
        TargetIdentity::Religion => &["muslims", "christians", "jews", "hindus", "catholics", "atheists"],
        TargetIdentity::Sexuality => &["gays", "lesbians", "bisexuals", "homosexuals", "queers", "pansexuals"],
    }
}

/// Derogatory words tied to one target; only ever emitted in hateful text.
pub fn target_markers(target: TargetIdentity) -> &'static [&'static str] {
    match target {
        TargetIdentity::Age => &["senile", "decrepit", "doddering"],
        TargetIdentity::Disability => &["defective", "burdens", "leeches"],
        TargetIdentity::Gender => &["hysterical", "shrill", "nagging"],
        TargetIdentity::Origin => &["invaders", "parasites", "freeloaders"],
        TargetIdentity::Race => &["savages", "thugs", "primitive"],
        TargetIdentity::Religion => &["fanatics", "zealots", "heathens"],
        TargetIdentity::Sexuality => &["perverts", "deviants", "unnatural"],
    }
}

pub const TOXIC_MARKERS: &[&str] = &[
    "scum", "vermin", "disgusting", "trash", "subhuman", "worthless", "filth", "pathetic",
];

pub const FRIENDLY_WORDS: &[&str] = &[
    "welcome", "respect", "support", "celebrate", "proud", "kind", "neighbors", "friends",
    "wonderful", "grateful", "community", "together", "helpful", "brave", "inspiring",
];

pub const FILLER_WORDS: &[&str] = &[
    "honestly", "today", "people", "really", "think", "about", "the", "news", "again", "online",
    "everyone", "always", "city", "week", "saw", "heard", "post", "talking", "my", "street",
    "just", "so", "these", "all", "here", "school", "work", "morning", "video", "comments",
    "yesterday", "town", "read", "story", "thread", "lol", "seriously", "said", "some", "they",
];

/// Every token the bank can emit as a toxic signal.
pub fn all_toxic_markers() -> Vec<&'static str> {
    let mut v: Vec<&str> = TOXIC_MARKERS.to_vec();
    for t in TargetIdentity::ALL {
        v.extend_from_slice(target_markers(t));
    }
    v
}

/// Synthesize one text for a (label, targets) request.
pub fn synthesize<R: Rng + ?Sized>(
    label: Label,
    targets: &[TargetIdentity],
    min_tokens: usize,
    max_tokens: usize,
    rng: &mut R,
) -> String {
    let mut required: Vec<&str> = Vec::new();
    for &t in targets {
        required.push(target_keywords(t).choose(rng).expect("bank"));
    }
    if label.is_hateful() {
        required.push(TOXIC_MARKERS.choose(rng).expect("bank"));
        for &t in targets {
            required.push(target_markers(t).choose(rng).expect("bank"));
        }
    } else {
        required.push(FRIENDLY_WORDS.choose(rng).expect("bank"));
    }

    let lo = min_tokens.max(required.len() + 2).min(max_tokens);
    let hi = max_tokens.min(lo.max(24));
    let len = rng.random_range(lo..=hi.max(lo));
    if len <= required.len() {
        required.truncate(len.max(1));
        return required.join(" ");
    }

    let mut tokens: Vec<&str> = (0..len - required.len())
        .map(|_| *FILLER_WORDS.choose(rng).expect("bank"))
        .collect();
    for word in required {
        let pos = rng.random_range(0..=tokens.len());
        tokens.insert(pos, word);
    }
    tokens.join(" ")
}

/// Deterministic texts steered by the prompt; see the module docs.
pub fn mock_generate(prompt: &str, params: &GenerationParams, count: usize, seed: u64) -> Vec<String> {
    let (label, targets) = match parse_prompt(prompt) {
        Some(p) => (p.label, p.targets),
        None => (Label::NonHateful, Vec::new()),
    };
    let prompt_key = fnv1a(prompt.as_bytes());
    (0..count)
        .map(|i| {
            let mut rng = sub_rng(seed, &[prompt_key, i as u64]);
            synthesize(label, &targets, params.min_tokens, params.max_tokens, &mut rng)
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct MockBackend;

impl GenerationBackend for MockBackend {
    fn id(&self) -> String {
        "mock".into()
    }

    fn generate(&self, prompt: &str, params: &GenerationParams, count: usize, seed: u64) -> Result<Vec<String>> {
        Ok(mock_generate(prompt, params, count, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has_any(text: &str, words: &[&str]) -> bool {
        text.split_whitespace().any(|t| words.contains(&t))
    }

    #[test]
    fn target_prompt_yields_target_keywords() {
        let params = GenerationParams::default();
        let out = mock_generate("Write a hateful social media post about religion:", &params, 10, 1);
        assert_eq!(out.len(), 10);
        for text in &out {
            assert!(has_any(text, target_keywords(TargetIdentity::Religion)), "{text}");
            assert!(has_any(text, TOXIC_MARKERS));
            let n = text.split_whitespace().count();
            assert!((params.min_tokens..=params.max_tokens).contains(&n));
        }
    }

    #[test]
    fn non_hateful_prompt_has_no_markers() {
        let params = GenerationParams::default();
        let markers = all_toxic_markers();
        for text in mock_generate("Write a social media post about age:", &params, 50, 2) {
            assert!(!has_any(&text, &markers), "{text}");
            for t in TargetIdentity::ALL {
                assert_eq!(has_any(&text, target_keywords(t)), t == TargetIdentity::Age);
            }
        }
    }

    #[test]
    fn untargeted_prompt_names_no_target() {
        let params = GenerationParams::default();
        for text in mock_generate("Write a hateful social media post:", &params, 30, 3) {
            assert!(TargetIdentity::ALL.iter().all(|t| !has_any(&text, target_keywords(*t))));
        }
    }

    #[test]
    fn bank_words_are_disjoint() {
        let mut all: Vec<&str> = all_toxic_markers();
        all.extend_from_slice(FRIENDLY_WORDS);
        all.extend_from_slice(FILLER_WORDS);
        for t in TargetIdentity::ALL {
            all.extend_from_slice(target_keywords(t));
        }
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn short_length_bounds_respected() {
        let params = GenerationParams { min_tokens: 2, max_tokens: 3, ..Default::default() };
        for text in mock_generate("Write a social media post:", &params, 20, 4) {
            let n = text.split_whitespace().count();
            assert!((2..=3).contains(&n), "{text}");
        }
    }
}
