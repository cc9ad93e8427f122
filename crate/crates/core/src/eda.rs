//! Easy Data Augmentation: synonym replacement, random insertion, random swap
//! and random deletion over whitespace tokens.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Post, Provenance, SourceMeta};
use crate::error::{Error, Result};
use crate::util::sub_rng;

const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.json");
const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdaOperation {
    SynonymReplacement,
    RandomInsertion,
    RandomSwap,
    RandomDeletion,
}

impl EdaOperation {
    pub const ALL: [EdaOperation; 4] = [
        EdaOperation::SynonymReplacement,
        EdaOperation::RandomInsertion,
        EdaOperation::RandomSwap,
        EdaOperation::RandomDeletion,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            EdaOperation::SynonymReplacement => "sr",
            EdaOperation::RandomInsertion => "ri",
            EdaOperation::RandomSwap => "rs",
            EdaOperation::RandomDeletion => "rd",
        }
    }
}

impl fmt::Display for EdaOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        )
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(&token.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercase token to synonyms. Stopwords are never keys and no key lists
/// itself as a synonym.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: HashMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn new(raw: HashMap<String, Vec<String>>, stopwords: &Stopwords) -> Self {
        let mut entries = HashMap::new();
        for (key, synonyms) in raw {
            let key = key.to_lowercase();
            if stopwords.contains(&key) {
                continue;
            }
            let mut syns: Vec<String> = synonyms
                .into_iter()
                .filter(|s| !s.trim().is_empty() && s.to_lowercase() != key)
                .collect();
            syns.dedup();
            if !syns.is_empty() {
                entries.entry(key).or_insert_with(Vec::new).extend(syns);
            }
        }
        // HashMap iteration order must not leak into sampling.
        for syns in entries.values_mut() {
            syns.sort();
            syns.dedup();
        }
        SynonymLexicon { entries }
    }

    pub fn from_json(text: &str, stopwords: &Stopwords) -> Result<Self> {
        let raw: HashMap<String, Vec<String>> = serde_json::from_str(text)?;
        Ok(Self::new(raw, stopwords))
    }

    pub fn load(path: &Path, stopwords: &Stopwords) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, stopwords)
    }

    pub fn bundled(stopwords: &Stopwords) -> Self {
        Self::from_json(BUNDLED_LEXICON, stopwords).expect("bundled lexicon is valid JSON")
    }

    pub fn synonyms(&self, token: &str) -> Option<&[String]> {
        self.entries.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

fn replaceable(token: &str, lexicon: &SynonymLexicon, stopwords: &Stopwords) -> bool {
    !stopwords.contains(token) && lexicon.synonyms(token).is_some()
}

pub fn synonym_replacement<R: Rng + ?Sized>(
    tokens: &[String],
    n: usize,
    lexicon: &SynonymLexicon,
    stopwords: &Stopwords,
    rng: &mut R,
) -> Vec<String> {
    let mut out = tokens.to_vec();
    let mut candidates: Vec<usize> = (0..tokens.len())
        .filter(|&i| replaceable(&tokens[i], lexicon, stopwords))
        .collect();
    candidates.shuffle(rng);
    for &i in candidates.iter().take(n) {
        let syns = lexicon.synonyms(&tokens[i]).expect("candidate has synonyms");
        out[i] = syns.choose(rng).expect("non-empty synonym list").clone();
    }
    out
}

pub fn random_insertion<R: Rng + ?Sized>(
    tokens: &[String],
    n: usize,
    lexicon: &SynonymLexicon,
    stopwords: &Stopwords,
    rng: &mut R,
) -> Vec<String> {
    let mut out = tokens.to_vec();
    for _ in 0..n {
        let candidates: Vec<usize> = (0..out.len())
            .filter(|&i| replaceable(&out[i], lexicon, stopwords))
            .collect();
        let Some(&src) = candidates.choose(rng) else {
            break;
        };
        let syn = lexicon
            .synonyms(&out[src])
            .and_then(|s| s.choose(rng))
            .expect("candidate has synonyms")
            .clone();
        let pos = rng.random_range(0..=out.len());
        out.insert(pos, syn);
    }
    out
}

pub fn random_swap<R: Rng + ?Sized>(tokens: &[String], n: usize, rng: &mut R) -> Vec<String> {
    let mut out = tokens.to_vec();
    if out.len() < 2 {
        return out;
    }
    for _ in 0..n {
        let i = rng.random_range(0..out.len());
        let mut j = rng.random_range(0..out.len() - 1);
        if j >= i {
            j += 1;
        }
        out.swap(i, j);
    }
    out
}

/// Delete each token with probability `p`. A non-empty input never yields an
/// empty output: if every token is dropped one is kept at random.
pub fn random_deletion<R: Rng + ?Sized>(tokens: &[String], p: f64, rng: &mut R) -> Vec<String> {
    if tokens.len() <= 1 {
        return tokens.to_vec();
    }
    let kept: Vec<String> = tokens
        .iter()
        .filter(|_| !rng.random_bool(p.clamp(0.0, 1.0)))
        .cloned()
        .collect();
    if kept.is_empty() {
        return vec![tokens.choose(rng).expect("non-empty").clone()];
    }
    kept
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdaConfig {
    /// Fraction of tokens touched per operation.
    pub alpha: f64,
    /// Deletion probability; `alpha` when unset.
    #[serde(default)]
    pub deletion_p: Option<f64>,
    pub seed: u64,
}

impl Default for EdaConfig {
    fn default() -> Self {
        EdaConfig {
            alpha: 0.1,
            deletion_p: None,
            seed: 42,
        }
    }
}

impl EdaConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.deletion_p.unwrap_or(self.alpha);
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!(
                "EDA alpha and deletion probability must lie in [0,1], got {} / {p}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn ops_for_length(&self, len: usize) -> usize {
        ((self.alpha * len as f64).round() as usize).max(1)
    }
}

/// Apply one EDA operation to a text.
pub fn apply_operation<R: Rng + ?Sized>(
    op: EdaOperation,
    text: &str,
    config: &EdaConfig,
    lexicon: &SynonymLexicon,
    stopwords: &Stopwords,
    rng: &mut R,
) -> String {
    let tokens = tokenize(text);
    let n = config.ops_for_length(tokens.len());
    let out = match op {
        EdaOperation::SynonymReplacement => synonym_replacement(&tokens, n, lexicon, stopwords, rng),
        EdaOperation::RandomInsertion => random_insertion(&tokens, n, lexicon, stopwords, rng),
        EdaOperation::RandomSwap => random_swap(&tokens, n, rng),
        EdaOperation::RandomDeletion => {
            random_deletion(&tokens, config.deletion_p.unwrap_or(config.alpha), rng)
        }
    };
    out.join(" ")
}

/// Produce `total` EDA posts, `total / 4` per operation. Sources are taken
/// round-robin over a seeded shuffle of `gold`; every output inherits its
/// source's label and targets.
pub fn eda_augment_corpus(
    gold: &[Post],
    total: usize,
    config: &EdaConfig,
    lexicon: &SynonymLexicon,
    stopwords: &Stopwords,
) -> Result<Vec<Post>> {
    if gold.is_empty() {
        return Err(Error::Input("EDA needs at least one gold post".into()));
    }
    if !total.is_multiple_of(4) {
        return Err(Error::Input(format!("EDA total {total} is not divisible by 4")));
    }
    config.validate()?;
    let per_op = total / 4;
    let mut order: Vec<&Post> = gold.iter().collect();
    order.shuffle(&mut sub_rng(config.seed, &[0]));

    let jobs: Vec<(usize, EdaOperation, usize)> = EdaOperation::ALL
        .iter()
        .enumerate()
        .flat_map(|(oi, op)| (0..per_op).map(move |k| (oi, *op, k)))
        .collect();

    Ok(jobs
        .par_iter()
        .map(|&(oi, op, k)| {
            let source = order[k % order.len()];
            let mut rng = sub_rng(config.seed, &[1, oi as u64, k as u64]);
            let text = apply_operation(op, &source.text, config, lexicon, stopwords, &mut rng);
            Post {
                post_id: format!("{}~eda-{}-{k}", source.post_id, op.short_name()),
                text,
                label: source.label,
                targets: source.targets.clone(),
                provenance: Provenance::Eda,
                source_meta: Some(SourceMeta {
                    eda_operation: Some(op),
                    source_id: Some(source.post_id.clone()),
                    ..SourceMeta::default()
                }),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, TargetIdentity};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    fn happy_lexicon() -> (SynonymLexicon, Stopwords) {
        let stop = Stopwords::parse("i\nam\nthe\n");
        let lex = SynonymLexicon::new(
            HashMap::from([("happy".to_string(), vec!["glad".to_string()])]),
            &stop,
        );
        (lex, stop)
    }

    #[test]
    fn lexicon_drops_self_synonyms_and_stopword_keys() {
        let stop = Stopwords::parse("the\n");
        let lex = SynonymLexicon::new(
            HashMap::from([
                ("the".into(), vec!["a".into()]),
                ("Big".into(), vec!["big".into()]),
                ("small".into(), vec!["small".into(), "tiny".into()]),
            ]),
            &stop,
        );
        assert!(lex.synonyms("the").is_none());
        assert!(lex.synonyms("big").is_none());
        assert_eq!(lex.synonyms("SMALL").unwrap(), &["tiny".to_string()]);
    }

    #[test]
    fn bundled_resources_load() {
        let stop = Stopwords::bundled();
        let lex = SynonymLexicon::bundled(&stop);
        assert!(stop.len() > 100);
        assert!(lex.len() >= 1000, "bundled lexicon has {} entries", lex.len());
    }

    #[test]
    fn synonym_replacement_cases() {
        let (lex, stop) = happy_lexicon();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = toks("i am happy");
        assert_eq!(synonym_replacement(&input, 0, &lex, &stop, &mut rng), input);
        assert_eq!(synonym_replacement(&input, 1, &lex, &stop, &mut rng), toks("i am glad"));
        let stops = toks("i am the");
        assert_eq!(synonym_replacement(&stops, 3, &lex, &stop, &mut rng), stops);
    }

    #[test]
    fn random_insertion_cases() {
        let (lex, stop) = happy_lexicon();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let input = toks("happy");
        assert_eq!(random_insertion(&input, 0, &lex, &stop, &mut rng), input);
        let mut out = random_insertion(&input, 1, &lex, &stop, &mut rng);
        out.sort();
        assert_eq!(out, toks("glad happy"));
        let stops = toks("i am");
        assert_eq!(random_insertion(&stops, 2, &lex, &stop, &mut rng), stops);
    }

    #[test]
    fn random_swap_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(random_swap(&toks("a b"), 1, &mut rng), toks("b a"));
        assert_eq!(random_swap(&toks("solo"), 5, &mut rng), toks("solo"));
    }

    #[test]
    fn random_deletion_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let input = toks("hello world");
        assert_eq!(random_deletion(&input, 0.0, &mut rng), input);
        let out = random_deletion(&input, 1.0, &mut rng);
        assert_eq!(out.len(), 1);
        assert!(input.contains(&out[0]));
    }

    #[test]
    fn ops_count_uses_alpha() {
        let cfg = EdaConfig::default();
        assert_eq!(cfg.ops_for_length(3), 1);
        assert_eq!(cfg.ops_for_length(25), 3);
        assert_eq!(cfg.ops_for_length(0), 1);
    }

    fn gold() -> Vec<Post> {
        vec![
            Post::gold("g1", "the old man is happy today", Label::NonHateful, [TargetIdentity::Age]),
            Post::gold("g2", "those people are terrible and stupid", Label::Hateful, [TargetIdentity::Race, TargetIdentity::Origin]),
        ]
    }

    #[test]
    fn corpus_quota_per_operation() {
        let stop = Stopwords::bundled();
        let lex = SynonymLexicon::bundled(&stop);
        let out = eda_augment_corpus(&gold(), 40, &EdaConfig::default(), &lex, &stop).unwrap();
        assert_eq!(out.len(), 40);
        for op in EdaOperation::ALL {
            let n = out
                .iter()
                .filter(|p| p.source_meta.as_ref().unwrap().eda_operation == Some(op))
                .count();
            assert_eq!(n, 10);
        }
    }

    #[test]
    fn single_source_yields_one_per_operation() {
        let stop = Stopwords::bundled();
        let lex = SynonymLexicon::bundled(&stop);
        let g = &gold()[1..];
        let out = eda_augment_corpus(g, 4, &EdaConfig::default(), &lex, &stop).unwrap();
        assert_eq!(out.len(), 4);
        for p in &out {
            assert_eq!(p.label, g[0].label);
            assert_eq!(p.targets, g[0].targets);
            assert_eq!(p.provenance, Provenance::Eda);
            assert_eq!(p.source_meta.as_ref().unwrap().source_id.as_deref(), Some("g2"));
        }
    }

    #[test]
    fn corpus_errors_and_determinism() {
        let stop = Stopwords::bundled();
        let lex = SynonymLexicon::bundled(&stop);
        let cfg = EdaConfig::default();
        assert!(eda_augment_corpus(&[], 4, &cfg, &lex, &stop).is_err());
        assert!(eda_augment_corpus(&gold(), 6, &cfg, &lex, &stop).is_err());
        let a = eda_augment_corpus(&gold(), 200, &cfg, &lex, &stop).unwrap();
        let b = eda_augment_corpus(&gold(), 200, &cfg, &lex, &stop).unwrap();
        assert_eq!(a, b);
    }

    fn token_vec() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(
            prop::sample::select(vec!["happy", "sad", "the", "a", "big", "dog", "run", "of", "quick"]),
            1..20,
        )
        .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn swap_is_permutation(tokens in token_vec(), n in 0usize..10, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = random_swap(&tokens, n, &mut rng);
            let mut sorted = tokens.clone();
            out.sort();
            sorted.sort();
            prop_assert_eq!(out, sorted);
        }

        #[test]
        fn deletion_is_nonempty_subsequence(tokens in token_vec(), p in 0.0f64..=1.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = random_deletion(&tokens, p, &mut rng);
            prop_assert!(!out.is_empty());
            prop_assert!(out.len() <= tokens.len());
            let mut it = tokens.iter();
            if out.len() > 1 {
                prop_assert!(out.iter().all(|t| it.any(|u| u == t)));
            } else {
                prop_assert!(tokens.contains(&out[0]));
            }
        }

        #[test]
        fn insertion_is_supersequence_and_sr_keeps_stopwords(tokens in token_vec(), n in 0usize..6, seed in any::<u64>()) {
            let stop = Stopwords::bundled();
            let lex = SynonymLexicon::bundled(&stop);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ins = random_insertion(&tokens, n, &lex, &stop, &mut rng);
            prop_assert!(ins.len() >= tokens.len() && ins.len() <= tokens.len() + n);
            let mut it = ins.iter();
            prop_assert!(tokens.iter().all(|t| it.any(|u| u == t)));

            let sr = synonym_replacement(&tokens, n, &lex, &stop, &mut rng);
            prop_assert_eq!(sr.len(), tokens.len());
            for (a, b) in tokens.iter().zip(&sr) {
                if stop.contains(a) {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}
