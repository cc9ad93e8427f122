use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::fnv1a;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpec {
    pub word_orders: Vec<usize>,
    pub char_orders: Vec<usize>,
    /// Power of two, at least 1024.
    pub hash_dim: usize,
    pub lowercase: bool,
    /// Scale each feature vector to unit L2 norm before it reaches the model.
    pub normalize: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            word_orders: vec![1, 2],
            char_orders: vec![3, 4, 5],
            hash_dim: 1 << 18,
            lowercase: true,
            normalize: false,
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hash_dim < 1 << 10 || !self.hash_dim.is_power_of_two() {
            return Err(Error::Config(format!(
                "hash_dim must be a power of two >= 1024, got {}",
                self.hash_dim
            )));
        }
        if self.word_orders.is_empty() && self.char_orders.is_empty() {
            return Err(Error::Config("at least one n-gram order is required".into()));
        }
        if self.word_orders.iter().chain(&self.char_orders).any(|&n| n == 0) {
            return Err(Error::Config("n-gram orders must be positive".into()));
        }
        Ok(())
    }

    fn bucket(&self, kind: u8, order: usize, gram: &str) -> u32 {
        let mut key = Vec::with_capacity(gram.len() + 3);
        key.push(kind);
        key.push(order as u8);
        key.push(b':');
        key.extend_from_slice(gram.as_bytes());
        (fnv1a(&key) & (self.hash_dim as u64 - 1)) as u32
    }
}

/// Sparse (index, value) pairs sorted by index with unique indices.
pub type SparseVector = Vec<(u32, f64)>;

/// Hashed bag of word and character n-grams as (bucket, count) pairs.
pub fn featurize(text: &str, spec: &FeatureSpec) -> SparseVector {
    let normalized: String = if spec.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    let words: Vec<&str> = normalized.split_whitespace().collect();
    if words.is_empty() {
        return Vec::new();
    }

    let mut buckets: Vec<u32> = Vec::new();
    for &n in &spec.word_orders {
        for gram in words.windows(n) {
            buckets.push(spec.bucket(b'w', n, &gram.join(" ")));
        }
    }
    let padded: Vec<char> = format!(" {} ", words.join(" ")).chars().collect();
    for &n in &spec.char_orders {
        for gram in padded.windows(n) {
            let gram: String = gram.iter().collect();
            buckets.push(spec.bucket(b'c', n, &gram));
        }
    }

    buckets.sort_unstable();
    let mut out: SparseVector = Vec::new();
    for b in buckets {
        match out.last_mut() {
            Some((last, count)) if *last == b => *count += 1.0,
            _ => out.push((b, 1.0)),
        }
    }
    out
}

/// Features as seen by the model: counts, optionally scaled to unit norm.
pub fn vectorize(text: &str, spec: &FeatureSpec) -> SparseVector {
    let mut v = featurize(text, spec);
    if spec.normalize {
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, x) in &mut v {
                *x /= norm;
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_has_no_features() {
        assert!(featurize("", &FeatureSpec::default()).is_empty());
        assert!(featurize("   \n", &FeatureSpec::default()).is_empty());
    }

    #[test]
    fn deterministic_and_case_insensitive() {
        let spec = FeatureSpec::default();
        assert_eq!(featurize("Hello World", &spec), featurize("Hello World", &spec));
        assert_eq!(featurize("Hello World", &spec), featurize("hello world", &spec));
        let cased = FeatureSpec { lowercase: false, ..spec };
        assert_ne!(featurize("Hello", &cased), featurize("hello", &cased));
    }

    #[test]
    fn indices_in_range_and_counts_sum() {
        let spec = FeatureSpec { hash_dim: 1024, ..Default::default() };
        let f = featurize("a b a", &spec);
        assert!(f.iter().all(|(i, _)| (*i as usize) < 1024));
        assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
        // 3 unigrams + 2 bigrams + char grams over " a b a " (7 chars): 5 + 4 + 3
        let total: f64 = f.iter().map(|(_, c)| c).sum();
        assert_eq!(total, 3.0 + 2.0 + 5.0 + 4.0 + 3.0);
    }

    #[test]
    fn vectorize_normalizes_only_on_request() {
        let spec = FeatureSpec::default();
        assert_eq!(vectorize("some words here", &spec), featurize("some words here", &spec));
        let unit = FeatureSpec { normalize: true, ..spec };
        let v = vectorize("some words here", &unit);
        let norm: f64 = v.iter().map(|(_, x)| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(FeatureSpec::default().validate().is_ok());
        assert!(FeatureSpec { hash_dim: 512, ..Default::default() }.validate().is_err());
        assert!(FeatureSpec { hash_dim: 3000, ..Default::default() }.validate().is_err());
        let none = FeatureSpec { word_orders: vec![], char_orders: vec![], ..Default::default() };
        assert!(none.validate().is_err());
    }
}
