//! Unigram distributions, Jensen–Shannon divergence, and corpus similarity.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{invalid, Result};

/// A lowercased, whitespace-tokenized description.
pub type Description = Vec<String>;

pub fn words(text: &str) -> Description {
    text.to_lowercase().split_whitespace().map(str::to_string).collect()
}

fn counts<'a>(descriptions: impl IntoIterator<Item = &'a Description>) -> BTreeMap<&'a str, f64> {
    let mut out = BTreeMap::new();
    for d in descriptions {
        for w in d {
            *out.entry(w.as_str()).or_insert(0.0) += 1.0;
        }
    }
    out
}

fn kl_to_mixture(p: f64, m: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (p / m).log2()
    }
}

/// Base-2 Jensen–Shannon divergence of two aligned probability vectors.
pub fn jsd(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        total += 0.5 * kl_to_mixture(a, m) + 0.5 * kl_to_mixture(b, m);
    }
    total.clamp(0.0, 1.0)
}

/// JSD between the unigram distributions of two non-empty descriptions.
pub fn description_jsd(a: &Description, b: &Description) -> f64 {
    let ca = counts([a]);
    let cb = counts([b]);
    let vocab: BTreeSet<&str> = ca.keys().chain(cb.keys()).copied().collect();
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let p: Vec<f64> = vocab.iter().map(|w| ca.get(w).copied().unwrap_or(0.0) / na).collect();
    let q: Vec<f64> = vocab.iter().map(|w| cb.get(w).copied().unwrap_or(0.0) / nb).collect();
    jsd(&p, &q)
}

/// Mean pairwise JSD among one shape's descriptions; `None` with fewer than
/// two non-empty descriptions.
pub fn shape_divergence(descriptions: &[Description]) -> Option<f64> {
    let ds: Vec<&Description> = descriptions.iter().filter(|d| !d.is_empty()).collect();
    if ds.len() < 2 {
        return None;
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            sum += description_jsd(ds[i], ds[j]);
            pairs += 1;
        }
    }
    Some(sum / pairs as f64)
}

/// Shape naming divergence: the mean over shapes of [`shape_divergence`].
/// Shapes with fewer than two non-empty descriptions are skipped.
pub fn snd<K: Ord>(by_shape: &BTreeMap<K, Vec<Description>>) -> Result<f64> {
    let per_shape: Vec<f64> = by_shape.values().filter_map(|ds| shape_divergence(ds)).collect();
    if per_shape.is_empty() {
        return Err(invalid("no shape has two or more descriptions"));
    }
    Ok(per_shape.iter().sum::<f64>() / per_shape.len() as f64)
}

/// Similarity of two corpora in (0, 1]; higher means more alike.
pub trait CorpusDivergence: Send + Sync {
    fn name(&self) -> &'static str;

    fn similarity(&self, corpus: &[Description], reference: &[Description]) -> Result<f64>;
}

/// `1 - JSD` between add-one-smoothed unigram distributions over the union
/// vocabulary. A lexical stand-in for embedding-based divergences, not a
/// reimplementation of one.
pub struct UnigramJsd;

impl UnigramJsd {
    pub const NAME: &'static str = "unigram-jsd";
}

impl CorpusDivergence for UnigramJsd {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn similarity(&self, corpus: &[Description], reference: &[Description]) -> Result<f64> {
        corpus_divergence(corpus, reference)
    }
}

pub fn corpus_divergence(corpus: &[Description], reference: &[Description]) -> Result<f64> {
    if corpus.is_empty() || reference.is_empty() {
        return Err(invalid("corpus_divergence needs two non-empty corpora"));
    }
    let ca = counts(corpus);
    let cb = counts(reference);
    let vocab: BTreeSet<&str> = ca.keys().chain(cb.keys()).copied().collect();
    let v = vocab.len() as f64;
    let na: f64 = ca.values().sum();
    let nb: f64 = cb.values().sum();
    let smooth = |c: &BTreeMap<&str, f64>, n: f64| -> Vec<f64> {
        vocab.iter().map(|w| (c.get(w).copied().unwrap_or(0.0) + 1.0) / (n + v)).collect()
    };
    if vocab.is_empty() {
        return Ok(1.0);
    }
    Ok(1.0 - jsd(&smooth(&ca, na), &smooth(&cb, nb)))
}
