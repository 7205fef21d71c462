//! Success rates with percentile-bootstrap confidence intervals.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// Mean of `outcomes` with a 95% percentile-bootstrap interval over
/// `resamples` resamples drawn from a stream seeded by `seed`.
pub fn role_accuracy(outcomes: &[bool], resamples: usize, seed: u64) -> Result<Estimate> {
    if outcomes.is_empty() {
        return Err(invalid("no records to estimate accuracy from"));
    }
    if resamples == 0 {
        return Err(invalid("bootstrap needs at least one resample"));
    }
    let n = outcomes.len();
    let value = outcomes.iter().filter(|&&o| o).count() as f64 / n as f64;
    let mut rng = rng::stream(&[seed, rng::label("bootstrap")]);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let hits = (0..n).filter(|_| outcomes[rng.gen_range(0..n)]).count();
            hits as f64 / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let lo = percentile(&means, 0.025).min(value);
    let hi = percentile(&means, 0.975).max(value);
    Ok(Estimate { value, lo, hi, n })
}

/// Accuracy of games whose utterance contains a marked word, and of the rest.
/// A side with no games is `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedBreakdown {
    pub with: Option<Estimate>,
    pub without: Option<Estimate>,
}

pub fn marked_word_breakdown(
    games: &[(&[String], bool)],
    word_set: &BTreeSet<String>,
    resamples: usize,
    seed: u64,
) -> Result<MarkedBreakdown> {
    if word_set.is_empty() {
        return Err(invalid("empty marked-word set"));
    }
    let (marked, unmarked): (Vec<_>, Vec<_>) = games
        .iter()
        .partition(|(words, _)| words.iter().any(|w| word_set.contains(w)));
    let side = |g: Vec<&(&[String], bool)>, tag: &str| -> Result<Option<Estimate>> {
        if g.is_empty() {
            return Ok(None);
        }
        let outcomes: Vec<bool> = g.iter().map(|(_, s)| *s).collect();
        role_accuracy(&outcomes, resamples, rng::derive_seed(&[seed, rng::label(tag)])).map(Some)
    };
    Ok(MarkedBreakdown {
        with: side(marked, "with")?,
        without: side(unmarked, "without")?,
    })
}

/// Linear-interpolated percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
