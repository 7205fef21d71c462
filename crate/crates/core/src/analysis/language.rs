//! Lexical statistics of utterance sets.

use std::collections::BTreeSet;

use super::divergence::Description;

/// Mean number of words per description (EOS is never a word).
pub fn utterance_length(descriptions: &[Description]) -> f64 {
    if descriptions.is_empty() {
        return 0.0;
    }
    descriptions.iter().map(Vec::len).sum::<usize>() as f64 / descriptions.len() as f64
}

pub fn vocabulary(descriptions: &[Description]) -> BTreeSet<&str> {
    descriptions.iter().flatten().map(String::as_str).collect()
}

/// Number of distinct words.
pub fn effective_vocabulary(descriptions: &[Description]) -> usize {
    vocabulary(descriptions).len()
}

/// For each round, how many of its words were not produced in any earlier round.
pub fn new_words(rounds: &[Vec<Description>]) -> Vec<usize> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    rounds
        .iter()
        .map(|descs| {
            let v = vocabulary(descs);
            let fresh = v.difference(&seen).count();
            seen.extend(v);
            fresh
        })
        .collect()
}
