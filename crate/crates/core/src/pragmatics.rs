//! Joint inference: one level of pragmatic reasoning between the two roles.
//!
//! Comprehension reweights the listener distribution by how likely the
//! speaker would have produced the utterance for each candidate target, using
//! a weighted geometric mean normalized exactly over the board. Generation
//! samples `k` utterances from the speaker and reranks them by the same kind
//! of geometric mean, normalized over the distinct samples.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{listener_distribution, log_sum_exp, sample_utterance, speaker_logprob, Decoding, Hyper, ModelParams};
use crate::error::{invalid, Result};
use crate::lang::{TokenId, Utterance};
use crate::world::Board;

/// `normalize(listener^λ · exp(speaker_log)^(1-λ))`, computed in log space.
pub fn geometric_combine(listener: &[f64], speaker_log: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if listener.len() != speaker_log.len() || listener.is_empty() {
        return Err(invalid("listener and speaker scores must have the same non-zero length"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!("lambda = {lambda} outside [0, 1]")));
    }
    let scores: Vec<f64> = listener
        .iter()
        .zip(speaker_log)
        .map(|(&pl, &ls)| weighted(lambda, pl.ln()) + weighted(1.0 - lambda, ls))
        .collect();
    let z = log_sum_exp(&scores);
    Ok(scores.iter().map(|s| (s - z).exp()).collect())
}

// 0 · log p is taken as 0 so that a zero weight removes a term entirely.
fn weighted(w: f64, log_p: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * log_p
    }
}

/// Joint comprehension distribution over the board.
pub fn joint_listener(params: &ModelParams, board: &Board, utterance: &Utterance, lambda: f64) -> Result<Vec<f64>> {
    let listener = listener_distribution(params, board, utterance)?;
    if lambda == 1.0 {
        return Ok(listener);
    }
    let speaker_log = (0..board.len())
        .map(|t| speaker_logprob(params, board, t, utterance))
        .collect::<Result<Vec<_>>>()?;
    geometric_combine(&listener, &speaker_log, lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub utterance: Utterance,
    /// `log P_s(u | target)`.
    pub base_logprob: f64,
    /// `P_l(target | u)`.
    pub listener_prob_of_target: f64,
    /// `P_s^λ · P_l^(1-λ)`, normalized over the candidate set.
    pub joint_score: f64,
    log_score: f64,
}

impl RankedCandidate {
    /// Best-first order: joint score, then base log-probability, then the
    /// lexicographically smaller token sequence.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .log_score
            .total_cmp(&self.log_score)
            .then(other.base_logprob.total_cmp(&self.base_logprob))
            .then_with(|| self.utterance.cmp(&other.utterance))
    }
}

/// Scores and sorts distinct candidate utterances for `target`, best first.
pub fn rank_candidates(
    params: &ModelParams,
    board: &Board,
    target: usize,
    candidates: impl IntoIterator<Item = Utterance>,
    lambda_speaker: f64,
) -> Result<Vec<RankedCandidate>> {
    if !(0.0..=1.0).contains(&lambda_speaker) {
        return Err(invalid(format!("lambda = {lambda_speaker} outside [0, 1]")));
    }
    let distinct: BTreeSet<Utterance> = candidates.into_iter().collect();
    if distinct.is_empty() {
        return Err(invalid("no candidates to rank"));
    }
    let mut ranked = distinct
        .into_iter()
        .map(|utterance| {
            let base_logprob = speaker_logprob(params, board, target, &utterance)?;
            let listener_prob_of_target = listener_distribution(params, board, &utterance)?[target];
            let log_score = weighted(lambda_speaker, base_logprob) + weighted(1.0 - lambda_speaker, listener_prob_of_target.ln());
            Ok(RankedCandidate {
                utterance,
                base_logprob,
                listener_prob_of_target,
                joint_score: 0.0,
                log_score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let z = log_sum_exp(&ranked.iter().map(|c| c.log_score).collect::<Vec<_>>());
    for c in &mut ranked {
        c.joint_score = (c.log_score - z).exp();
    }
    ranked.sort_by(RankedCandidate::rank_cmp);
    Ok(ranked)
}

/// Draws `hyper.k` utterances at the sampling temperature.
pub fn sample_candidates<R: Rng + ?Sized>(
    params: &ModelParams,
    board: &Board,
    target: usize,
    hyper: &Hyper,
    eos: TokenId,
    rng: &mut R,
) -> Vec<Utterance> {
    let decoding = Decoding::Sample { temperature: hyper.temperature };
    (0..hyper.k)
        .map(|_| sample_utterance(params, board, target, decoding, eos, rng))
        .collect()
}

/// Joint generation: sample `k`, rerank with weight `hyper.lambda_speaker`.
pub fn joint_speak<R: Rng + ?Sized>(
    params: &ModelParams,
    board: &Board,
    target: usize,
    hyper: &Hyper,
    eos: TokenId,
    rng: &mut R,
) -> Result<RankedCandidate> {
    if hyper.k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if target >= board.len() {
        return Err(invalid(format!("target {target} outside board of {}", board.len())));
    }
    let samples = sample_candidates(params, board, target, hyper, eos, rng);
    let ranked = rank_candidates(params, board, target, samples, hyper.lambda_speaker)?;
    Ok(ranked.into_iter().next().expect("at least one candidate"))
}
