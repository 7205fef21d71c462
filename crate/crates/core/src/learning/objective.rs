//! Contextual-bandit policy gradient with cased IPS weighting.
//!
//! Every record contributes `c · r · ∇ log P(action)`, where `P` is the
//! listener distribution for comprehension records and the speaker
//! distribution for generation records. `c` is 1 for positive rewards and the
//! clipped ratio of current to behavior probability for negative ones, which
//! keeps the loss of negative examples bounded as their probability vanishes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::records::{InteractionRecord, Provenance, Reward, Role};
use crate::agent::{grad_log_listener, grad_log_speaker, listener_distribution, speaker_logprob, Hyper, ModelParams};
use crate::error::{invalid, Error, Result};
use crate::lang::Utterance;
use crate::world::{Board, ShapeLibrary};

pub fn ips_coefficient(current_prob: f64, behavior_prob: f64, reward: Reward, clip: f64) -> Result<f64> {
    if !(behavior_prob > 0.0) {
        return Err(invalid(format!("behavior probability must be positive, got {behavior_prob}")));
    }
    if !(clip >= 1.0) {
        return Err(invalid(format!("IPS clip must be at least 1, got {clip}")));
    }
    Ok(match reward {
        Reward::Positive => 1.0,
        Reward::Negative => (current_prob / behavior_prob).min(clip),
    })
}

/// Converts positive records of each role into records of the other role.
///
/// A successful comprehension game shows the partner's utterance is a good
/// description of the selected (= target) slot; a successful generation game
/// shows the model's utterance picks out its target. Negative records are
/// never converted.
pub fn share_data(listener: &[InteractionRecord], speaker: &[InteractionRecord]) -> (Vec<InteractionRecord>, Vec<InteractionRecord>) {
    let convert = |r: &InteractionRecord, role: Role| InteractionRecord {
        role,
        target: r.target,
        selection: r.target,
        provenance: Provenance::Shared,
        behavior_prob: 1.0,
        ..r.clone()
    };
    let mut listener_out = listener.to_vec();
    listener_out.extend(speaker.iter().filter(|r| r.success()).map(|r| convert(r, Role::Listener)));
    let mut speaker_out = speaker.to_vec();
    speaker_out.extend(listener.iter().filter(|r| r.success()).map(|r| convert(r, Role::Speaker)));
    (listener_out, speaker_out)
}

/// A record resolved against the shape library, ready for gradient computation.
#[derive(Clone, Debug)]
pub struct Example {
    pub role: Role,
    pub board: Board,
    pub utterance: Utterance,
    pub action: usize,
    pub reward: Reward,
    pub behavior_prob: f64,
}

impl Example {
    pub fn from_record(record: &InteractionRecord, library: &ShapeLibrary) -> Self {
        Example {
            role: record.role,
            board: library.board(&record.context),
            utterance: record.utterance.clone(),
            action: record.action(),
            reward: record.reward,
            behavior_prob: record.behavior_prob,
        }
    }

    /// Log-probability of the recorded action under `params`.
    pub fn log_prob(&self, params: &ModelParams) -> Result<f64> {
        match self.role {
            Role::Listener => Ok(listener_distribution(params, &self.board, &self.utterance)?[self.action].ln()),
            Role::Speaker => speaker_logprob(params, &self.board, self.action, &self.utterance),
        }
    }

    fn grad(&self, params: &ModelParams) -> Result<ModelParams> {
        match self.role {
            Role::Listener => grad_log_listener(params, &self.board, &self.utterance, self.action),
            Role::Speaker => grad_log_speaker(params, &self.board, self.action, &self.utterance),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    /// Mean surrogate loss `-c · r · log P` over the comprehension batch.
    pub listener_loss: f64,
    pub speaker_loss: f64,
    /// Number of negative examples whose IPS coefficient hit the clip.
    pub clipped: usize,
}

struct Contribution {
    grad: ModelParams,
    loss: f64,
    clipped: bool,
}

fn contribution(example: &Example, params: &ModelParams, clip: f64) -> Result<Contribution> {
    let log_p = example.log_prob(params)?;
    let c = ips_coefficient(log_p.exp(), example.behavior_prob, example.reward, clip)?;
    let weight = c * example.reward.value();
    let mut grad = example.grad(params)?;
    grad.data_mut().iter_mut().for_each(|g| *g *= weight);
    Ok(Contribution {
        grad,
        loss: -weight * log_p,
        clipped: example.reward == Reward::Negative && c == clip,
    })
}

/// Mean weighted gradient of the comprehension batch plus that of the
/// generation batch. Per-example terms are computed in parallel and reduced
/// in batch order, so the result does not depend on thread scheduling.
pub fn accumulate_gradient(
    params: &ModelParams,
    batch_listener: &[&Example],
    batch_speaker: &[&Example],
    clip: f64,
) -> Result<(ModelParams, BatchStats)> {
    let mut total = ModelParams::zeros(params.dims());
    let mut stats = BatchStats::default();
    for (batch, loss_slot) in [(batch_listener, 0), (batch_speaker, 1)] {
        if batch.is_empty() {
            continue;
        }
        let parts: Vec<Contribution> = batch
            .par_iter()
            .map(|e| contribution(e, params, clip))
            .collect::<Result<_>>()?;
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for p in &parts {
            total.add_scaled(&p.grad, scale);
            loss += p.loss * scale;
            stats.clipped += usize::from(p.clipped);
        }
        if loss_slot == 0 {
            stats.listener_loss = loss;
        } else {
            stats.speaker_loss = loss;
        }
    }
    if !total.is_finite() {
        let bad = total.data().iter().position(|x| !x.is_finite()).unwrap_or(0);
        return Err(Error::NonFinite(format!(
            "accumulated gradient entry {bad} is not finite (batch sizes {} / {})",
            batch_listener.len(),
            batch_speaker.len()
        )));
    }
    Ok((total, stats))
}

/// Adaptive-moment optimizer with decoupled weight decay, ascending the objective.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl AdamW {
    pub fn new(params: &ModelParams) -> Self {
        let n = params.data().len();
        AdamW {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn apply(&mut self, params: &mut ModelParams, grad: &ModelParams, hyper: &Hyper) {
        self.step += 1;
        let b1 = hyper.adam_beta1;
        let b2 = hyper.adam_beta2;
        let bc1 = 1.0 - b1.powi(self.step);
        let bc2 = 1.0 - b2.powi(self.step);
        let decay = 1.0 - hyper.lr * hyper.weight_decay;
        for (((p, g), m), v) in params
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p = *p * decay + hyper.lr * m_hat / (v_hat.sqrt() + hyper.adam_eps);
        }
    }
}

/// One update from a comprehension and a generation minibatch.
pub fn policy_gradient_step(
    params: &ModelParams,
    optimizer: &mut AdamW,
    batch_listener: &[&Example],
    batch_speaker: &[&Example],
    hyper: &Hyper,
) -> Result<(ModelParams, BatchStats)> {
    let (grad, stats) = accumulate_gradient(params, batch_listener, batch_speaker, hyper.ips_clip)?;
    let mut next = params.clone();
    optimizer.apply(&mut next, &grad, hyper);
    if !next.is_finite() {
        return Err(Error::NonFinite("parameters became non-finite after the update".into()));
    }
    Ok((next, stats))
}
