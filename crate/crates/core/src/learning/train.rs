//! Retraining from initial weights with patience-based model selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::objective::{policy_gradient_step, AdamW, Example};
use super::records::Role;
use crate::agent::{Hyper, ModelParams};
use crate::error::{invalid, Result};
use crate::lang::Utterance;
use crate::rng;
use crate::strategy::ListenerStrategy;
use crate::world::Board;

/// A successful partner-partner comprehension game used for model selection.
#[derive(Clone, Debug)]
pub struct ValidationGame {
    pub board: Board,
    pub utterance: Utterance,
    pub target: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    Patience,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub steps: usize,
    pub listener_loss: f64,
    pub speaker_loss: f64,
    pub clipped: usize,
    pub validation_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub listener_examples: usize,
    pub speaker_examples: usize,
    pub epochs: Vec<EpochReport>,
    pub best_epoch: usize,
    pub best_accuracy: f64,
    pub stop_reason: StopReason,
}

/// Tracks the best validation score and decides when to stop.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    max_epochs: usize,
    epoch: usize,
    best: Option<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Progress {
    /// This epoch is the new best.
    Improved,
    Continue,
    Stop(StopReason),
}

impl EarlyStopping {
    pub fn new(patience: usize, max_epochs: usize) -> Self {
        EarlyStopping {
            patience,
            max_epochs,
            epoch: 0,
            best: None,
        }
    }

    /// Records the score of the next epoch. Only strict improvements reset patience.
    pub fn observe(&mut self, score: f64) -> Progress {
        self.epoch += 1;
        let improved = self.best.is_none_or(|(_, b)| score > b);
        if improved {
            self.best = Some((self.epoch, score));
        }
        let since_best = self.epoch - self.best.map_or(0, |(e, _)| e);
        if self.epoch >= self.max_epochs {
            Progress::Stop(StopReason::MaxEpochs)
        } else if since_best >= self.patience {
            Progress::Stop(StopReason::Patience)
        } else if improved {
            Progress::Improved
        } else {
            Progress::Continue
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }
}

pub fn validation_accuracy(
    params: &ModelParams,
    games: &[ValidationGame],
    listener: &dyn ListenerStrategy,
    hyper: &Hyper,
) -> Result<f64> {
    if games.is_empty() {
        return Err(invalid("empty validation set"));
    }
    let mut correct = 0usize;
    for g in games {
        let (pick, _) = listener.select(params, &g.board, &g.utterance, hyper)?;
        correct += usize::from(pick == g.target);
    }
    Ok(correct as f64 / games.len() as f64)
}

/// Trains from `initial` on the given comprehension and generation examples.
///
/// An epoch is `ceil(|listener| / batch_size)` steps; each step draws both
/// minibatches uniformly with replacement. After each epoch the comprehension
/// accuracy on `validation` (under the variant's listener strategy) decides
/// early stopping; the best epoch's parameters are returned.
pub fn train(
    initial: &ModelParams,
    listener_data: &[Example],
    speaker_data: &[Example],
    validation: &[ValidationGame],
    listener: &dyn ListenerStrategy,
    hyper: &Hyper,
    seed: u64,
) -> Result<(ModelParams, TrainReport)> {
    hyper.validate()?;
    if validation.is_empty() {
        return Err(invalid("empty validation set"));
    }
    if listener_data.is_empty() {
        return Err(invalid("no comprehension examples to train on"));
    }
    debug_assert!(listener_data.iter().all(|e| e.role == Role::Listener));
    debug_assert!(speaker_data.iter().all(|e| e.role == Role::Speaker));

    let steps = listener_data.len().div_ceil(hyper.batch_size);
    let mut params = initial.clone();
    let mut optimizer = AdamW::new(&params);
    let mut stopping = EarlyStopping::new(hyper.patience, hyper.max_epochs);
    let mut best_params = params.clone();
    let mut epochs = Vec::new();

    let stop_reason = loop {
        let epoch = stopping.epoch() + 1;
        let mut listener_loss = 0.0;
        let mut speaker_loss = 0.0;
        let mut clipped = 0;
        for step in 0..steps {
            let mut rng = rng::stream(&[seed, epoch as u64, step as u64]);
            let batch_l: Vec<&Example> = (0..hyper.batch_size)
                .map(|_| &listener_data[rng.gen_range(0..listener_data.len())])
                .collect();
            let batch_s: Vec<&Example> = if speaker_data.is_empty() {
                Vec::new()
            } else {
                (0..hyper.batch_size)
                    .map(|_| &speaker_data[rng.gen_range(0..speaker_data.len())])
                    .collect()
            };
            let (next, stats) = policy_gradient_step(&params, &mut optimizer, &batch_l, &batch_s, hyper)?;
            params = next;
            listener_loss += stats.listener_loss / steps as f64;
            speaker_loss += stats.speaker_loss / steps as f64;
            clipped += stats.clipped;
        }
        let accuracy = validation_accuracy(&params, validation, listener, hyper)?;
        epochs.push(EpochReport {
            epoch,
            steps,
            listener_loss,
            speaker_loss,
            clipped,
            validation_accuracy: accuracy,
        });
        let progress = stopping.observe(accuracy);
        if stopping.best().map(|(e, _)| e) == Some(epoch) {
            best_params = params.clone();
        }
        log::debug!("epoch {epoch}: val acc {accuracy:.3}, loss {listener_loss:.4}/{speaker_loss:.4}");
        if let Progress::Stop(reason) = progress {
            break reason;
        }
    };
    let (best_epoch, best_accuracy) = stopping.best().expect("at least one epoch ran");
    Ok((
        best_params,
        TrainReport {
            listener_examples: listener_data.len(),
            speaker_examples: speaker_data.len(),
            epochs,
            best_epoch,
            best_accuracy,
            stop_reason,
        },
    ))
}
