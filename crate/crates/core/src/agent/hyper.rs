use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Inference and training hyperparameters shared by every variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    /// Listener weight in the joint comprehension distribution.
    pub lambda_listener: f64,
    /// Speaker weight in the joint generation reranking.
    pub lambda_speaker: f64,
    /// Utterances sampled per generation turn.
    pub k: usize,
    pub temperature: f64,
    pub ips_clip: f64,
    pub lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lambda_listener: 0.5,
            lambda_speaker: 0.0,
            k: 10,
            temperature: 0.7,
            ips_clip: 5.0,
            lr: 1e-2,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 1e-3,
            batch_size: 32,
            max_epochs: 15,
            patience: 5,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(invalid(format!("{name} = {x} outside [0, 1]")))
            }
        };
        unit("lambda_listener", self.lambda_listener)?;
        unit("lambda_speaker", self.lambda_speaker)?;
        if self.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if !(self.temperature > 0.0) {
            return Err(invalid("temperature must be positive"));
        }
        if !(self.ips_clip >= 1.0) {
            return Err(invalid("ips_clip must be at least 1"));
        }
        if !(self.lr > 0.0) || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(invalid("lr, batch_size and max_epochs must be positive"));
        }
        if self.patience > self.max_epochs {
            return Err(invalid("patience cannot exceed max_epochs"));
        }
        Ok(())
    }
}
