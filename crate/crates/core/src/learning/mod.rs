//! Rewards, cased-IPS policy gradient, data sharing, and retraining.

mod objective;
mod records;
mod train;

pub use objective::{accumulate_gradient, ips_coefficient, policy_gradient_step, share_data, AdamW, BatchStats, Example};
pub use records::{reward_from_outcome, InteractionRecord, Partner, Provenance, Reward, Role, RoundDatasets};
pub use train::{train, validation_accuracy, EarlyStopping, EpochReport, Progress, StopReason, TrainReport, ValidationGame};
