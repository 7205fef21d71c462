//! The parametric agent: one set of parameters serving both roles.

pub mod checkpoint;
mod hyper;
mod model;
mod params;

pub use model::{
    grad_log_listener, grad_log_speaker, listener_distribution, sample_utterance, speaker_first_step,
    speaker_logprob, Decoding,
};
pub(crate) use model::log_sum_exp;
pub use params::{ModelDims, ModelParams, DEFAULT_EMBED_DIM, DEFAULT_FILLERS, DEFAULT_MAX_LEN};
pub use hyper::Hyper;
