//! Fixed context-target pairs on which every system regenerates utterances.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::agent::{Hyper, ModelParams};
use crate::error::Result;
use crate::lang::{TokenId, Utterance};
use crate::rng::{self, StreamRng};
use crate::strategy::SpeakerStrategy;
use crate::world::{Context, ShapeLibrary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub context: Context,
    pub target: usize,
}

impl EvalPair {
    pub fn shape_id(&self) -> usize {
        self.context.shape_ids[self.target]
    }
}

/// One regenerated description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub round: u32,
    pub system: String,
    pub pair: usize,
    pub shape_id: usize,
    pub utterance: Utterance,
    pub words: Vec<String>,
}

/// Up to `count` distinct positions of `pool`, in increasing order.
pub fn sample_pairs(pool: &[EvalPair], count: usize, rng: &mut StreamRng) -> Vec<EvalPair> {
    let n = count.min(pool.len());
    let mut picks = index::sample(rng, pool.len(), n).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| pool[i].clone()).collect()
}

/// Utterances for each pair under the given generation policy. Pair `i` uses
/// the stream `(seed, i)`, so systems given the same seed draw identical base
/// samples and differ only in how they pick among them.
pub fn regenerate_eval_utterances(
    params: &ModelParams,
    speaker: &dyn SpeakerStrategy,
    library: &ShapeLibrary,
    pairs: &[EvalPair],
    hyper: &Hyper,
    eos: TokenId,
    seed: u64,
) -> Result<Vec<Utterance>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, pair)| {
            let board = library.board(&pair.context);
            let mut rng = rng::stream(&[seed, i as u64]);
            Ok(speaker.speak(params, &board, pair.target, hyper, eos, &mut rng)?.utterance)
        })
        .collect()
}
