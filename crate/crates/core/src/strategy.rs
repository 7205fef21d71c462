//! Named inference strategies.
//!
//! System variants differ in how the agent acts in each role: which
//! comprehension distribution it takes the argmax of, and how it picks one
//! utterance out of its samples. Each choice is a [`ListenerStrategy`] or
//! [`SpeakerStrategy`] registered under a name; variants and config files
//! refer to strategies by that name.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::agent::{listener_distribution, sample_utterance, Decoding, Hyper, ModelParams};
use crate::analysis::divergence::{CorpusDivergence, UnigramJsd};
use crate::error::{invalid, Result};
use crate::lang::{TokenId, Utterance};
use crate::pragmatics::{joint_listener, rank_candidates, sample_candidates, RankedCandidate};
use crate::rng::StreamRng;
use crate::world::Board;

pub const LITERAL_LISTENER: &str = "literal";
pub const JOINT_LISTENER: &str = "joint";
pub const BEST_OF_K_SPEAKER: &str = "best-of-k";
pub const JOINT_RERANK_SPEAKER: &str = "joint-rerank";
pub const GREEDY_SPEAKER: &str = "greedy";

/// A comprehension policy: a distribution over board slots given an utterance.
pub trait ListenerStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn distribution(&self, params: &ModelParams, board: &Board, utterance: &Utterance, hyper: &Hyper) -> Result<Vec<f64>>;

    /// Argmax slot (lowest index on ties) and its probability.
    fn select(&self, params: &ModelParams, board: &Board, utterance: &Utterance, hyper: &Hyper) -> Result<(usize, f64)> {
        let probs = self.distribution(params, board, utterance, hyper)?;
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok((best, probs[best]))
    }
}

/// A generation policy: one utterance for the target.
pub trait SpeakerStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn speak(&self, params: &ModelParams, board: &Board, target: usize, hyper: &Hyper, eos: TokenId, rng: &mut StreamRng) -> Result<RankedCandidate>;
}

/// Plain listener distribution.
pub struct Literal;

impl ListenerStrategy for Literal {
    fn name(&self) -> &'static str {
        LITERAL_LISTENER
    }

    fn distribution(&self, params: &ModelParams, board: &Board, utterance: &Utterance, _hyper: &Hyper) -> Result<Vec<f64>> {
        listener_distribution(params, board, utterance)
    }
}

/// Geometric mean of listener and speaker, weight `hyper.lambda_listener`.
pub struct JointListener;

impl ListenerStrategy for JointListener {
    fn name(&self) -> &'static str {
        JOINT_LISTENER
    }

    fn distribution(&self, params: &ModelParams, board: &Board, utterance: &Utterance, hyper: &Hyper) -> Result<Vec<f64>> {
        joint_listener(params, board, utterance, hyper.lambda_listener)
    }
}

/// Sample `k`, keep the one the speaker itself finds most probable.
pub struct BestOfK;

impl SpeakerStrategy for BestOfK {
    fn name(&self) -> &'static str {
        BEST_OF_K_SPEAKER
    }

    fn speak(&self, params: &ModelParams, board: &Board, target: usize, hyper: &Hyper, eos: TokenId, rng: &mut StreamRng) -> Result<RankedCandidate> {
        let samples = sample_candidates(params, board, target, hyper, eos, rng);
        first(rank_candidates(params, board, target, samples, 1.0)?)
    }
}

/// Sample `k`, rerank by the joint generation score.
pub struct JointRerank;

impl SpeakerStrategy for JointRerank {
    fn name(&self) -> &'static str {
        JOINT_RERANK_SPEAKER
    }

    fn speak(&self, params: &ModelParams, board: &Board, target: usize, hyper: &Hyper, eos: TokenId, rng: &mut StreamRng) -> Result<RankedCandidate> {
        let samples = sample_candidates(params, board, target, hyper, eos, rng);
        first(rank_candidates(params, board, target, samples, hyper.lambda_speaker)?)
    }
}

/// Deterministic argmax decoding.
pub struct Greedy;

impl SpeakerStrategy for Greedy {
    fn name(&self) -> &'static str {
        GREEDY_SPEAKER
    }

    fn speak(&self, params: &ModelParams, board: &Board, target: usize, _hyper: &Hyper, eos: TokenId, rng: &mut StreamRng) -> Result<RankedCandidate> {
        let u = sample_utterance(params, board, target, Decoding::Greedy, eos, rng);
        first(rank_candidates(params, board, target, [u], 1.0)?)
    }
}

fn first(ranked: Vec<RankedCandidate>) -> Result<RankedCandidate> {
    ranked.into_iter().next().ok_or_else(|| invalid("no candidates"))
}

/// Name-indexed strategies and corpus divergences.
#[derive(Clone)]
pub struct Registry {
    listeners: BTreeMap<&'static str, Arc<dyn ListenerStrategy>>,
    speakers: BTreeMap<&'static str, Arc<dyn SpeakerStrategy>>,
    divergences: BTreeMap<&'static str, Arc<dyn CorpusDivergence>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("listeners", &self.listeners.keys().collect::<Vec<_>>())
            .field("speakers", &self.speakers.keys().collect::<Vec<_>>())
            .field("divergences", &self.divergences.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry::empty();
        r.register_listener(Arc::new(Literal));
        r.register_listener(Arc::new(JointListener));
        r.register_speaker(Arc::new(BestOfK));
        r.register_speaker(Arc::new(JointRerank));
        r.register_speaker(Arc::new(Greedy));
        r.register_divergence(Arc::new(UnigramJsd));
        r
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            listeners: BTreeMap::new(),
            speakers: BTreeMap::new(),
            divergences: BTreeMap::new(),
        }
    }

    pub fn register_listener(&mut self, s: Arc<dyn ListenerStrategy>) {
        self.listeners.insert(s.name(), s);
    }

    pub fn register_speaker(&mut self, s: Arc<dyn SpeakerStrategy>) {
        self.speakers.insert(s.name(), s);
    }

    pub fn register_divergence(&mut self, d: Arc<dyn CorpusDivergence>) {
        self.divergences.insert(d.name(), d);
    }

    pub fn listener(&self, name: &str) -> Result<Arc<dyn ListenerStrategy>> {
        self.listeners
            .get(name)
            .cloned()
            .ok_or_else(|| invalid(format!("unknown listener strategy '{name}' (known: {:?})", self.listeners.keys())))
    }

    pub fn speaker(&self, name: &str) -> Result<Arc<dyn SpeakerStrategy>> {
        self.speakers
            .get(name)
            .cloned()
            .ok_or_else(|| invalid(format!("unknown speaker strategy '{name}' (known: {:?})", self.speakers.keys())))
    }

    pub fn divergence(&self, name: &str) -> Result<Arc<dyn CorpusDivergence>> {
        self.divergences
            .get(name)
            .cloned()
            .ok_or_else(|| invalid(format!("unknown corpus divergence '{name}'")))
    }

    pub fn listener_names(&self) -> Vec<&'static str> {
        self.listeners.keys().copied().collect()
    }

    pub fn speaker_names(&self) -> Vec<&'static str> {
        self.speakers.keys().copied().collect()
    }
}
