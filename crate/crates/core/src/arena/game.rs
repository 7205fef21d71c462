//! Single games between the agent (or a simulated partner) and a simulated partner.

use std::sync::Arc;

use rand::Rng;

use super::variant::VariantSpec;
use crate::agent::{checkpoint, Hyper, ModelDims, ModelParams};
use crate::error::{Error, Result};
use crate::lang::Vocabulary;
use crate::learning::{InteractionRecord, Partner, Provenance, Reward, Role, ValidationGame};
use crate::rng::{self, StreamRng};
use crate::strategy::{ListenerStrategy, Registry, SpeakerStrategy};
use crate::world::{build_context_with, oracle_listen, oracle_speak, Context, PartnerNoise, ShapeLibrary, DEFAULT_BLOCKS};

/// Everything about the environment that stays fixed across a campaign.
#[derive(Clone, Debug)]
pub struct Lab {
    pub library: ShapeLibrary,
    pub vocab: Vocabulary,
    pub noise: PartnerNoise,
    pub hyper: Hyper,
    pub dims: ModelDims,
    pub registry: Registry,
}

impl Lab {
    pub fn new(library: ShapeLibrary, fillers: usize, embed: usize, max_len: usize, noise: PartnerNoise, hyper: Hyper) -> Self {
        let vocab = Vocabulary::new(&library.schema, fillers);
        let dims = ModelDims::new(&vocab, &library.schema, embed, max_len);
        Lab {
            library,
            vocab,
            noise,
            hyper,
            dims,
            registry: Registry::default(),
        }
    }
}

/// A frozen parameter snapshot with the inference strategies of its variant.
#[derive(Clone)]
pub struct Agent {
    pub params: Arc<ModelParams>,
    pub checkpoint: String,
    pub listener: Arc<dyn ListenerStrategy>,
    pub speaker: Arc<dyn SpeakerStrategy>,
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent")
            .field("checkpoint", &self.checkpoint)
            .field("listener", &self.listener.name())
            .field("speaker", &self.speaker.name())
            .finish()
    }
}

impl Agent {
    pub fn new(params: Arc<ModelParams>, variant: &VariantSpec, registry: &Registry) -> Result<Self> {
        Ok(Agent {
            checkpoint: checkpoint::checkpoint_id(&params),
            listener: registry.listener(&variant.listener_strategy)?,
            speaker: registry.speaker(&variant.speaker_strategy)?,
            params,
        })
    }
}

/// Independent random streams for one game, so that different policies
/// consuming different amounts of randomness still see the same context,
/// target and partner behavior.
pub struct GameStreams {
    pub context: StreamRng,
    pub partner: StreamRng,
    pub model: StreamRng,
}

impl GameStreams {
    pub fn new(seed: u64) -> Self {
        GameStreams {
            context: rng::stream(&[seed, rng::label("context")]),
            partner: rng::stream(&[seed, rng::label("partner")]),
            model: rng::stream(&[seed, rng::label("model")]),
        }
    }
}

/// A fresh context and uniformly drawn target.
pub fn draw_game(library: &ShapeLibrary, rng: &mut StreamRng) -> Result<(Context, usize)> {
    let context = build_context_with(library, &DEFAULT_BLOCKS, rng)?;
    let target = rng.gen_range(0..context.len());
    Ok((context, target))
}

pub struct GameSetup<'a> {
    pub round: u32,
    pub game: u64,
    pub variant: &'a str,
    pub role: Role,
    pub context: Context,
    pub target: usize,
}

/// Plays one game. With an agent, the agent takes `role` and the simulated
/// partner the other; without one, both sides are simulated partners.
pub fn play_game(lab: &Lab, agent: Option<&Agent>, setup: GameSetup<'_>, streams: &mut GameStreams) -> Result<InteractionRecord> {
    let GameSetup {
        round,
        game,
        variant,
        role,
        context,
        target,
    } = setup;
    let board = lab.library.board(&context);
    let (utterance, selection, behavior_prob) = match (agent, role) {
        (None, _) => {
            let u = oracle_speak(&lab.library, &context, target, &lab.vocab, &lab.noise, &mut streams.partner);
            let pick = oracle_listen(&lab.library, &context, &u, &lab.vocab, &lab.noise, &mut streams.partner);
            (u, pick, 1.0)
        }
        (Some(agent), Role::Listener) => {
            let u = oracle_speak(&lab.library, &context, target, &lab.vocab, &lab.noise, &mut streams.partner);
            let (pick, prob) = agent.listener.select(&agent.params, &board, &u, &lab.hyper)?;
            (u, pick, prob)
        }
        (Some(agent), Role::Speaker) => {
            let spoken = agent
                .speaker
                .speak(&agent.params, &board, target, &lab.hyper, lab.vocab.eos(), &mut streams.model)?;
            let pick = oracle_listen(&lab.library, &context, &spoken.utterance, &lab.vocab, &lab.noise, &mut streams.partner);
            (spoken.utterance, pick, spoken.base_logprob.exp().max(f64::MIN_POSITIVE))
        }
    };
    if !(behavior_prob > 0.0 && behavior_prob <= 1.0) {
        return Err(Error::NonFinite(format!("behavior probability {behavior_prob} in game {game}")));
    }
    Ok(InteractionRecord {
        round,
        system: variant.to_string(),
        role,
        context,
        utterance,
        text: None,
        target,
        selection,
        reward: Reward::from_outcome(selection == target),
        behavior_prob,
        partner: Partner::Oracle,
        provenance: Provenance::Native,
        checkpoint: agent.map(|a| a.checkpoint.clone()),
        game,
        timestamp: game,
    })
}

/// Seed (training) and validation sets of successful partner-partner games.
#[derive(Clone, Debug)]
pub struct SeedData {
    /// One comprehension and one generation record per seed game.
    pub listener: Vec<InteractionRecord>,
    pub speaker: Vec<InteractionRecord>,
    /// Comprehension-side records of the validation games.
    pub validation: Vec<InteractionRecord>,
    pub attempts: usize,
}

impl SeedData {
    pub fn validation_games(&self, library: &ShapeLibrary) -> Vec<ValidationGame> {
        self.validation
            .iter()
            .map(|r| ValidationGame {
                board: library.board(&r.context),
                utterance: r.utterance.clone(),
                target: r.target,
            })
            .collect()
    }
}

/// Simulates partner-partner games and keeps the successes until both sets are
/// full. Seed games come first, validation games after, so the two are disjoint.
pub fn bootstrap_seed_data(lab: &Lab, seed_games: usize, validation_games: usize, seed: u64) -> Result<SeedData> {
    let wanted = seed_games + validation_games;
    let max_attempts = wanted.saturating_mul(100).max(100);
    let mut accepted = Vec::with_capacity(wanted);
    let mut attempts = 0usize;
    while accepted.len() < wanted {
        if attempts >= max_attempts {
            return Err(Error::Aborted(format!(
                "only {} of {wanted} successful partner games after {attempts} attempts",
                accepted.len()
            )));
        }
        let game_seed = rng::derive_seed(&[seed, rng::label("seed-games"), attempts as u64]);
        let mut streams = GameStreams::new(game_seed);
        let (context, target) = draw_game(&lab.library, &mut streams.context)?;
        let setup = GameSetup {
            round: 0,
            game: attempts as u64,
            variant: super::variant::HUMAN,
            role: Role::Listener,
            context,
            target,
        };
        let record = play_game(lab, None, setup, &mut streams)?;
        attempts += 1;
        if record.success() {
            accepted.push(record);
        }
    }
    let validation = accepted.split_off(seed_games);
    let seed_listener: Vec<InteractionRecord> = accepted
        .into_iter()
        .map(|r| InteractionRecord {
            provenance: Provenance::Seed,
            ..r
        })
        .collect();
    let seed_speaker = seed_listener
        .iter()
        .map(|r| InteractionRecord {
            role: Role::Speaker,
            ..r.clone()
        })
        .collect();
    Ok(SeedData {
        listener: seed_listener,
        speaker: seed_speaker,
        validation,
        attempts,
    })
}
