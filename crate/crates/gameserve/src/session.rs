//! One player's sequence of games against a served checkpoint.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use refgame::agent::ModelParams;
use refgame::arena::{draw_game, Agent, Lab, VariantSpec};
use refgame::lang::Utterance;
use refgame::learning::{InteractionRecord, Partner, Provenance, Reward, Role};
use refgame::rng::StreamRng;
use refgame::world::Context;

use crate::error::{ApiError, ApiResult};
use crate::glyph::{glyph, Glyph};

/// Games per role before switching; the context is fixed for one speaker
/// block and one listener block.
pub const ROLE_BLOCK: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Speak,
    Listen,
    Feedback,
    Done,
}

/// Which role the human takes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RolePolicy {
    /// Three games as speaker, three as listener on the same context, repeat.
    #[default]
    Alternate,
    Speaker,
    Listener,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub games: u32,
    pub successes: u32,
}

/// What the player learns about the game they just finished.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub success: bool,
    /// The human's role in that game.
    pub role: Role,
    /// The player's own pick, in their view order (listener games only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_index: Option<usize>,
}

/// Everything a client may see. Speakers get `target_index`; listeners get
/// `utterance`; neither ever gets the other side's action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub session_id: String,
    pub variant: String,
    pub checkpoint: String,
    pub phase: Phase,
    pub role: Role,
    pub game: u32,
    pub shapes: Vec<Glyph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    pub score: Score,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous_outcome: Option<Outcome>,
}

pub struct Session {
    pub id: String,
    pub variant: VariantSpec,
    pub policy: RolePolicy,
    pub max_games: Option<u32>,
    pub rng: StreamRng,
    pub phase: Phase,
    pub game: u32,
    pub score: Score,
    pub context: Context,
    pub target: usize,
    /// The human's role in the current game.
    pub role: Role,
    /// Checkpoint pinned for the current game.
    pub agent: Agent,
    /// Model utterance shown to a human listener.
    pub model_utterance: Option<Utterance>,
    pub previous_outcome: Option<Outcome>,
}

impl Session {
    pub fn new(
        id: String,
        variant: VariantSpec,
        policy: RolePolicy,
        max_games: Option<u32>,
        rng: StreamRng,
        agent: Agent,
        lab: &Lab,
    ) -> ApiResult<Self> {
        let mut s = Session {
            id,
            variant,
            policy,
            max_games,
            rng,
            phase: Phase::Done,
            game: 0,
            score: Score::default(),
            context: Context::fixed(Vec::new()),
            target: 0,
            role: Role::Speaker,
            agent,
            model_utterance: None,
            previous_outcome: None,
        };
        s.start_game(lab)?;
        Ok(s)
    }

    fn human_role(&self, game: u32) -> Role {
        match self.policy {
            RolePolicy::Speaker => Role::Speaker,
            RolePolicy::Listener => Role::Listener,
            RolePolicy::Alternate if (game / ROLE_BLOCK) % 2 == 0 => Role::Speaker,
            RolePolicy::Alternate => Role::Listener,
        }
    }

    /// Sets up game `self.game`: a fresh context at the start of each
    /// speaker+listener cycle, a fresh target every game.
    fn start_game(&mut self, lab: &Lab) -> ApiResult<()> {
        if self.max_games.is_some_and(|m| self.game >= m) {
            self.phase = Phase::Done;
            return Ok(());
        }
        if self.game % (2 * ROLE_BLOCK) == 0 || self.context.is_empty() {
            let (context, _) = draw_game(&lab.library, &mut self.rng)?;
            self.context = context;
        }
        self.target = self.rng.gen_range(0..self.context.len());
        self.role = self.human_role(self.game);
        self.model_utterance = None;
        match self.role {
            Role::Speaker => self.phase = Phase::Speak,
            Role::Listener => {
                let board = lab.library.board(&self.context);
                let spoken = self
                    .agent
                    .speaker
                    .speak(&self.agent.params, &board, self.target, &lab.hyper, lab.vocab.eos(), &mut self.rng)?;
                self.model_utterance = Some(spoken.utterance);
                self.phase = Phase::Listen;
            }
        }
        Ok(())
    }

    /// Swaps in `agent` for the next game if the served checkpoint changed.
    pub fn advance(&mut self, lab: &Lab, agent: Option<Agent>) -> ApiResult<()> {
        if self.phase != Phase::Feedback {
            return Ok(());
        }
        if let Some(a) = agent {
            self.agent = a;
        }
        self.game += 1;
        self.start_game(lab)
    }

    fn view(&self) -> &[usize] {
        match self.role {
            Role::Speaker => &self.context.speaker_perm,
            Role::Listener => &self.context.listener_perm,
        }
    }

    pub fn state(&self, lab: &Lab) -> GameState {
        let shapes = self
            .view()
            .iter()
            .map(|&slot| glyph(&lab.library.schema, lab.library.shape(self.context.shape_ids[slot])))
            .collect();
        let playing = matches!(self.phase, Phase::Speak | Phase::Listen);
        GameState {
            session_id: self.id.clone(),
            variant: self.variant.name.clone(),
            checkpoint: self.agent.checkpoint.clone(),
            phase: self.phase,
            role: self.role,
            game: self.game,
            shapes,
            target_index: (playing && self.phase == Phase::Speak).then(|| self.context.speaker_view_of(self.target)),
            utterance: match (&self.model_utterance, self.phase) {
                (Some(u), Phase::Listen) => Some(lab.vocab.render(u)),
                _ => None,
            },
            score: self.score,
            previous_outcome: self.previous_outcome.clone(),
        }
    }

    fn finish(&mut self, success: bool, chosen_index: Option<usize>) {
        self.score.games += 1;
        self.score.successes += u32::from(success);
        self.previous_outcome = Some(Outcome {
            success,
            role: self.role,
            chosen_index,
        });
        self.phase = Phase::Feedback;
    }

    fn record(&self, role: Role, utterance: Utterance, text: Option<String>, selection: usize, behavior_prob: f64, round: u32, now: u64) -> InteractionRecord {
        InteractionRecord {
            round,
            system: self.variant.name.clone(),
            role,
            context: self.context.clone(),
            utterance,
            text,
            target: self.target,
            selection,
            reward: Reward::from_outcome(selection == self.target),
            behavior_prob,
            partner: Partner::Human,
            provenance: Provenance::Native,
            checkpoint: Some(self.agent.checkpoint.clone()),
            game: u64::from(self.game),
            timestamp: now,
        }
    }

    /// Human speaker: the model listens to `text`.
    pub fn submit_utterance(&mut self, lab: &Lab, text: &str, round: u32, now: u64) -> ApiResult<InteractionRecord> {
        if self.phase != Phase::Speak {
            return Err(ApiError::Conflict(format!("session is in the {:?} phase, not speak", self.phase)));
        }
        if text.split_whitespace().next().is_none() {
            return Err(ApiError::InvalidArgument("utterance text is empty".into()));
        }
        let mut tokens = lab.vocab.tokenize(text);
        tokens.truncate(lab.dims.max_len);
        let utterance = Utterance::new(tokens, &lab.vocab);
        let board = lab.library.board(&self.context);
        let (pick, prob) = self.agent.listener.select(&self.agent.params, &board, &utterance, &lab.hyper)?;
        let record = self.record(Role::Listener, utterance, Some(text.to_string()), pick, prob, round, now);
        self.finish(pick == self.target, None);
        Ok(record)
    }

    /// Human listener: `index` is a position in the listener's view.
    pub fn submit_selection(&mut self, lab: &Lab, index: usize, round: u32, now: u64) -> ApiResult<InteractionRecord> {
        if self.phase != Phase::Listen {
            return Err(ApiError::Conflict(format!("session is in the {:?} phase, not listen", self.phase)));
        }
        if index >= self.context.len() {
            return Err(ApiError::InvalidArgument(format!("index {index} outside 0..{}", self.context.len())));
        }
        let utterance = self.model_utterance.clone().expect("listen phase has a model utterance");
        let board = lab.library.board(&self.context);
        let logprob = refgame::agent::speaker_logprob(&self.agent.params, &board, self.target, &utterance)?;
        let selection = self.context.listener_perm[index];
        let record = self.record(Role::Speaker, utterance, None, selection, logprob.exp().max(f64::MIN_POSITIVE), round, now);
        self.finish(selection == self.target, Some(index));
        Ok(record)
    }

    pub fn params(&self) -> &Arc<ModelParams> {
        &self.agent.params
    }
}
