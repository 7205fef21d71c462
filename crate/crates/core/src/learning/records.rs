use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lang::{Utterance, Vocabulary};
use crate::world::Context;

/// The role the model played in a game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Listener,
    Speaker,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Listener, Role::Speaker];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Listener => "listener",
            Role::Speaker => "speaker",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partner {
    Oracle,
    Human,
}

/// Where a training record came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Collected in an interaction, in this role.
    Native,
    /// Converted from a positive record of the opposite role.
    Shared,
    /// Successful partner-partner game used for initialization.
    Seed,
}

/// Binary game reward, serialized as `1` / `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Reward {
    Positive,
    Negative,
}

impl Reward {
    pub fn from_outcome(success: bool) -> Self {
        if success {
            Reward::Positive
        } else {
            Reward::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Reward::Positive
    }

    pub fn value(self) -> f64 {
        match self {
            Reward::Positive => 1.0,
            Reward::Negative => -1.0,
        }
    }
}

impl From<Reward> for i8 {
    fn from(r: Reward) -> i8 {
        match r {
            Reward::Positive => 1,
            Reward::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Reward {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Reward::Positive),
            -1 => Ok(Reward::Negative),
            other => Err(format!("reward must be 1 or -1, got {other}")),
        }
    }
}

pub fn reward_from_outcome(success: bool) -> Reward {
    Reward::from_outcome(success)
}

/// One game, from the model's point of view.
///
/// For `role = listener` the comprehension datapoint is
/// `(context, utterance, selection, reward)`; for `role = speaker` the
/// generation datapoint is `(context, utterance, target, reward)`, with
/// `selection` holding the partner's choice. Slots are canonical indices into
/// `context.shape_ids`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub round: u32,
    pub system: String,
    pub role: Role,
    pub context: Context,
    pub utterance: Utterance,
    /// Raw partner text, when a human wrote the utterance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub target: usize,
    pub selection: usize,
    pub reward: Reward,
    /// Probability of the logged action under the policy that chose it.
    /// Shared and seed records carry 1.0; the value is unused for positive rewards.
    pub behavior_prob: f64,
    pub partner: Partner,
    pub provenance: Provenance,
    #[serde(default)]
    pub checkpoint: Option<String>,
    pub game: u64,
    /// Logical clock in simulation, Unix milliseconds for live games.
    pub timestamp: u64,
}

impl InteractionRecord {
    /// The action whose log-probability the learner follows.
    pub fn action(&self) -> usize {
        match self.role {
            Role::Listener => self.selection,
            Role::Speaker => self.target,
        }
    }

    pub fn success(&self) -> bool {
        self.reward.is_positive()
    }

    /// Words of the utterance: the raw text if present, otherwise token surfaces.
    pub fn words(&self, vocab: &Vocabulary) -> Vec<String> {
        match &self.text {
            Some(t) => crate::analysis::divergence::words(t),
            None => self
                .utterance
                .content()
                .iter()
                .map(|&t| vocab.surface(t).to_string())
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.behavior_prob > 0.0 && self.behavior_prob <= 1.0) {
            return Err(invalid(format!("behavior_prob {} outside (0, 1]", self.behavior_prob)));
        }
        if self.target >= self.context.len() || self.selection >= self.context.len() {
            return Err(invalid("slot index outside the context"));
        }
        if matches!(self.provenance, Provenance::Shared | Provenance::Seed) && !self.reward.is_positive() {
            return Err(invalid("shared and seed records must be positive"));
        }
        Ok(())
    }
}

/// Comprehension and generation data of one round (or a union of rounds).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundDatasets {
    pub listener: Vec<InteractionRecord>,
    pub speaker: Vec<InteractionRecord>,
}

impl RoundDatasets {
    pub fn extend(&mut self, other: RoundDatasets) {
        self.listener.extend(other.listener);
        self.speaker.extend(other.speaker);
    }

    pub fn count(&self, role: Role, provenance: Provenance) -> usize {
        let data = match role {
            Role::Listener => &self.listener,
            Role::Speaker => &self.speaker,
        };
        data.iter().filter(|r| r.provenance == provenance).count()
    }
}
