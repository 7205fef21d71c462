use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::strategy::{BEST_OF_K_SPEAKER, JOINT_LISTENER, JOINT_RERANK_SPEAKER, LITERAL_LISTENER};

pub const FULL: &str = "full";
pub const NO_DS: &str = "no-ds";
pub const NO_JI: &str = "no-ji";
pub const BASELINE: &str = "baseline";
pub const HUMAN: &str = "human";
/// Final-round redeployment of the first deployed Full model.
pub const CONTROL: &str = "control";

/// One deployed system: how it infers in each role and whether it shares data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub name: String,
    pub joint_inference: bool,
    pub data_sharing: bool,
    /// `false` for the partner-vs-partner reference system.
    pub has_model: bool,
    pub listener_strategy: String,
    pub speaker_strategy: String,
}

impl VariantSpec {
    pub fn model(name: &str, joint_inference: bool, data_sharing: bool) -> Self {
        let (listener, speaker) = if joint_inference {
            (JOINT_LISTENER, JOINT_RERANK_SPEAKER)
        } else {
            (LITERAL_LISTENER, BEST_OF_K_SPEAKER)
        };
        VariantSpec {
            name: name.to_string(),
            joint_inference,
            data_sharing,
            has_model: true,
            listener_strategy: listener.to_string(),
            speaker_strategy: speaker.to_string(),
        }
    }

    pub fn human() -> Self {
        VariantSpec {
            name: HUMAN.to_string(),
            joint_inference: false,
            data_sharing: false,
            has_model: false,
            listener_strategy: String::new(),
            speaker_strategy: String::new(),
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            FULL => Ok(Self::model(FULL, true, true)),
            NO_DS => Ok(Self::model(NO_DS, true, false)),
            NO_JI => Ok(Self::model(NO_JI, false, true)),
            BASELINE => Ok(Self::model(BASELINE, false, false)),
            HUMAN => Ok(Self::human()),
            other => Err(invalid(format!("unknown variant '{other}'"))),
        }
    }

    pub fn standard() -> Vec<Self> {
        [FULL, NO_DS, NO_JI, BASELINE, HUMAN]
            .iter()
            .map(|n| Self::builtin(n).expect("builtin"))
            .collect()
    }
}
