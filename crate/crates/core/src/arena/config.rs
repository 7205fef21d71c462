//! Campaign configuration and its flat `key = value` file format.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; unknown keys are an error. Lists are comma separated.
//!
//! ```text
//! rounds = 4
//! interactions_base = 200
//! interactions_step = 50
//! master_seed = 1
//! hyper.lambda_listener = 0.5
//! noise.listener_err = 0.06
//! variants = full, no-ds, no-ji, baseline, human
//! variant.full.speaker = greedy
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::variant::VariantSpec;
use crate::agent::{Hyper, DEFAULT_EMBED_DIM, DEFAULT_FILLERS, DEFAULT_MAX_LEN};
use crate::error::{invalid, Error, Result};
use crate::world::PartnerNoise;

pub const DEFAULT_RESAMPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub rounds: usize,
    /// Games per role per variant in round 1.
    pub interactions_base: usize,
    /// Added to the per-role count every further round.
    pub interactions_step: usize,
    pub master_seed: u64,
    pub library_size: usize,
    pub seed_games: usize,
    pub validation_games: usize,
    /// Context-target pairs for regenerated-utterance language analysis.
    pub eval_pairs: usize,
    pub control_redeploy_final_round: bool,
    /// Train once more after the last round and estimate comprehension on
    /// held-out control-arm games.
    pub offline_extra_round: bool,
    pub embed_dim: usize,
    pub max_len: usize,
    pub fillers: usize,
    pub bootstrap_resamples: usize,
    /// Marked words for the accuracy breakdown; empty means the ORIENT tokens.
    pub marked_words: Vec<String>,
    pub noise: PartnerNoise,
    pub hyper: Hyper,
    pub variants: Vec<VariantSpec>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            rounds: 4,
            interactions_base: 200,
            interactions_step: 50,
            master_seed: 1,
            library_size: 256,
            seed_games: 104,
            validation_games: 280,
            eval_pairs: 200,
            control_redeploy_final_round: true,
            offline_extra_round: false,
            embed_dim: DEFAULT_EMBED_DIM,
            max_len: DEFAULT_MAX_LEN,
            fillers: DEFAULT_FILLERS,
            bootstrap_resamples: DEFAULT_RESAMPLES,
            marked_words: Vec::new(),
            noise: PartnerNoise::default(),
            hyper: Hyper::default(),
            variants: VariantSpec::standard(),
        }
    }
}

impl CampaignConfig {
    /// Games per role per variant in `round` (1-based).
    pub fn interactions(&self, round: usize) -> usize {
        self.interactions_base + self.interactions_step * (round - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.interactions_base == 0 {
            return Err(invalid("rounds and interactions_base must be positive"));
        }
        if self.seed_games == 0 || self.validation_games == 0 {
            return Err(invalid("seed_games and validation_games must be positive"));
        }
        if self.eval_pairs == 0 || self.bootstrap_resamples == 0 {
            return Err(invalid("eval_pairs and bootstrap_resamples must be positive"));
        }
        if self.max_len == 0 || self.embed_dim == 0 {
            return Err(invalid("max_len and embed_dim must be positive"));
        }
        let mut names: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate variant names"));
        }
        self.noise.validate()?;
        self.hyper.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = CampaignConfig::default();
        let mut overrides: Vec<(String, String, String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(rest) = key.strip_prefix("variant.") {
                let (name, field) = rest.rsplit_once('.').ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("expected variant.<name>.<field>, got `{key}`"),
                })?;
                overrides.push((name.to_string(), field.to_string(), value.to_string(), line_no));
                continue;
            }
            cfg.set(key, value).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        }
        for (name, field, value, line) in overrides {
            let variant = cfg
                .variants
                .iter_mut()
                .find(|v| v.name == name)
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("override for variant '{name}' which is not in `variants`"),
                })?;
            match field.as_str() {
                "listener" => variant.listener_strategy = value,
                "speaker" => variant.speaker_strategy = value,
                "data_sharing" => variant.data_sharing = parse_bool(&value).map_err(|m| Error::Parse { line, message: m })?,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown variant field '{other}'"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let h = &mut self.hyper;
        let n = &mut self.noise;
        match key {
            "rounds" => self.rounds = num(value)?,
            "interactions_base" => self.interactions_base = num(value)?,
            "interactions_step" => self.interactions_step = num(value)?,
            "master_seed" => self.master_seed = num(value)?,
            "library_size" => self.library_size = num(value)?,
            "seed_games" => self.seed_games = num(value)?,
            "validation_games" => self.validation_games = num(value)?,
            "eval_pairs" => self.eval_pairs = num(value)?,
            "control_redeploy_final_round" => self.control_redeploy_final_round = parse_bool(value)?,
            "offline_extra_round" => self.offline_extra_round = parse_bool(value)?,
            "embed_dim" => self.embed_dim = num(value)?,
            "max_len" => self.max_len = num(value)?,
            "fillers" => self.fillers = num(value)?,
            "bootstrap_resamples" => self.bootstrap_resamples = num(value)?,
            "marked_words" => self.marked_words = list(value).map(|w| w.to_lowercase()).collect(),
            "variants" => {
                self.variants = list(value)
                    .map(|name| VariantSpec::builtin(&name).map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "noise.speaker_drop" => n.speaker_drop = num(value)?,
            "noise.speaker_swap" => n.speaker_swap = num(value)?,
            "noise.listener_err" => n.listener_err = num(value)?,
            "noise.filler_prefix" => n.filler_prefix = num(value)?,
            "hyper.lambda_listener" => h.lambda_listener = num(value)?,
            "hyper.lambda_speaker" => h.lambda_speaker = num(value)?,
            "hyper.k" => h.k = num(value)?,
            "hyper.temperature" => h.temperature = num(value)?,
            "hyper.ips_clip" => h.ips_clip = num(value)?,
            "hyper.lr" => h.lr = num(value)?,
            "hyper.adam_beta1" => h.adam_beta1 = num(value)?,
            "hyper.adam_beta2" => h.adam_beta2 = num(value)?,
            "hyper.adam_eps" => h.adam_eps = num(value)?,
            "hyper.weight_decay" => h.weight_decay = num(value)?,
            "hyper.batch_size" => h.batch_size = num(value)?,
            "hyper.max_epochs" => h.max_epochs = num(value)?,
            "hyper.patience" => h.patience = num(value)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Serializes to the flat format; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let h = &self.hyper;
        let n = &self.noise;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("rounds", self.rounds.to_string());
        kv("interactions_base", self.interactions_base.to_string());
        kv("interactions_step", self.interactions_step.to_string());
        kv("master_seed", self.master_seed.to_string());
        kv("library_size", self.library_size.to_string());
        kv("seed_games", self.seed_games.to_string());
        kv("validation_games", self.validation_games.to_string());
        kv("eval_pairs", self.eval_pairs.to_string());
        kv("control_redeploy_final_round", self.control_redeploy_final_round.to_string());
        kv("offline_extra_round", self.offline_extra_round.to_string());
        kv("embed_dim", self.embed_dim.to_string());
        kv("max_len", self.max_len.to_string());
        kv("fillers", self.fillers.to_string());
        kv("bootstrap_resamples", self.bootstrap_resamples.to_string());
        kv("marked_words", self.marked_words.join(", "));
        kv("noise.speaker_drop", n.speaker_drop.to_string());
        kv("noise.speaker_swap", n.speaker_swap.to_string());
        kv("noise.listener_err", n.listener_err.to_string());
        kv("noise.filler_prefix", n.filler_prefix.to_string());
        kv("hyper.lambda_listener", h.lambda_listener.to_string());
        kv("hyper.lambda_speaker", h.lambda_speaker.to_string());
        kv("hyper.k", h.k.to_string());
        kv("hyper.temperature", h.temperature.to_string());
        kv("hyper.ips_clip", h.ips_clip.to_string());
        kv("hyper.lr", h.lr.to_string());
        kv("hyper.adam_beta1", h.adam_beta1.to_string());
        kv("hyper.adam_beta2", h.adam_beta2.to_string());
        kv("hyper.adam_eps", h.adam_eps.to_string());
        kv("hyper.weight_decay", h.weight_decay.to_string());
        kv("hyper.batch_size", h.batch_size.to_string());
        kv("hyper.max_epochs", h.max_epochs.to_string());
        kv("hyper.patience", h.patience.to_string());
        kv(
            "variants",
            self.variants.iter().map(|v| v.name.as_str()).collect::<Vec<_>>().join(", "),
        );
        for v in self.variants.iter().filter(|v| v.has_model) {
            kv(&format!("variant.{}.listener", v.name), v.listener_strategy.clone());
            kv(&format!("variant.{}.speaker", v.name), v.speaker_strategy.clone());
            kv(&format!("variant.{}.data_sharing", v.name), v.data_sharing.to_string());
        }
        out
    }
}

fn num<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("bad value `{value}`: {e}"))
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected a boolean, got `{other}`")),
    }
}

fn list(value: &str) -> impl Iterator<Item = String> + '_ {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string)
}
