//! Deployment campaigns: systems, games, rounds and their logs.

pub mod campaign;
pub mod config;
pub mod game;
pub mod variant;

pub use campaign::{
    assemble_training_data, game_seed, lab_from_config, marked_words, play_arm, run_campaign, run_round, CampaignLog, CampaignOutcome,
    DatasetSizes, Deployment, InitialModel, RoundLog, SeedLog, VariantRoundLog,
};
pub use config::CampaignConfig;
pub use game::{bootstrap_seed_data, draw_game, play_game, Agent, GameSetup, GameStreams, Lab, SeedData};
pub use variant::{VariantSpec, BASELINE, CONTROL, FULL, HUMAN, NO_DS, NO_JI};
