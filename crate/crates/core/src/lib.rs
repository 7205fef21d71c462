//! Continual learning of coupled comprehension and generation in simulated
//! reference games.
//!
//! A single parametric agent plays both roles of a two-player reference game
//! against simulated partners, learns from binary game outcomes with a
//! REINFORCE-style contextual-bandit objective, and couples its two roles
//! through data sharing and joint inference.

pub mod agent;
pub mod analysis;
pub mod arena;
pub mod error;
pub mod lang;
pub mod learning;
pub mod pragmatics;
pub mod rng;
pub mod strategy;
pub mod world;

pub use error::{Error, Result};
