//! Transparent, deterministic cellular automata driven by ordered if-then rules.
//!
//! Every transition the engine makes is recorded together with the rule that
//! fired and the neighbor states that rule read, so any cell's state can be
//! traced back to the initial pattern.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod models;
pub mod rules;
pub mod trace;

pub use error::{Error, Position, Result};
