//! Interbank credit market simulator with a learned regulator signal.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod explain;
pub mod manifest;
pub mod market;
pub mod network;
pub mod ppo;

pub use error::{Error, Result};
