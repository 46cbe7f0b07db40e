use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AdamState, Mlp, PpoConfig};
use crate::env::SimConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to reuse or continue a trained agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub instance: usize,
    pub episodes: usize,
    pub actor: Mlp,
    pub critic: Mlp,
    pub adam_actor: AdamState,
    pub adam_critic: AdamState,
    pub rng: ChaCha8Rng,
    pub ppo: PpoConfig,
    pub sim: SimConfig,
    /// Mean cumulative fitness at the last evaluation point.
    pub final_eval_mean: f64,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::format(path, e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(CHECKPOINT_VERSION) => {}
            Some(v) => {
                return Err(Error::format(path, format!("unsupported checkpoint version {v}")))
            }
            None => return Err(Error::format(path, "missing checkpoint version")),
        }
        serde_json::from_value(value).map_err(|e| Error::format(path, e.to_string()))
    }
}
