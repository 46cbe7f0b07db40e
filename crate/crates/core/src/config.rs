//! TOML configuration with one section per component.
//!
//! Every key is optional and defaults to the reference calibration. Unknown
//! keys are errors. Any key can be overridden from the environment as
//! `INTERBANK__<SECTION>__<KEY>=<value>`, where the value is read as a TOML
//! literal and falls back to a string.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::SweepParameter;
use crate::env::{EnvParams, SimConfig};
use crate::error::{Error, Result};
use crate::market::MarketParams;
use crate::network::NetworkParams;
use crate::ppo::PpoConfig;

pub const ENV_PREFIX: &str = "INTERBANK__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentParams {
    /// Monte Carlo replicas per strategy.
    pub replicas: usize,
    /// Replica `r` runs from seed `seed + r`.
    pub seed: u64,
    pub beta_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub omega_grid: Vec<f64>,
    /// Random draws of the degree-preserving null per replica.
    pub null_draws: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            replicas: 200,
            seed: 0,
            beta_grid: SweepParameter::Beta.default_grid(),
            rho_grid: SweepParameter::Rho.default_grid(),
            omega_grid: SweepParameter::Omega.default_grid(),
            null_draws: 1000,
        }
    }
}

impl ExperimentParams {
    pub fn grid(&self, p: SweepParameter) -> &[f64] {
        match p {
            SweepParameter::Beta => &self.beta_grid,
            SweepParameter::Rho => &self.rho_grid,
            SweepParameter::Omega => &self.omega_grid,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.replicas == 0 {
            return Err("experiment.replicas must be at least 1".into());
        }
        for p in SweepParameter::ALL {
            let (lo, hi) = p.range();
            if self.grid(p).iter().any(|&v| !(v >= lo - 1e-9 && v <= hi + 1e-9)) {
                return Err(format!("experiment.{p}_grid must lie within [{lo}, {hi}]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub market: MarketParams,
    pub network: NetworkParams,
    pub env: EnvParams,
    pub ppo: PpoConfig,
    pub experiment: ExperimentParams,
}

impl Config {
    pub fn sim(&self) -> SimConfig {
        SimConfig {
            market: self.market.clone(),
            network: self.network.clone(),
            env: self.env.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim()
            .validate()
            .and_then(|_| self.ppo.validate())
            .and_then(|_| self.experiment.validate())
            .map_err(Error::Config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Config = table.try_into().map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read `path` (defaults when `None`), apply overrides from `vars` and
    /// validate.
    pub fn load<I>(path: Option<&Path>, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut table: toml::Table = text.parse().map_err(|e| match path {
            Some(p) => Error::Config(format!("{}: {e}", p.display())),
            None => Error::Config(format!("{e}")),
        })?;
        let mut overrides: Vec<(String, String)> = vars
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        overrides.sort();
        for (k, v) in overrides {
            apply_override(&mut table, &k, &v)?;
        }
        Self::from_table(table)
    }

    /// [`Config::load`] with the process environment.
    pub fn load_with_env(path: Option<&Path>) -> Result<Self> {
        Self::load(path, std::env::vars())
    }

    /// The full effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn apply_override(table: &mut toml::Table, var: &str, value: &str) -> Result<()> {
    let rest = &var[ENV_PREFIX.len()..];
    let (section, key) = rest
        .split_once("__")
        .filter(|(s, k)| !s.is_empty() && !k.is_empty() && !k.contains("__"))
        .ok_or_else(|| Error::Config(format!("{var}: expected {ENV_PREFIX}<SECTION>__<KEY>")))?;
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let entry = table
        .entry(section.to_ascii_lowercase())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(key.to_ascii_lowercase(), parsed);
            Ok(())
        }
        _ => Err(Error::Config(format!("{var}: `{section}` is not a section"))),
    }
}
