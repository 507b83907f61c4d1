//! Run configuration file (TOML).
//!
//! ```toml
//! seed = 1
//! strategy = "weighted"          # random | weighted | load_aware
//! window_len_steps = 5
//! cloud_window_token_capacity = "unlimited"
//! electricity_rate_cents_per_kwh = 25.0
//! profiles = "fleet.csv"         # relative to this file
//! seeds = 30                     # compare / sweep
//! windows = [1, 2, 5, 10]        # sweep
//!
//! [workload]
//! users = 30
//! pattern = "bursty"
//! ```
//!
//! Keys left out fall back to their defaults. Values set here override the
//! profile file (cloud window, electricity rate).

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::dispatch::Strategy;
use crate::engine::{EngineError, SimConfig, DEFAULT_WINDOW_LEN_STEPS};
use crate::profiles::{load_profiles, CloudCapacity, ProfileError, ProfileSet};
use crate::workload::WorkloadConfig;

pub const DEFAULT_SEEDS: u32 = 30;
pub const DEFAULT_SWEEP_WINDOWS: [u32; 4] = [1, 2, 5, 10];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("config does not name a `profiles` file")]
    MissingProfiles,
    #[error(transparent)]
    Profiles(#[from] ProfileError),
    #[error(transparent)]
    Invalid(#[from] EngineError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    strategy: Option<Strategy>,
    window_len_steps: Option<u32>,
    cloud_window_token_capacity: Option<CloudCapacity>,
    electricity_rate_cents_per_kwh: Option<f64>,
    profiles: Option<String>,
    seeds: Option<u32>,
    windows: Option<Vec<u32>>,
    #[serde(default)]
    workload: WorkloadConfig,
}

/// A parsed config: the simulation itself plus orchestration settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub seeds: u32,
    pub windows: Vec<u32>,
    /// False when the file left `seed` out and `sim.seed` holds the default.
    pub seed_from_file: bool,
}

/// Loads a config file and the profile file it references.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = parse_file(&text)?;
    let rel = file
        .profiles
        .as_deref()
        .ok_or(ConfigError::MissingProfiles)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let profiles = load_profiles(base.join(rel))?;
    resolve(file, profiles)
}

/// Builds a config from in-memory text and an already loaded profile set;
/// the `profiles` key, if any, is ignored.
pub fn parse_config(text: &str, profiles: ProfileSet) -> Result<RunConfig, ConfigError> {
    resolve(parse_file(text)?, profiles)
}

fn parse_file(text: &str) -> Result<ConfigFile, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

fn resolve(file: ConfigFile, profiles: ProfileSet) -> Result<RunConfig, ConfigError> {
    let mut cloud = profiles.cloud;
    if let Some(cap) = file.cloud_window_token_capacity {
        cloud.window_token_capacity = cap;
    }
    let mut pricing = profiles.pricing;
    if let Some(rate) = file.electricity_rate_cents_per_kwh {
        pricing.rate_cents_per_kwh = rate;
    }
    let seeds = file.seeds.unwrap_or(DEFAULT_SEEDS);
    if seeds == 0 {
        return Err(ConfigError::Parse("seeds must be >= 1".into()));
    }
    let seed_from_file = file.seed.is_some();
    let sim = SimConfig {
        seed: file.seed.unwrap_or(0),
        strategy: file.strategy.unwrap_or_default(),
        window_len_steps: file.window_len_steps.unwrap_or(DEFAULT_WINDOW_LEN_STEPS),
        workload: file.workload,
        devices: profiles.devices,
        cloud,
        pricing,
    };
    sim.validate()?;
    Ok(RunConfig {
        sim,
        seeds,
        windows: file
            .windows
            .unwrap_or_else(|| DEFAULT_SWEEP_WINDOWS.to_vec()),
        seed_from_file,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::parse_profiles;
    use crate::workload::Pattern;

    const FLEET: &str =
        "id,tgs,ttft_s,power_w,energy_per_query_wh,quality,window_token_capacity,max_parallel\n\
                         a,10,0.3,9,0.07,0.8,800,1\n";

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = parse_config("", parse_profiles(FLEET).unwrap()).unwrap();
        assert_eq!(cfg.sim.window_len_steps, 5);
        assert_eq!(cfg.sim.strategy, Strategy::Random);
        assert_eq!(cfg.sim.workload, WorkloadConfig::default());
        assert_eq!(cfg.seeds, 30);
    }

    #[test]
    fn overrides_apply() {
        let text = r#"
            strategy = "load_aware"
            cloud_window_token_capacity = 5000
            electricity_rate_cents_per_kwh = 12.5
            [workload]
            pattern = "bursty"
            users = 4
        "#;
        let cfg = parse_config(text, parse_profiles(FLEET).unwrap()).unwrap();
        assert_eq!(cfg.sim.strategy, Strategy::LoadAware);
        assert_eq!(
            cfg.sim.cloud.window_token_capacity,
            CloudCapacity::Tokens(5000)
        );
        assert_eq!(cfg.sim.pricing.rate_cents_per_kwh, 12.5);
        assert_eq!(cfg.sim.workload.pattern, Pattern::Bursty);
        assert_eq!(cfg.sim.workload.users, 4);
        assert_eq!(cfg.sim.workload.steps, 60);
    }

    #[test]
    fn unknown_strategy_named() {
        let err =
            parse_config("strategy = \"fastest\"", parse_profiles(FLEET).unwrap()).unwrap_err();
        assert!(err.to_string().contains("fastest"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_config("colour = 3", parse_profiles(FLEET).unwrap()).is_err());
        assert!(parse_config("[workload]\nuserz = 3", parse_profiles(FLEET).unwrap()).is_err());
    }
}
