#![allow(dead_code)]

use std::path::PathBuf;

use edgeflow_core::{
    load_config, CloudProfile, DeviceProfile, EnergyPricing, RunConfig, SimConfig, Strategy,
    WorkloadConfig,
};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn default_config() -> RunConfig {
    load_config(repo_root().join("configs/default.toml")).expect("shipped config loads")
}

/// One device, W = 2, a single always-active user asking for 50 tokens.
pub fn single_device(capacity: u64) -> SimConfig {
    SimConfig {
        seed: 0,
        strategy: Strategy::Random,
        window_len_steps: 2,
        workload: WorkloadConfig {
            users: 1,
            steps: 3,
            p_base: 1.0,
            p_burst: 1.0,
            token_sizes: vec![50],
            token_weights: vec![1.0],
            input_tokens: 48,
            ..WorkloadConfig::default()
        },
        devices: vec![DeviceProfile {
            id: "solo".into(),
            tgs: 10.0,
            ttft_s: 0.33,
            power_w: 8.2,
            energy_per_query_wh: Some(0.0687),
            quality: 0.8,
            window_token_capacity: capacity,
            max_parallel: 1,
        }],
        cloud: CloudProfile::default(),
        pricing: EnergyPricing::default(),
    }
}

pub fn t1() -> SimConfig {
    single_device(100)
}

pub fn t2() -> SimConfig {
    single_device(50)
}
