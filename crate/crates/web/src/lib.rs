//! Browser bindings. Every export takes plain numbers and strings and returns
//! a JSON string; errors surface as thrown strings.

use edgeflow_core::engine::StepRecord;
use edgeflow_core::{
    directional_checks, parse_config, parse_profiles, platform_report, run_compare, run_simulation,
    seed_list, utilization_stats, Pattern, ProfileSet, ReportOptions, ResponsivenessMode,
    RunConfig, Strategy,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const FLEET: &str = include_str!("../../../configs/fleet.csv");
const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

fn fleet() -> Result<ProfileSet, String> {
    parse_profiles(FLEET).map_err(|e| e.to_string())
}

fn base_config() -> Result<RunConfig, String> {
    parse_config(DEFAULT_CONFIG, fleet()?).map_err(|e| e.to_string())
}

pub fn platform_table_json(
    alpha: f64,
    avg_in: u32,
    avg_out: u32,
    rate_cents_per_kwh: f64,
    r_mode: &str,
) -> Result<String, String> {
    let mut set = fleet()?;
    set.pricing.rate_cents_per_kwh = rate_cents_per_kwh;
    let r_mode = match r_mode {
        "raw" => ResponsivenessMode::Raw,
        "inverse_ttft" => ResponsivenessMode::InverseTtft,
        other => return Err(format!("unknown r mode `{other}`")),
    };
    let opts = ReportOptions {
        alpha,
        avg_in: avg_in.into(),
        avg_out: avg_out.into(),
        r_mode,
        ..ReportOptions::default()
    };
    let rows = platform_report(&set.devices, &set.cloud, &set.pricing, &opts)
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SimView<'a> {
    devices: Vec<&'a str>,
    steps: &'a [StepRecord],
    utilization: Vec<Vec<f64>>,
    utilization_mean: f64,
    utilization_std: f64,
    totals: &'a edgeflow_core::engine::Totals,
}

pub fn simulate_json(
    strategy: &str,
    pattern: &str,
    window_len_steps: u32,
    seed: u32,
    p_base: f64,
    p_burst: f64,
) -> Result<String, String> {
    let mut cfg = base_config()?.sim;
    cfg.strategy = strategy.parse::<Strategy>()?;
    cfg.workload.pattern = pattern.parse::<Pattern>()?;
    cfg.window_len_steps = window_len_steps;
    cfg.seed = seed.into();
    cfg.workload.p_base = p_base;
    cfg.workload.p_burst = p_burst;
    let report = run_simulation(&cfg).map_err(|e| e.to_string())?;
    let util = utilization_stats(&report);
    let view = SimView {
        devices: report
            .config
            .devices
            .iter()
            .map(|d| d.id.as_str())
            .collect(),
        steps: &report.steps,
        utilization: util.series,
        utilization_mean: util.mean,
        utilization_std: util.std,
        totals: &report.totals,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CompareView<'a> {
    cells: &'a [edgeflow_core::experiment::CellStats],
    checks: Vec<CheckView>,
}

#[derive(Serialize)]
struct CheckView {
    name: &'static str,
    description: &'static str,
    holds_on_means: bool,
    per_seed_fraction: f64,
}

pub fn compare_json(seeds: u32, window_len_steps: u32) -> Result<String, String> {
    if seeds == 0 {
        return Err("seeds must be >= 1".into());
    }
    let mut cfg = base_config()?.sim;
    cfg.window_len_steps = window_len_steps;
    let cmp = run_compare(&cfg, &seed_list(cfg.seed, seeds)).map_err(|e| e.to_string())?;
    let checks = directional_checks(&cmp)
        .into_iter()
        .map(|c| CheckView {
            name: c.name,
            description: c.description,
            holds_on_means: c.holds_on_means,
            per_seed_fraction: c.per_seed_fraction,
        })
        .collect();
    serde_json::to_string(&CompareView {
        cells: &cmp.cells,
        checks,
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn platform_table(
    alpha: f64,
    avg_in: u32,
    avg_out: u32,
    rate_cents_per_kwh: f64,
    r_mode: &str,
) -> Result<String, JsValue> {
    platform_table_json(alpha, avg_in, avg_out, rate_cents_per_kwh, r_mode).map_err(JsValue::from)
}

#[wasm_bindgen]
pub fn simulate(
    strategy: &str,
    pattern: &str,
    window_len_steps: u32,
    seed: u32,
    p_base: f64,
    p_burst: f64,
) -> Result<String, JsValue> {
    simulate_json(strategy, pattern, window_len_steps, seed, p_base, p_burst).map_err(JsValue::from)
}

#[wasm_bindgen]
pub fn compare(seeds: u32, window_len_steps: u32) -> Result<String, JsValue> {
    compare_json(seeds, window_len_steps).map_err(JsValue::from)
}
