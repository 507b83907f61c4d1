//! Discrete-time simulation loop and run accounting.
//!
//! Each step: advance every window, release finished jobs, dispatch the
//! step's arrivals in id order, then record a [`StepRecord`].

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{
    dispatch_request, CloudGate, Decision, DeviceRuntime, DispatchError, DispatchOutcome, Strategy,
};
use crate::metrics::cpr_edge;
use crate::profiles::{validate_profile, CloudProfile, DeviceProfile, EnergyPricing};
use crate::ratelimit::RateLimitError;
use crate::rng::{stream_rng, Stream};
use crate::workload::{generate_requests, WorkloadConfig, WorkloadError};

pub const DEFAULT_WINDOW_LEN_STEPS: u32 = 5;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Window(#[from] RateLimitError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub strategy: Strategy,
    pub window_len_steps: u32,
    pub workload: WorkloadConfig,
    pub devices: Vec<DeviceProfile>,
    pub cloud: CloudProfile,
    pub pricing: EnergyPricing,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.workload.validate()?;
        if self.window_len_steps == 0 {
            return Err(EngineError::InvalidConfig(
                "window_len_steps must be >= 1".into(),
            ));
        }
        if self.devices.is_empty() {
            return Err(EngineError::InvalidConfig(
                "no edge devices configured".into(),
            ));
        }
        let mut ids = HashSet::new();
        for d in &self.devices {
            let v = validate_profile(d);
            if !v.is_empty() {
                let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                return Err(EngineError::InvalidConfig(format!(
                    "device `{}`: {}",
                    d.id,
                    list.join("; ")
                )));
            }
            if !ids.insert(d.id.as_str()) {
                return Err(EngineError::InvalidConfig(format!(
                    "duplicate device id `{}`",
                    d.id
                )));
            }
        }
        if !(self.pricing.rate_cents_per_kwh >= 0.0) {
            return Err(EngineError::InvalidConfig(
                "electricity rate must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceSample {
    pub window_used: u64,
    pub busy_slots: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub arrivals: u64,
    pub edge_accepted: u64,
    pub edge_rejected: u64,
    pub cloud_redirected: u64,
    pub dropped: u64,
    /// Output tokens of requests redirected to the cloud.
    pub tokens_to_cloud: u64,
    /// Input plus output tokens charged against the cloud window.
    pub cloud_tokens: u64,
    pub cloud_cost_cents: f64,
    pub devices: Vec<DeviceSample>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub requests: u64,
    pub edge_processed: u64,
    pub edge_rejected: u64,
    pub cloud_redirected: u64,
    pub dropped: u64,
    pub tokens_to_cloud: u64,
    pub cloud_tokens: u64,
    pub cloud_cost_cents: f64,
    pub edge_energy_wh: f64,
    pub edge_energy_cost_cents: f64,
    /// Accepted edge jobs still holding a slot when the horizon ends.
    pub in_flight_at_end: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSummary {
    pub id: String,
    pub processed: u64,
    pub tokens: u64,
    pub mean_utilization: f64,
    pub energy_derived: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SimConfig,
    pub steps: Vec<StepRecord>,
    pub outcomes: Vec<DispatchOutcome>,
    pub totals: Totals,
    pub devices: Vec<DeviceSummary>,
    /// Mean over devices of each device's mean utilization.
    pub utilization_mean: f64,
    /// Population standard deviation of the per-device mean utilizations.
    pub utilization_std: f64,
}

pub fn run_simulation(cfg: &SimConfig) -> Result<RunReport, EngineError> {
    cfg.validate()?;
    let w = cfg.window_len_steps;
    let requests = generate_requests(&cfg.workload, cfg.seed)?;
    let mut devices = cfg
        .devices
        .iter()
        .map(|p| DeviceRuntime::new(p.clone(), w))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cloud = CloudGate::new(cfg.cloud.clone(), w)?;
    let mut rng = stream_rng(cfg.seed, Stream::Dispatch);

    let mut steps = Vec::with_capacity(cfg.workload.steps as usize);
    let mut outcomes = Vec::with_capacity(requests.len());
    let mut pending = requests.iter().peekable();

    for now in 0..cfg.workload.steps {
        for d in devices.iter_mut() {
            d.window.advance(now)?;
            d.release(now);
        }
        cloud.advance(now)?;

        let mut rec = StepRecord {
            step: now,
            arrivals: 0,
            edge_accepted: 0,
            edge_rejected: 0,
            cloud_redirected: 0,
            dropped: 0,
            tokens_to_cloud: 0,
            cloud_tokens: 0,
            cloud_cost_cents: 0.0,
            devices: Vec::new(),
        };
        while let Some(req) = pending.next_if(|r| r.arrival_step == now) {
            let out = dispatch_request(
                req,
                &mut devices,
                &mut cloud,
                cfg.strategy,
                now,
                cfg.workload.step_seconds,
                &mut rng,
            )?;
            rec.arrivals += 1;
            match out.decision {
                Decision::Edge(_) => rec.edge_accepted += 1,
                Decision::Cloud => {
                    rec.edge_rejected += 1;
                    rec.cloud_redirected += 1;
                    rec.tokens_to_cloud += out.tokens;
                    rec.cloud_tokens += out.tokens + out.input_tokens;
                    rec.cloud_cost_cents += out.cost_cents;
                }
                Decision::Dropped => {
                    rec.edge_rejected += 1;
                    rec.dropped += 1;
                }
            }
            outcomes.push(out);
        }
        rec.devices = devices
            .iter()
            .map(|d| {
                debug_assert!(d.window.window_used() <= d.window.capacity_tokens());
                DeviceSample {
                    window_used: d.window.window_used(),
                    busy_slots: d.busy_slots(),
                }
            })
            .collect();
        steps.push(rec);
    }

    let mut totals = Totals::default();
    for s in &steps {
        totals.requests += s.arrivals;
        totals.edge_processed += s.edge_accepted;
        totals.edge_rejected += s.edge_rejected;
        totals.cloud_redirected += s.cloud_redirected;
        totals.dropped += s.dropped;
        totals.tokens_to_cloud += s.tokens_to_cloud;
        totals.cloud_tokens += s.cloud_tokens;
        totals.cloud_cost_cents += s.cloud_cost_cents;
    }
    totals.in_flight_at_end = devices.iter().map(|d| d.active_jobs.len() as u64).sum();

    let mut report = RunReport {
        config: cfg.clone(),
        steps,
        outcomes,
        totals,
        devices: Vec::new(),
        utilization_mean: 0.0,
        utilization_std: 0.0,
    };
    let energy = edge_energy_total(&report, &cfg.devices);
    report.totals.edge_energy_wh = energy.wh;
    report.totals.edge_energy_cost_cents = energy.cents;

    let util = utilization_stats(&report);
    report.utilization_mean = util.mean;
    report.utilization_std = util.std;
    report.devices = cfg
        .devices
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mine = report
                .outcomes
                .iter()
                .filter(|o| o.decision == Decision::Edge(i));
            let (processed, tokens) = mine.fold((0, 0), |(n, t), o| (n + 1, t + o.tokens));
            DeviceSummary {
                id: p.id.clone(),
                processed,
                tokens,
                mean_utilization: util.per_device_mean[i],
                energy_derived: p.energy_is_derived(),
            }
        })
        .collect();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationStats {
    pub per_device_mean: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// `series[t][d]`: window utilization of device `d` after step `t`.
    pub series: Vec<Vec<f64>>,
}

/// Window-based utilization: tokens in the window over window capacity.
pub fn utilization_stats(report: &RunReport) -> UtilizationStats {
    let caps: Vec<f64> = report
        .config
        .devices
        .iter()
        .map(|d| d.window_token_capacity as f64)
        .collect();
    let series: Vec<Vec<f64>> = report
        .steps
        .iter()
        .map(|s| {
            s.devices
                .iter()
                .zip(&caps)
                .map(|(d, cap)| d.window_used as f64 / cap)
                .collect()
        })
        .collect();
    let n_steps = series.len();
    let per_device_mean: Vec<f64> = (0..caps.len())
        .map(|d| {
            if n_steps == 0 {
                0.0
            } else {
                series.iter().map(|row| row[d]).sum::<f64>() / n_steps as f64
            }
        })
        .collect();
    let (mean, std) = mean_std_population(&per_device_mean);
    UtilizationStats {
        per_device_mean,
        mean,
        std,
        series,
    }
}

pub(crate) fn mean_std_population(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeEnergy {
    pub wh: f64,
    pub cents: f64,
}

/// Energy of every edge-served request and its electricity cost.
pub fn edge_energy_total(report: &RunReport, profiles: &[DeviceProfile]) -> EdgeEnergy {
    let wh: f64 = report
        .outcomes
        .iter()
        .filter_map(|o| match o.decision {
            Decision::Edge(i) => Some(profiles[i].energy_wh(o.tokens)),
            _ => None,
        })
        .sum();
    EdgeEnergy {
        wh,
        cents: cpr_edge(wh, &report.config.pricing).cents,
    }
}
