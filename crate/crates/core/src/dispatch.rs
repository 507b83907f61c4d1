//! Device selection and the edge / cloud / drop decision for one request.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::cpr_cloud;
use crate::profiles::{CloudCapacity, CloudProfile, DeviceProfile};
use crate::ratelimit::{RateLimitError, WindowState};
use crate::workload::Request;

#[derive(Debug, Error, PartialEq)]
pub enum DispatchError {
    #[error("no edge devices configured")]
    NoDevices,
    #[error("total device capacity is zero")]
    ZeroTotalCapacity,
    #[error(transparent)]
    Window(#[from] RateLimitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Random,
    Weighted,
    LoadAware,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::Weighted, Strategy::LoadAware];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Weighted => "weighted",
            Strategy::LoadAware => "load_aware",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                format!("unknown strategy `{s}` (expected random | weighted | load_aware)")
            })
    }
}

/// Live state of one edge device during a run.
#[derive(Debug, Clone)]
pub struct DeviceRuntime {
    pub profile: DeviceProfile,
    pub window: WindowState,
    /// (request id, finish step) of every job holding a slot.
    pub active_jobs: Vec<(u64, u32)>,
}

impl DeviceRuntime {
    pub fn new(profile: DeviceProfile, window_len_steps: u32) -> Result<Self, RateLimitError> {
        let window = WindowState::new(window_len_steps, profile.window_token_capacity)?;
        Ok(DeviceRuntime {
            profile,
            window,
            active_jobs: Vec::new(),
        })
    }

    pub fn busy_slots(&self) -> u32 {
        self.active_jobs.len() as u32
    }

    pub fn has_free_slot(&self) -> bool {
        self.busy_slots() < self.profile.max_parallel
    }

    /// Frees the slots of jobs finishing at or before `now`; returns how many.
    pub fn release(&mut self, now: u32) -> usize {
        let before = self.active_jobs.len();
        self.active_jobs.retain(|&(_, finish)| finish > now);
        before - self.active_jobs.len()
    }

    /// Steps a job of `output_tokens` occupies a slot (at least one).
    pub fn service_steps(&self, output_tokens: u64, step_seconds: f64) -> u32 {
        let seconds = output_tokens as f64 / self.profile.tgs;
        ((seconds / step_seconds).ceil() as u32).max(1)
    }
}

/// Cloud endpoint with an optional token window.
#[derive(Debug, Clone)]
pub struct CloudGate {
    pub profile: CloudProfile,
    pub window: Option<WindowState>,
}

impl CloudGate {
    pub fn new(profile: CloudProfile, window_len_steps: u32) -> Result<Self, RateLimitError> {
        let window = match profile.window_token_capacity {
            CloudCapacity::Unlimited => None,
            CloudCapacity::Tokens(n) => Some(WindowState::new(window_len_steps, n)?),
        };
        Ok(CloudGate { profile, window })
    }

    pub fn advance(&mut self, now: u32) -> Result<(), RateLimitError> {
        match &mut self.window {
            Some(w) => w.advance(now),
            None => Ok(()),
        }
    }

    fn try_admit(&mut self, now: u32, tokens: u64) -> Result<bool, RateLimitError> {
        match &mut self.window {
            Some(w) if tokens > 0 => w.try_admit(now, tokens),
            _ => Ok(true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "device")]
pub enum Decision {
    /// Served by the device at this index.
    Edge(usize),
    Cloud,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchOutcome {
    pub request_id: u64,
    pub decision: Decision,
    /// Output tokens of the request.
    pub tokens: u64,
    pub input_tokens: u64,
    pub cost_cents: f64,
}

/// Uniform over all devices, whatever their state.
pub fn select_random<R: Rng + ?Sized>(
    devices: &[DeviceRuntime],
    rng: &mut R,
) -> Result<usize, DispatchError> {
    if devices.is_empty() {
        return Err(DispatchError::NoDevices);
    }
    Ok(rng.gen_range(0..devices.len() as u64) as usize)
}

/// Probability proportional to each device's window token capacity.
pub fn select_weighted<R: Rng + ?Sized>(
    devices: &[DeviceRuntime],
    rng: &mut R,
) -> Result<usize, DispatchError> {
    if devices.is_empty() {
        return Err(DispatchError::NoDevices);
    }
    let weights = devices
        .iter()
        .map(|d| d.profile.window_token_capacity as f64);
    let index = WeightedIndex::new(weights).map_err(|_| DispatchError::ZeroTotalCapacity)?;
    Ok(index.sample(rng))
}

/// Device with a free slot and the most unused window tokens (lowest index
/// on ties), or `None` when every slot is busy.
pub fn select_load_aware(devices: &[DeviceRuntime]) -> Option<usize> {
    devices
        .iter()
        .enumerate()
        .filter(|(_, d)| d.has_free_slot())
        .fold(None, |best: Option<(usize, u64)>, (i, d)| {
            let avail = d.window.available();
            match best {
                Some((_, b)) if b >= avail => best,
                _ => Some((i, avail)),
            }
        })
        .map(|(i, _)| i)
}

/// Routes one request. Windows must already be advanced to `now`.
///
/// The strategy proposes a single candidate; if it has a free slot and its
/// window admits the output tokens the request runs at the edge. Otherwise
/// it is redirected to the cloud, or dropped when the cloud window is full.
pub fn dispatch_request<R: Rng + ?Sized>(
    req: &Request,
    devices: &mut [DeviceRuntime],
    cloud: &mut CloudGate,
    strategy: Strategy,
    now: u32,
    step_seconds: f64,
    rng: &mut R,
) -> Result<DispatchOutcome, DispatchError> {
    let candidate = match strategy {
        Strategy::Random => Some(select_random(devices, rng)?),
        Strategy::Weighted => Some(select_weighted(devices, rng)?),
        Strategy::LoadAware => {
            if devices.is_empty() {
                return Err(DispatchError::NoDevices);
            }
            select_load_aware(devices)
        }
    };

    let outcome = |decision, cost_cents| DispatchOutcome {
        request_id: req.id,
        decision,
        tokens: req.output_tokens,
        input_tokens: req.input_tokens,
        cost_cents,
    };

    if let Some(i) = candidate {
        let dev = &mut devices[i];
        if dev.has_free_slot() && dev.window.try_admit(now, req.output_tokens)? {
            let finish = now + dev.service_steps(req.output_tokens, step_seconds);
            dev.active_jobs.push((req.id, finish));
            return Ok(outcome(Decision::Edge(i), 0.0));
        }
    }

    if cloud.try_admit(now, req.input_tokens + req.output_tokens)? {
        let cost = cpr_cloud(req.input_tokens, req.output_tokens, &cloud.profile).cents;
        Ok(outcome(Decision::Cloud, cost))
    } else {
        Ok(outcome(Decision::Dropped, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn device(id: &str, capacity: u64, max_parallel: u32) -> DeviceProfile {
        DeviceProfile {
            id: id.into(),
            tgs: 10.0,
            ttft_s: 0.3,
            power_w: 10.0,
            energy_per_query_wh: Some(0.05),
            quality: 0.8,
            window_token_capacity: capacity,
            max_parallel,
        }
    }

    fn fleet(caps: &[u64]) -> Vec<DeviceRuntime> {
        caps.iter()
            .enumerate()
            .map(|(i, &c)| DeviceRuntime::new(device(&format!("d{i}"), c, 4), 5).unwrap())
            .collect()
    }

    fn request(id: u64, out: u64) -> Request {
        Request {
            id,
            user: 0,
            arrival_step: 0,
            output_tokens: out,
            input_tokens: 48,
        }
    }

    #[test]
    fn random_frequencies() {
        let devs = fleet(&[100, 100, 100, 100]);
        let mut rng = stream_rng(1, Stream::Dispatch);
        let mut counts = [0u32; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[select_random(&devs, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn random_edge_cases() {
        let mut rng = stream_rng(1, Stream::Dispatch);
        let one = fleet(&[10]);
        for _ in 0..50 {
            assert_eq!(select_random(&one, &mut rng).unwrap(), 0);
        }
        assert_eq!(select_random(&[], &mut rng), Err(DispatchError::NoDevices));
        assert_eq!(
            select_weighted(&[], &mut rng),
            Err(DispatchError::NoDevices)
        );
    }

    #[test]
    fn weighted_frequencies() {
        let devs = fleet(&[300, 100]);
        let mut rng = stream_rng(2, Stream::Dispatch);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| select_weighted(&devs, &mut rng).unwrap() == 0)
            .count();
        assert!((hits as f64 / n as f64 - 0.75).abs() < 0.01);

        let one = fleet(&[7]);
        assert_eq!(select_weighted(&one, &mut rng).unwrap(), 0);
    }

    #[test]
    fn weighted_equal_matches_uniform() {
        let devs = fleet(&[50, 50, 50]);
        let mut rng = stream_rng(3, Stream::Dispatch);
        let mut counts = [0u32; 3];
        for _ in 0..90_000 {
            counts[select_weighted(&devs, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 90_000.0 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn load_aware_choices() {
        let mut devs = fleet(&[100, 100]);
        devs[0].window.try_admit(0, 80).unwrap();
        devs[1].window.try_admit(0, 20).unwrap();
        assert_eq!(select_load_aware(&devs), Some(1));

        let mut devs = fleet(&[100, 100]);
        devs[0].window.try_admit(0, 50).unwrap();
        devs[1].window.try_admit(0, 50).unwrap();
        assert_eq!(select_load_aware(&devs), Some(0));

        for d in &mut devs {
            for j in 0..4 {
                d.active_jobs.push((j, 9));
            }
        }
        assert_eq!(select_load_aware(&devs), None);
    }

    #[test]
    fn load_aware_full_goes_to_cloud() {
        let mut devs = fleet(&[100]);
        devs[0].active_jobs = vec![(0, 3), (1, 3), (2, 3), (3, 3)];
        let mut cloud = CloudGate::new(CloudProfile::default(), 5).unwrap();
        let mut rng = stream_rng(0, Stream::Dispatch);
        let out = dispatch_request(
            &request(9, 50),
            &mut devs,
            &mut cloud,
            Strategy::LoadAware,
            0,
            60.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.decision, Decision::Cloud);
        assert!((out.cost_cents - 0.444).abs() < 1e-12);
    }

    #[test]
    fn single_device_trace() {
        let mut devs = vec![DeviceRuntime::new(device("solo", 50, 1), 2).unwrap()];
        let mut cloud = CloudGate::new(CloudProfile::default(), 2).unwrap();
        let mut rng = stream_rng(0, Stream::Dispatch);
        let mut decisions = Vec::new();
        for step in 0..3u32 {
            for d in devs.iter_mut() {
                d.window.advance(step).unwrap();
                d.release(step);
            }
            let out = dispatch_request(
                &Request {
                    arrival_step: step,
                    ..request(step as u64, 50)
                },
                &mut devs,
                &mut cloud,
                Strategy::Random,
                step,
                60.0,
                &mut rng,
            )
            .unwrap();
            decisions.push((out.decision, out.cost_cents));
        }
        assert_eq!(decisions[0], (Decision::Edge(0), 0.0));
        assert_eq!(decisions[1].0, Decision::Cloud);
        assert!((decisions[1].1 - 0.444).abs() < 1e-12);
        assert_eq!(decisions[2], (Decision::Edge(0), 0.0));
    }

    #[test]
    fn finite_cloud_drops() {
        let mut devs = fleet(&[10]);
        let profile = CloudProfile {
            window_token_capacity: CloudCapacity::Tokens(100),
            ..CloudProfile::default()
        };
        let mut cloud = CloudGate::new(profile, 5).unwrap();
        let mut rng = stream_rng(0, Stream::Dispatch);
        let mut go = |id| {
            dispatch_request(
                &request(id, 50),
                &mut devs,
                &mut cloud,
                Strategy::Weighted,
                0,
                60.0,
                &mut rng,
            )
            .unwrap()
            .decision
        };
        // 48 + 50 = 98 tokens fit once
        assert_eq!(go(0), Decision::Cloud);
        assert_eq!(go(1), Decision::Dropped);
    }

    #[test]
    fn service_duration() {
        let d = DeviceRuntime::new(device("x", 100, 1), 1).unwrap();
        assert_eq!(d.service_steps(50, 60.0), 1);
        assert_eq!(d.service_steps(600, 60.0), 1);
        assert_eq!(d.service_steps(601, 60.0), 2);
        assert_eq!(d.service_steps(1800, 60.0), 3);
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        let err = "fastest".parse::<Strategy>().unwrap_err();
        assert!(err.contains("fastest"));
    }
}
