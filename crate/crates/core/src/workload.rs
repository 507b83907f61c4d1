//! Seeded request streams with steady or bursty user activity.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream_rng, Stream};

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("invalid token weights: {0}")]
    InvalidWeights(String),
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("invalid workload: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    #[default]
    Steady,
    Bursty,
}

impl std::str::FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "steady" => Ok(Pattern::Steady),
            "bursty" => Ok(Pattern::Bursty),
            other => Err(format!(
                "unknown pattern `{other}` (expected steady | bursty)"
            )),
        }
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pattern::Steady => "steady",
            Pattern::Bursty => "bursty",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub users: u32,
    pub steps: u32,
    pub step_seconds: f64,
    pub pattern: Pattern,
    pub p_base: f64,
    pub p_burst: f64,
    pub burst_period_steps: u32,
    /// Number of consecutive high-activity steps starting at each burst.
    pub burst_len_steps: u32,
    pub token_sizes: Vec<u64>,
    pub token_weights: Vec<f64>,
    pub input_tokens: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            users: 30,
            steps: 60,
            step_seconds: 60.0,
            pattern: Pattern::Steady,
            p_base: 0.3,
            p_burst: 0.8,
            burst_period_steps: 10,
            burst_len_steps: 1,
            token_sizes: vec![50, 100, 200, 300, 500],
            token_weights: vec![0.35, 0.30, 0.20, 0.10, 0.05],
            input_tokens: 48,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let p_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !p_ok(self.p_base) || !p_ok(self.p_burst) {
            return Err(WorkloadError::InvalidProbability(format!(
                "p_base={} and p_burst={} must lie in [0, 1]",
                self.p_base, self.p_burst
            )));
        }
        if self.p_base > self.p_burst {
            return Err(WorkloadError::InvalidProbability(format!(
                "p_base={} exceeds p_burst={}",
                self.p_base, self.p_burst
            )));
        }
        if self.burst_period_steps == 0 {
            return Err(WorkloadError::InvalidConfig(
                "burst_period_steps must be >= 1".into(),
            ));
        }
        if self.burst_len_steps == 0 || self.burst_len_steps > self.burst_period_steps {
            return Err(WorkloadError::InvalidConfig(format!(
                "burst_len_steps must lie in [1, burst_period_steps], got {}",
                self.burst_len_steps
            )));
        }
        if !(self.step_seconds > 0.0) {
            return Err(WorkloadError::InvalidConfig(
                "step_seconds must be > 0".into(),
            ));
        }
        validate_weights(&self.token_sizes, &self.token_weights)
    }
}

fn validate_weights(sizes: &[u64], weights: &[f64]) -> Result<(), WorkloadError> {
    if sizes.is_empty() {
        return Err(WorkloadError::InvalidWeights("token_sizes is empty".into()));
    }
    if sizes.len() != weights.len() {
        return Err(WorkloadError::InvalidWeights(format!(
            "{} token sizes but {} weights",
            sizes.len(),
            weights.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(WorkloadError::InvalidWeights(
            "token sizes must be > 0".into(),
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(WorkloadError::InvalidWeights("weights must be >= 0".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(WorkloadError::InvalidWeights(format!(
            "weights sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Request issued by one user at one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub user: u32,
    pub arrival_step: u32,
    pub output_tokens: u64,
    pub input_tokens: u64,
}

/// True on high-activity steps. Step 0 is never a burst.
pub fn is_burst_step(step: u32, cfg: &WorkloadConfig) -> bool {
    cfg.pattern == Pattern::Bursty
        && cfg.burst_period_steps > 0
        && step >= cfg.burst_period_steps
        && step % cfg.burst_period_steps < cfg.burst_len_steps
}

/// Activity probability of one user at `step`.
pub fn activity_probability(step: u32, cfg: &WorkloadConfig) -> f64 {
    if is_burst_step(step, cfg) {
        cfg.p_burst
    } else {
        cfg.p_base
    }
}

/// Draws output-token demands from the configured size distribution.
#[derive(Debug, Clone)]
pub struct TokenDemand {
    sizes: Vec<u64>,
    index: WeightedIndex<f64>,
}

impl TokenDemand {
    pub fn new(cfg: &WorkloadConfig) -> Result<Self, WorkloadError> {
        validate_weights(&cfg.token_sizes, &cfg.token_weights)?;
        let index = WeightedIndex::new(&cfg.token_weights)
            .map_err(|e| WorkloadError::InvalidWeights(e.to_string()))?;
        Ok(TokenDemand {
            sizes: cfg.token_sizes.clone(),
            index,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sizes[self.index.sample(rng)]
    }
}

/// One draw from the token-size distribution.
pub fn sample_token_demand<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &WorkloadConfig,
) -> Result<u64, WorkloadError> {
    Ok(TokenDemand::new(cfg)?.sample(rng))
}

/// Every user is an independent Bernoulli source per step; requests come
/// out ordered by (step, user) with dense ids.
pub fn generate_requests(cfg: &WorkloadConfig, seed: u64) -> Result<Vec<Request>, WorkloadError> {
    cfg.validate()?;
    let demand = TokenDemand::new(cfg)?;
    let mut activity = stream_rng(seed, Stream::Activity);
    let mut tokens = stream_rng(seed, Stream::Demand);

    let mut out = Vec::new();
    for step in 0..cfg.steps {
        let p = activity_probability(step, cfg);
        for user in 0..cfg.users {
            if activity.gen_bool(p) {
                out.push(Request {
                    id: out.len() as u64,
                    user,
                    arrival_step: step,
                    output_tokens: demand.sample(&mut tokens),
                    input_tokens: cfg.input_tokens,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bursty() -> WorkloadConfig {
        WorkloadConfig {
            pattern: Pattern::Bursty,
            ..WorkloadConfig::default()
        }
    }

    #[test]
    fn burst_steps() {
        let b = bursty();
        assert!(is_burst_step(10, &b));
        assert!(!is_burst_step(0, &b));
        assert!(!is_burst_step(11, &b));
        assert!(!is_burst_step(10, &WorkloadConfig::default()));
        let long = WorkloadConfig {
            burst_len_steps: 3,
            ..bursty()
        };
        assert!(is_burst_step(12, &long));
        assert!(!is_burst_step(13, &long));
        assert!(!is_burst_step(1, &long));
    }

    #[test]
    fn degenerate_weights_always_smallest() {
        let cfg = WorkloadConfig {
            token_weights: vec![1.0, 0.0, 0.0, 0.0, 0.0],
            ..WorkloadConfig::default()
        };
        let mut rng = stream_rng(3, Stream::Demand);
        for _ in 0..1000 {
            assert_eq!(sample_token_demand(&mut rng, &cfg).unwrap(), 50);
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let cfg = WorkloadConfig::default();
        let d = TokenDemand::new(&cfg).unwrap();
        let mut a = stream_rng(11, Stream::Demand);
        let mut b = stream_rng(11, Stream::Demand);
        let xa: Vec<_> = (0..200).map(|_| d.sample(&mut a)).collect();
        let xb: Vec<_> = (0..200).map(|_| d.sample(&mut b)).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn bad_weights() {
        let mut cfg = WorkloadConfig {
            token_weights: vec![0.5, 0.5],
            ..WorkloadConfig::default()
        };
        assert!(matches!(
            generate_requests(&cfg, 1),
            Err(WorkloadError::InvalidWeights(_))
        ));
        cfg.token_weights = vec![0.5, 0.5, 0.5, 0.0, 0.0];
        assert!(matches!(
            sample_token_demand(&mut stream_rng(1, Stream::Demand), &cfg),
            Err(WorkloadError::InvalidWeights(_))
        ));
        cfg.token_weights = vec![1.2, -0.2, 0.0, 0.0, 0.0];
        assert!(matches!(
            cfg.validate(),
            Err(WorkloadError::InvalidWeights(_))
        ));
    }

    #[test]
    fn bad_probabilities() {
        let cfg = WorkloadConfig {
            p_base: 0.9,
            p_burst: 0.5,
            ..WorkloadConfig::default()
        };
        assert!(matches!(
            generate_requests(&cfg, 1),
            Err(WorkloadError::InvalidProbability(_))
        ));
        let cfg = WorkloadConfig {
            p_burst: 1.5,
            ..WorkloadConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(WorkloadError::InvalidProbability(_))
        ));
    }

    #[test]
    fn forced_activity() {
        let cfg = WorkloadConfig {
            users: 1,
            steps: 3,
            p_base: 1.0,
            p_burst: 1.0,
            token_sizes: vec![50],
            token_weights: vec![1.0],
            ..WorkloadConfig::default()
        };
        let reqs = generate_requests(&cfg, 42).unwrap();
        assert_eq!(reqs.len(), 3);
        for (i, r) in reqs.iter().enumerate() {
            assert_eq!(r.id, i as u64);
            assert_eq!(r.arrival_step, i as u32);
            assert_eq!(r.output_tokens, 50);
            assert_eq!(r.input_tokens, 48);
        }
    }

    #[test]
    fn silent_users() {
        let cfg = WorkloadConfig {
            p_base: 0.0,
            ..WorkloadConfig::default()
        };
        assert!(generate_requests(&cfg, 5).unwrap().is_empty());
    }

    #[test]
    fn changing_weights_keeps_activity_pattern() {
        let a = WorkloadConfig::default();
        let b = WorkloadConfig {
            token_weights: vec![0.2, 0.2, 0.2, 0.2, 0.2],
            ..WorkloadConfig::default()
        };
        let ra = generate_requests(&a, 9).unwrap();
        let rb = generate_requests(&b, 9).unwrap();
        let key = |r: &Request| (r.arrival_step, r.user);
        assert_eq!(
            ra.iter().map(key).collect::<Vec<_>>(),
            rb.iter().map(key).collect::<Vec<_>>()
        );
    }
}
