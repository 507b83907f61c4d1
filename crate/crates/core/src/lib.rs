//! Metrics and simulation for edge-first language-model inference.
//!
//! Two halves share one set of device profiles:
//!
//! * [`metrics`] scores platforms by utility, cost per response and
//!   performance-cost ratio.
//! * [`engine`] runs a discrete-time edge cluster where each device guards
//!   its capacity with a sliding token window ([`ratelimit`]), requests are
//!   routed by a selection strategy ([`dispatch`]), and whatever the edge
//!   cannot take is redirected to a paid cloud endpoint.
//!
//! Workloads are generated from a seed ([`workload`]); identical config and
//! seed always produce an identical [`engine::RunReport`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dispatch;
pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod profiles;
pub mod ratelimit;
pub mod report;
pub mod rng;
pub mod workload;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use dispatch::{Decision, DispatchOutcome, Strategy};
pub use engine::{run_simulation, utilization_stats, EngineError, RunReport, SimConfig};
pub use experiment::{directional_checks, run_compare, run_sweep, seed_list, Comparison};
pub use metrics::{platform_report, PlatformRow, ReportOptions, ResponsivenessMode};
pub use profiles::{
    load_profiles, parse_profiles, CloudProfile, DeviceProfile, EnergyPricing, ProfileSet,
};
pub use report::{emit_summary, read_summary, Summary};
pub use workload::{generate_requests, Pattern, Request, WorkloadConfig};
