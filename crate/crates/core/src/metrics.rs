//! Utility, cost-per-response and performance-cost ratio of a platform.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::{CloudProfile, DeviceProfile, EnergyPricing, CLOUD_ID};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("performance-cost ratio is undefined for zero cost ({platform})")]
    ZeroCost { platform: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostSource {
    Edge,
    Cloud,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPerResponse {
    pub cents: f64,
    pub source: CostSource,
}

/// Weighted blend of quality and responsiveness.
pub fn utility(q: f64, r: f64, alpha: f64) -> Result<f64, MetricsError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MetricsError::AlphaOutOfRange(alpha));
    }
    Ok(alpha * q + (1.0 - alpha) * r)
}

/// API cost of one response under linear per-token pricing.
pub fn cpr_cloud(input_tokens: u64, output_tokens: u64, cloud: &CloudProfile) -> CostPerResponse {
    CostPerResponse {
        cents: input_tokens as f64 * cloud.price_in_cents_per_token
            + output_tokens as f64 * cloud.price_out_cents_per_token,
        source: CostSource::Cloud,
    }
}

/// Electricity cost of `energy_wh` watt-hours.
pub fn cpr_edge(energy_wh: f64, pricing: &EnergyPricing) -> CostPerResponse {
    CostPerResponse {
        cents: energy_wh / 1000.0 * pricing.rate_cents_per_kwh,
        source: CostSource::Edge,
    }
}

/// Utility delivered per cent. Fails for a zero-cost platform.
pub fn pcr(u: f64, cpr: &CostPerResponse) -> Result<f64, MetricsError> {
    if !(cpr.cents > 0.0) {
        return Err(MetricsError::ZeroCost {
            platform: format!("{:?}", cpr.source).to_lowercase(),
        });
    }
    Ok(u / cpr.cents)
}

/// How the responsiveness score R is obtained from a time-to-first-token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponsivenessMode {
    /// TTFT seconds used as-is (reproduces the published comparison table).
    #[default]
    Raw,
    /// `1 / (1 + ttft)`, so a faster first token scores higher.
    InverseTtft,
}

impl ResponsivenessMode {
    pub fn score(self, ttft_s: f64) -> f64 {
        match self {
            ResponsivenessMode::Raw => ttft_s,
            ResponsivenessMode::InverseTtft => 1.0 / (1.0 + ttft_s),
        }
    }
}

impl std::str::FromStr for ResponsivenessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(ResponsivenessMode::Raw),
            "inverse_ttft" => Ok(ResponsivenessMode::InverseTtft),
            other => Err(format!(
                "unknown r-mode `{other}` (expected raw | inverse_ttft)"
            )),
        }
    }
}

/// Which CPR value the ratio divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcrBasis {
    /// CPR rounded to the four decimals shown in the table.
    #[default]
    DisplayedCpr,
    /// Full-precision CPR.
    ExactCpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub alpha: f64,
    pub avg_in: u64,
    pub avg_out: u64,
    pub r_mode: ResponsivenessMode,
    pub pcr_basis: PcrBasis,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            alpha: 0.5,
            avg_in: 48,
            avg_out: 249,
            r_mode: ResponsivenessMode::Raw,
            pcr_basis: PcrBasis::DisplayedCpr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformRow {
    pub platform: String,
    pub source: CostSource,
    pub cpr_cents: f64,
    pub q: f64,
    pub r: f64,
    pub utility: f64,
    pub pcr: f64,
    /// True when the device had no measured energy per query.
    pub energy_derived: bool,
}

pub fn round_to(x: f64, decimals: i32) -> f64 {
    let k = 10f64.powi(decimals);
    (x * k).round() / k
}

fn row(
    platform: &str,
    cpr: CostPerResponse,
    q: f64,
    ttft_s: f64,
    opts: &ReportOptions,
    energy_derived: bool,
) -> Result<PlatformRow, MetricsError> {
    let r = opts.r_mode.score(ttft_s);
    let u = utility(q, r, opts.alpha)?;
    let denom = match opts.pcr_basis {
        PcrBasis::DisplayedCpr => CostPerResponse {
            cents: round_to(cpr.cents, 4),
            ..cpr
        },
        PcrBasis::ExactCpr => cpr,
    };
    let ratio = pcr(u, &denom).map_err(|_| MetricsError::ZeroCost {
        platform: platform.to_string(),
    })?;
    Ok(PlatformRow {
        platform: platform.to_string(),
        source: cpr.source,
        cpr_cents: cpr.cents,
        q,
        r,
        utility: u,
        pcr: ratio,
        energy_derived,
    })
}

/// One row per platform: the cloud first, then devices by descending PCR
/// (ties broken by id).
pub fn platform_report(
    devices: &[DeviceProfile],
    cloud: &CloudProfile,
    pricing: &EnergyPricing,
    opts: &ReportOptions,
) -> Result<Vec<PlatformRow>, MetricsError> {
    if !(0.0..=1.0).contains(&opts.alpha) {
        return Err(MetricsError::AlphaOutOfRange(opts.alpha));
    }
    let mut rows = vec![row(
        CLOUD_ID,
        cpr_cloud(opts.avg_in, opts.avg_out, cloud),
        cloud.quality,
        cloud.ttft_s,
        opts,
        false,
    )?];

    let mut edge = devices
        .iter()
        .map(|d| {
            let cpr = cpr_edge(d.energy_wh(opts.avg_out), pricing);
            row(&d.id, cpr, d.quality, d.ttft_s, opts, d.energy_is_derived())
        })
        .collect::<Result<Vec<_>, _>>()?;
    edge.sort_by(|a, b| {
        b.pcr
            .partial_cmp(&a.pcr)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.platform.cmp(&b.platform))
    });
    rows.extend(edge);
    Ok(rows)
}

/// Fixed-width table with CPR to 4 decimals, U to 3 and PCR to 2.
pub struct PlatformTable<'a>(pub &'a [PlatformRow]);

impl fmt::Display for PlatformTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .0
            .iter()
            .map(|r| r.platform.len())
            .chain(std::iter::once(8))
            .max()
            .unwrap_or(8);
        writeln!(
            f,
            "{:<width$}  {:>10}  {:>5}  {:>5}  {:>6}  {:>10}",
            "platform", "cpr_cents", "q", "r", "u", "pcr"
        )?;
        for r in self.0 {
            let mark = if r.energy_derived { " *" } else { "" };
            writeln!(
                f,
                "{:<width$}  {:>10.4}  {:>5.2}  {:>5.2}  {:>6.3}  {:>10.2}{mark}",
                r.platform, r.cpr_cents, r.q, r.r, r.utility, r.pcr
            )?;
        }
        if self.0.iter().any(|r| r.energy_derived) {
            writeln!(f, "* energy derived from power_w and tgs")?;
        }
        Ok(())
    }
}
