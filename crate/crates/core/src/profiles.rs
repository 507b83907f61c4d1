//! Device, cloud and electricity-pricing profiles.
//!
//! Profiles are stored in a comma-separated file with one row per edge
//! device and an optional row whose id is `cloud`:
//!
//! ```text
//! # electricity_rate_cents_per_kwh = 25
//! id,tgs,ttft_s,power_w,energy_per_query_wh,quality,window_token_capacity,max_parallel,price_in,price_out
//! agx,22.5,0.28,32.4,0.1646,0.91,6400,4,,
//! cloud,,0.71,,,0.97,unlimited,,0.003,0.006
//! ```
//!
//! Lines starting with `#` are comments. A comment of the form
//! `# electricity_rate_cents_per_kwh = <rate>` sets the energy price.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Id reserved for the cloud row of a profile file.
pub const CLOUD_ID: &str = "cloud";
/// Directive key used in profile-file comments and run configs.
pub const RATE_KEY: &str = "electricity_rate_cents_per_kwh";
/// Rate applied when neither the profile file nor the run config sets one.
pub const DEFAULT_RATE_CENTS_PER_KWH: f64 = 25.0;

const DEVICE_COLUMNS: [&str; 8] = [
    "id",
    "tgs",
    "ttft_s",
    "power_w",
    "energy_per_query_wh",
    "quality",
    "window_token_capacity",
    "max_parallel",
];

/// A benchmarked edge device running one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub id: String,
    /// Token generation speed, tokens per second.
    pub tgs: f64,
    pub ttft_s: f64,
    pub power_w: f64,
    /// Measured energy per query. When absent, energy is derived from
    /// `power_w` and the generation time of the request.
    pub energy_per_query_wh: Option<f64>,
    pub quality: f64,
    pub window_token_capacity: u64,
    pub max_parallel: u32,
}

impl DeviceProfile {
    /// Energy spent serving one response of `output_tokens` tokens.
    pub fn energy_wh(&self, output_tokens: u64) -> f64 {
        match self.energy_per_query_wh {
            Some(wh) => wh,
            None => derived_energy_wh(output_tokens, self.tgs, self.power_w),
        }
    }

    pub fn energy_is_derived(&self) -> bool {
        self.energy_per_query_wh.is_none()
    }
}

/// Generation time at `tgs` multiplied by the average power draw.
pub fn derived_energy_wh(output_tokens: u64, tgs: f64, power_w: f64) -> f64 {
    output_tokens as f64 / tgs * power_w / 3600.0
}

/// Token budget of the cloud endpoint over one rate-limit window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "CapacityRepr", into = "CapacityRepr")]
pub enum CloudCapacity {
    #[default]
    Unlimited,
    Tokens(u64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CapacityRepr {
    Tokens(u64),
    Word(String),
}

impl TryFrom<CapacityRepr> for CloudCapacity {
    type Error = String;

    fn try_from(repr: CapacityRepr) -> Result<Self, Self::Error> {
        match repr {
            CapacityRepr::Tokens(n) => Ok(CloudCapacity::Tokens(n)),
            CapacityRepr::Word(w) => w.parse(),
        }
    }
}

impl From<CloudCapacity> for CapacityRepr {
    fn from(c: CloudCapacity) -> Self {
        match c {
            CloudCapacity::Unlimited => CapacityRepr::Word("unlimited".into()),
            CloudCapacity::Tokens(n) => CapacityRepr::Tokens(n),
        }
    }
}

impl std::str::FromStr for CloudCapacity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("unlimited") {
            return Ok(CloudCapacity::Unlimited);
        }
        s.parse::<u64>()
            .map(CloudCapacity::Tokens)
            .map_err(|_| format!("expected a token count or `unlimited`, got `{s}`"))
    }
}

impl fmt::Display for CloudCapacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CloudCapacity::Unlimited => f.write_str("unlimited"),
            CloudCapacity::Tokens(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudProfile {
    pub price_in_cents_per_token: f64,
    pub price_out_cents_per_token: f64,
    pub quality: f64,
    pub ttft_s: f64,
    pub window_token_capacity: CloudCapacity,
}

impl Default for CloudProfile {
    /// GPT-4 class endpoint: 48 input / 249 output tokens cost about 1.65 ¢.
    fn default() -> Self {
        CloudProfile {
            price_in_cents_per_token: 0.003,
            price_out_cents_per_token: 0.006,
            quality: 0.97,
            ttft_s: 0.71,
            window_token_capacity: CloudCapacity::Unlimited,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPricing {
    pub rate_cents_per_kwh: f64,
}

impl Default for EnergyPricing {
    fn default() -> Self {
        EnergyPricing {
            rate_cents_per_kwh: DEFAULT_RATE_CENTS_PER_KWH,
        }
    }
}

/// Everything a profile file describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub devices: Vec<DeviceProfile>,
    pub cloud: CloudProfile,
    pub pricing: EnergyPricing,
}

/// A single broken invariant on a [`DeviceProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    NonPositiveTgs,
    NonPositiveCapacity,
    ZeroParallel,
    QualityOutOfRange,
    NegativeTtft,
    NegativePower,
    NegativeEnergy,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Violation::NonPositiveTgs => "tgs must be > 0",
            Violation::NonPositiveCapacity => "window_token_capacity must be > 0",
            Violation::ZeroParallel => "max_parallel must be >= 1",
            Violation::QualityOutOfRange => "quality must lie in [0, 1]",
            Violation::NegativeTtft => "ttft_s must be >= 0",
            Violation::NegativePower => "power_w must be >= 0",
            Violation::NegativeEnergy => "energy_per_query_wh must be >= 0",
        };
        f.write_str(msg)
    }
}

/// Returns every violated invariant; an empty list means the profile is valid.
pub fn validate_profile(p: &DeviceProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    // `!(x > 0)` also catches NaN.
    if !(p.tgs > 0.0) || !p.tgs.is_finite() {
        out.push(Violation::NonPositiveTgs);
    }
    if p.window_token_capacity == 0 {
        out.push(Violation::NonPositiveCapacity);
    }
    if p.max_parallel == 0 {
        out.push(Violation::ZeroParallel);
    }
    if !(0.0..=1.0).contains(&p.quality) {
        out.push(Violation::QualityOutOfRange);
    }
    if !(p.ttft_s >= 0.0) {
        out.push(Violation::NegativeTtft);
    }
    if !(p.power_w >= 0.0) {
        out.push(Violation::NegativePower);
    }
    if let Some(e) = p.energy_per_query_wh {
        if !(e >= 0.0) {
            out.push(Violation::NegativeEnergy);
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("{record}: missing field `{field}`")]
    MissingField { record: String, field: String },
    #[error("{record}: duplicate device id `{id}`")]
    DuplicateId { record: String, id: String },
    #[error("{record}: `{field}` must be positive, got `{value}`")]
    NonPositiveCapacity {
        record: String,
        field: String,
        value: String,
    },
    #[error("{record}: {message}")]
    UnparseableFile { record: String, message: String },
    #[error("{record}: {}", join_violations(.violations))]
    InvalidProfile {
        record: String,
        violations: Vec<Violation>,
    },
    #[error("cannot read profile file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Reads and validates a profile file.
pub fn load_profiles(path: impl AsRef<Path>) -> Result<ProfileSet, ProfileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_profiles(&text)
}

/// Parses profile-file text. See the module docs for the layout.
pub fn parse_profiles(text: &str) -> Result<ProfileSet, ProfileError> {
    let pricing = parse_rate_directive(text)?;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| ProfileError::UnparseableFile {
            record: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    for name in DEVICE_COLUMNS {
        if column(name).is_none() {
            return Err(ProfileError::MissingField {
                record: "header".into(),
                field: name.into(),
            });
        }
    }

    let mut devices = Vec::new();
    let mut cloud: Option<CloudProfile> = None;
    let mut seen = HashSet::new();

    for row in reader.records() {
        let row = row.map_err(|e| ProfileError::UnparseableFile {
            record: e
                .position()
                .map(|p| format!("line {}", p.line()))
                .unwrap_or_else(|| "record".into()),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let mut fields = Fields {
            record: format!("line {line}"),
            headers: &headers,
            row: &row,
        };
        let id = fields.required("id")?.to_string();
        fields.record = format!("line {line} ({id})");
        let record = fields.record.clone();

        if id == CLOUD_ID {
            if cloud.is_some() {
                return Err(ProfileError::DuplicateId { record, id });
            }
            cloud = Some(fields.cloud()?);
            continue;
        }
        if !seen.insert(id.clone()) {
            return Err(ProfileError::DuplicateId { record, id });
        }
        devices.push(fields.device(&id)?);
    }

    Ok(ProfileSet {
        devices,
        cloud: cloud.unwrap_or_default(),
        pricing,
    })
}

struct Fields<'a> {
    record: String,
    headers: &'a csv::StringRecord,
    row: &'a csv::StringRecord,
}

impl Fields<'_> {
    fn get(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .position(|h| h == name)
            .and_then(|i| self.row.get(i))
            .filter(|v| !v.is_empty())
    }

    fn required(&self, name: &str) -> Result<&str, ProfileError> {
        self.get(name).ok_or_else(|| ProfileError::MissingField {
            record: self.record.clone(),
            field: name.into(),
        })
    }

    fn float(&self, name: &str) -> Result<f64, ProfileError> {
        let raw = self.required(name)?;
        raw.parse().map_err(|_| self.unparseable(name, raw))
    }

    fn float_or(&self, name: &str, fallback: f64) -> Result<f64, ProfileError> {
        match self.get(name) {
            Some(_) => self.float(name),
            None => Ok(fallback),
        }
    }

    fn unparseable(&self, name: &str, raw: &str) -> ProfileError {
        ProfileError::UnparseableFile {
            record: self.record.clone(),
            message: format!("cannot parse `{name}` value `{raw}`"),
        }
    }

    fn non_positive(&self, name: &str, raw: impl ToString) -> ProfileError {
        ProfileError::NonPositiveCapacity {
            record: self.record.clone(),
            field: name.into(),
            value: raw.to_string(),
        }
    }

    /// Integer capacity field; negative or zero values are capacity errors, not parse errors.
    fn positive_int(&self, name: &str) -> Result<u64, ProfileError> {
        let raw = self.required(name)?;
        match raw.parse::<i128>() {
            Ok(n) if n > 0 => u64::try_from(n).map_err(|_| self.unparseable(name, raw)),
            Ok(_) => Err(self.non_positive(name, raw)),
            Err(_) => match raw.parse::<f64>() {
                Ok(x) if x <= 0.0 => Err(self.non_positive(name, raw)),
                _ => Err(self.unparseable(name, raw)),
            },
        }
    }

    fn device(&self, id: &str) -> Result<DeviceProfile, ProfileError> {
        let tgs = self.float("tgs")?;
        if !(tgs > 0.0) {
            return Err(self.non_positive("tgs", tgs));
        }
        let window_token_capacity = self.positive_int("window_token_capacity")?;
        let max_parallel = u32::try_from(self.positive_int("max_parallel")?).map_err(|_| {
            self.unparseable("max_parallel", self.required("max_parallel").unwrap_or(""))
        })?;
        let energy_per_query_wh = match self.get("energy_per_query_wh") {
            Some(_) => Some(self.float("energy_per_query_wh")?),
            None => None,
        };
        let profile = DeviceProfile {
            id: id.into(),
            tgs,
            ttft_s: self.float("ttft_s")?,
            power_w: self.float_or("power_w", 0.0)?,
            energy_per_query_wh,
            quality: self.float("quality")?,
            window_token_capacity,
            max_parallel,
        };
        let violations = validate_profile(&profile);
        if !violations.is_empty() {
            return Err(ProfileError::InvalidProfile {
                record: self.record.clone(),
                violations,
            });
        }
        Ok(profile)
    }

    fn cloud(&self) -> Result<CloudProfile, ProfileError> {
        let defaults = CloudProfile::default();
        let window_token_capacity = match self.get("window_token_capacity") {
            None => CloudCapacity::Unlimited,
            Some(raw) => match raw.parse::<CloudCapacity>() {
                Ok(CloudCapacity::Tokens(0)) => {
                    return Err(self.non_positive("window_token_capacity", raw))
                }
                Ok(c) => c,
                Err(message) => {
                    return Err(ProfileError::UnparseableFile {
                        record: self.record.clone(),
                        message,
                    })
                }
            },
        };
        let cloud = CloudProfile {
            price_in_cents_per_token: self.float("price_in")?,
            price_out_cents_per_token: self.float("price_out")?,
            quality: self.float_or("quality", defaults.quality)?,
            ttft_s: self.float_or("ttft_s", defaults.ttft_s)?,
            window_token_capacity,
        };
        let bad = |field: &str, v: f64| ProfileError::UnparseableFile {
            record: self.record.clone(),
            message: format!("`{field}` out of range: {v}"),
        };
        if !(cloud.price_in_cents_per_token >= 0.0) {
            return Err(bad("price_in", cloud.price_in_cents_per_token));
        }
        if !(cloud.price_out_cents_per_token >= 0.0) {
            return Err(bad("price_out", cloud.price_out_cents_per_token));
        }
        if !(0.0..=1.0).contains(&cloud.quality) {
            return Err(bad("quality", cloud.quality));
        }
        Ok(cloud)
    }
}

fn parse_rate_directive(text: &str) -> Result<EnergyPricing, ProfileError> {
    let mut pricing = EnergyPricing::default();
    for (n, line) in text.lines().enumerate() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        let Some((key, value)) = comment.split_once('=') else {
            continue;
        };
        if key.trim() != RATE_KEY {
            continue;
        }
        let rate: f64 = value
            .trim()
            .parse()
            .map_err(|_| ProfileError::UnparseableFile {
                record: format!("line {}", n + 1),
                message: format!("cannot parse {RATE_KEY} value `{}`", value.trim()),
            })?;
        if !(rate >= 0.0) {
            return Err(ProfileError::UnparseableFile {
                record: format!("line {}", n + 1),
                message: format!("{RATE_KEY} must be >= 0, got {rate}"),
            });
        }
        pricing.rate_cents_per_kwh = rate;
    }
    Ok(pricing)
}

/// Renders a profile set in the format read by [`parse_profiles`].
pub fn write_profiles(set: &ProfileSet) -> String {
    let mut out = format!("# {RATE_KEY} = {}\n", set.pricing.rate_cents_per_kwh);
    out.push_str(&DEVICE_COLUMNS.join(","));
    out.push_str(",price_in,price_out\n");
    for d in &set.devices {
        let energy = d
            .energy_per_query_wh
            .map(|e| e.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},,\n",
            d.id,
            d.tgs,
            d.ttft_s,
            d.power_w,
            energy,
            d.quality,
            d.window_token_capacity,
            d.max_parallel
        ));
    }
    let c = &set.cloud;
    out.push_str(&format!(
        "{CLOUD_ID},,{},,,{},{},,{},{}\n",
        c.ttft_s,
        c.quality,
        c.window_token_capacity,
        c.price_in_cents_per_token,
        c.price_out_cents_per_token
    ));
    out
}
