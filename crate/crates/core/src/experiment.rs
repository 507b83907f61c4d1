//! Multi-run orchestration: strategy comparisons and window-size sweeps.
//!
//! Results are collected in a fixed (strategy, pattern, seed) order, so the
//! output does not depend on how the runs were scheduled.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dispatch::Strategy;
use crate::engine::{run_simulation, EngineError, RunReport, SimConfig};
use crate::workload::Pattern;

/// `n` consecutive seeds starting at `base`.
pub fn seed_list(base: u64, n: u32) -> Vec<u64> {
    (0..n as u64).map(|i| base.wrapping_add(i)).collect()
}

/// Quantities compared across strategies for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub strategy: Strategy,
    pub pattern: Pattern,
    pub window_len_steps: u32,
    pub seed: u64,
    pub requests: u64,
    pub edge_processed: u64,
    pub edge_rejected: u64,
    pub tokens_to_cloud: u64,
    pub cloud_cost_cents: f64,
    pub utilization_std: f64,
}

impl From<&RunReport> for RunMetrics {
    fn from(r: &RunReport) -> Self {
        RunMetrics {
            strategy: r.config.strategy,
            pattern: r.config.workload.pattern,
            window_len_steps: r.config.window_len_steps,
            seed: r.config.seed,
            requests: r.totals.requests,
            edge_processed: r.totals.edge_processed,
            edge_rejected: r.totals.edge_rejected,
            tokens_to_cloud: r.totals.tokens_to_cloud,
            cloud_cost_cents: r.totals.cloud_cost_cents,
            utilization_std: r.utilization_std,
        }
    }
}

/// Mean and sample standard deviation over seeds (0 for a single seed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Stat {
        let xs: Vec<f64> = xs.into_iter().collect();
        if xs.is_empty() {
            return Stat {
                mean: 0.0,
                std: 0.0,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub strategy: Strategy,
    pub pattern: Pattern,
    pub window_len_steps: u32,
    pub runs: usize,
    pub edge_processed: Stat,
    pub edge_rejected: Stat,
    pub tokens_to_cloud: Stat,
    pub cloud_cost_cents: Stat,
    pub utilization_std: Stat,
}

impl CellStats {
    fn from_runs(runs: &[RunMetrics]) -> CellStats {
        let first = &runs[0];
        let stat = |f: fn(&RunMetrics) -> f64| Stat::of(runs.iter().map(f));
        CellStats {
            strategy: first.strategy,
            pattern: first.pattern,
            window_len_steps: first.window_len_steps,
            runs: runs.len(),
            edge_processed: stat(|m| m.edge_processed as f64),
            edge_rejected: stat(|m| m.edge_rejected as f64),
            tokens_to_cloud: stat(|m| m.tokens_to_cloud as f64),
            cloud_cost_cents: stat(|m| m.cloud_cost_cents),
            utilization_std: stat(|m| m.utilization_std),
        }
    }
}

/// Aggregated cells plus the per-seed runs they were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub cells: Vec<CellStats>,
    pub runs: Vec<RunMetrics>,
}

const TABLE_COLUMNS: [&str; 14] = [
    "strategy",
    "pattern",
    "window_len_steps",
    "runs",
    "edge_processed_mean",
    "edge_processed_std",
    "edge_rejected_mean",
    "edge_rejected_std",
    "tokens_to_cloud_mean",
    "tokens_to_cloud_std",
    "cloud_cost_cents_mean",
    "cloud_cost_cents_std",
    "utilization_std_mean",
    "utilization_std_std",
];

impl Comparison {
    pub fn cell(&self, strategy: Strategy, pattern: Pattern) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.pattern == pattern)
    }

    /// Per-seed runs of one cell, in seed order.
    pub fn runs_of(&self, strategy: Strategy, pattern: Pattern) -> Vec<&RunMetrics> {
        self.runs
            .iter()
            .filter(|r| r.strategy == strategy && r.pattern == pattern)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = TABLE_COLUMNS.join(",");
        out.push('\n');
        for c in &self.cells {
            let stats = [
                c.edge_processed,
                c.edge_rejected,
                c.tokens_to_cloud,
                c.cloud_cost_cents,
                c.utilization_std,
            ];
            let mut fields = vec![
                c.strategy.to_string(),
                c.pattern.to_string(),
                c.window_len_steps.to_string(),
                c.runs.to_string(),
            ];
            for s in stats {
                fields.push(s.mean.to_string());
                fields.push(s.std.to_string());
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:<7} {:>3} {:>17} {:>17} {:>19} {:>17} {:>15}",
            "strategy",
            "pattern",
            "W",
            "edge_processed",
            "edge_rejected",
            "tokens_to_cloud",
            "cloud_cost_c",
            "util_std"
        )?;
        for c in &self.cells {
            let pm = |s: Stat, p: usize| format!("{:.p$} ± {:.p$}", s.mean, s.std);
            writeln!(
                f,
                "{:<10} {:<7} {:>3} {:>17} {:>17} {:>19} {:>17} {:>15}",
                c.strategy.name(),
                c.pattern.to_string(),
                c.window_len_steps,
                pm(c.edge_processed, 1),
                pm(c.edge_rejected, 1),
                pm(c.tokens_to_cloud, 0),
                pm(c.cloud_cost_cents, 2),
                pm(c.utilization_std, 3),
            )?;
        }
        Ok(())
    }
}

fn run_cells(
    configs: impl IntoIterator<Item = SimConfig>,
    seeds: &[u64],
) -> Result<Comparison, EngineError> {
    let mut cells = Vec::new();
    let mut runs = Vec::new();
    for cfg in configs {
        let cell: Vec<RunMetrics> = seeds
            .iter()
            .map(|&seed| {
                let cfg = SimConfig {
                    seed,
                    ..cfg.clone()
                };
                run_simulation(&cfg).map(|r| RunMetrics::from(&r))
            })
            .collect::<Result<_, _>>()?;
        if cell.is_empty() {
            continue;
        }
        cells.push(CellStats::from_runs(&cell));
        runs.extend(cell);
    }
    Ok(Comparison { cells, runs })
}

/// Every strategy under both steady and bursty load, over `seeds`.
pub fn run_compare(base: &SimConfig, seeds: &[u64]) -> Result<Comparison, EngineError> {
    let configs = [Pattern::Steady, Pattern::Bursty]
        .into_iter()
        .flat_map(|pattern| {
            Strategy::ALL.into_iter().map(move |strategy| {
                let mut cfg = base.clone();
                cfg.strategy = strategy;
                cfg.workload.pattern = pattern;
                cfg
            })
        });
    run_cells(configs, seeds)
}

/// Every strategy at each window length, under the base workload pattern.
pub fn run_sweep(
    base: &SimConfig,
    windows: &[u32],
    seeds: &[u64],
) -> Result<Comparison, EngineError> {
    let configs = windows.iter().flat_map(|&w| {
        Strategy::ALL.into_iter().map(move |strategy| SimConfig {
            strategy,
            window_len_steps: w,
            ..base.clone()
        })
    });
    run_cells(configs, seeds)
}

/// A strategy-ordering claim evaluated on a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalCheck {
    pub name: &'static str,
    pub description: &'static str,
    /// Holds on the seed means.
    pub holds_on_means: bool,
    /// Fraction of seeds for which it holds.
    pub per_seed_fraction: f64,
}

/// The compared quantities of one run, or their means over seeds.
#[derive(Debug, Clone, Copy, Default)]
struct Point {
    processed: f64,
    rejected: f64,
    tokens: f64,
    cost: f64,
    util_std: f64,
}

impl Point {
    fn of(r: &RunMetrics) -> Point {
        Point {
            processed: r.edge_processed as f64,
            rejected: r.edge_rejected as f64,
            tokens: r.tokens_to_cloud as f64,
            cost: r.cloud_cost_cents,
            util_std: r.utilization_std,
        }
    }

    fn mean(runs: &[&RunMetrics]) -> Point {
        let n = runs.len().max(1) as f64;
        let sum = runs
            .iter()
            .map(|r| Point::of(r))
            .fold(Point::default(), |a, p| Point {
                processed: a.processed + p.processed,
                rejected: a.rejected + p.rejected,
                tokens: a.tokens + p.tokens,
                cost: a.cost + p.cost,
                util_std: a.util_std + p.util_std,
            });
        Point {
            processed: sum.processed / n,
            rejected: sum.rejected / n,
            tokens: sum.tokens / n,
            cost: sum.cost / n,
            util_std: sum.util_std / n,
        }
    }
}

type Better = fn(&Point, &Point) -> bool;

const CHECKS: [(&str, &str, Pattern, Strategy, Better); 5] = [
    (
        "a",
        "steady: weighted processes at least as many and rejects no more than random",
        Pattern::Steady,
        Strategy::Weighted,
        |x, y| x.processed >= y.processed && x.rejected <= y.rejected,
    ),
    (
        "b",
        "steady: weighted sends no more tokens and cost to the cloud than random",
        Pattern::Steady,
        Strategy::Weighted,
        |x, y| x.tokens <= y.tokens && x.cost <= y.cost,
    ),
    (
        "c",
        "bursty: load-aware rejects no more than random",
        Pattern::Bursty,
        Strategy::LoadAware,
        |x, y| x.rejected <= y.rejected,
    ),
    (
        "d",
        "bursty: load-aware sends no more tokens and cost to the cloud than random",
        Pattern::Bursty,
        Strategy::LoadAware,
        |x, y| x.tokens <= y.tokens && x.cost <= y.cost,
    ),
    (
        "e",
        "bursty: load-aware spreads utilization more evenly than random",
        Pattern::Bursty,
        Strategy::LoadAware,
        |x, y| x.util_std <= y.util_std,
    ),
];

/// Evaluates the five strategy-ordering claims against random selection.
pub fn directional_checks(cmp: &Comparison) -> Vec<DirectionalCheck> {
    CHECKS
        .iter()
        .map(|&(name, description, pattern, challenger, better)| {
            let ours = cmp.runs_of(challenger, pattern);
            let base = cmp.runs_of(Strategy::Random, pattern);
            let paired: Vec<_> = ours
                .iter()
                .filter_map(|x| base.iter().find(|y| y.seed == x.seed).map(|y| (*x, *y)))
                .collect();
            let wins = paired
                .iter()
                .filter(|(x, y)| better(&Point::of(x), &Point::of(y)))
                .count();
            let holds_on_means = !ours.is_empty()
                && !base.is_empty()
                && better(&Point::mean(&ours), &Point::mean(&base));
            DirectionalCheck {
                name,
                description,
                holds_on_means,
                per_seed_fraction: if paired.is_empty() {
                    0.0
                } else {
                    wins as f64 / paired.len() as f64
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_single_and_many() {
        assert_eq!(
            Stat::of([4.0]),
            Stat {
                mean: 4.0,
                std: 0.0
            }
        );
        let s = Stat::of([1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeds() {
        assert_eq!(seed_list(5, 3), vec![5, 6, 7]);
        assert!(seed_list(5, 0).is_empty());
    }
}
