//! Seeded Monte Carlo experiments.
//!
//! Run `k` uses the seed `derive_seed(base_seed, k)`. Runs are independent
//! tasks; results are always collected in run-index order, so outputs do
//! not depend on the thread count.

pub mod concat;
pub mod concentration;
pub mod counterexample;
pub mod stats;
pub mod witness;

use std::time::Instant;

use rayon::prelude::*;

use crate::cone::{cone_bounding_box, reachable_cone};
use crate::error::{Error, Result};
use crate::field::{Environment, EnvironmentModel};
use crate::game::{GameSpec, LatticePoint};
use crate::prf::derive_seed;
use crate::solver::{solve_value, value_profile};

pub use concat::{concatenation_check, concatenation_sweep, hyperplane_sweep, ConcatOutcome, ConcatRow, HyperplaneRow};
pub use concentration::{azuma_bound, concentration_curve, concentration_from_records, ConcentrationRow};
pub use counterexample::{counterexample_run, CounterexampleRow};
pub use stats::Summary;
pub use witness::{property_witness_scan, WitnessRow};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: GameSpec,
    pub model: EnvironmentModel,
    pub origin: LatticePoint,
    pub base_seed: u64,
    pub num_seeds: usize,
    pub horizons: Vec<usize>,
    pub lambda_grid: Vec<f64>,
    pub epsilon: f64,
    /// Also record `min v_n` over the stage-`(n + 1)` cone in each run.
    pub cone_min: bool,
}

impl ExperimentConfig {
    pub fn new(spec: GameSpec, model: EnvironmentModel) -> Self {
        let origin = LatticePoint::origin(spec.dim());
        ExperimentConfig {
            spec,
            model,
            origin,
            base_seed: 1,
            num_seeds: 1,
            horizons: vec![8],
            lambda_grid: vec![0.0],
            epsilon: 0.25,
            cone_min: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.num_seeds == 0 {
            return Err(Error::Config("num_seeds must be at least 1".into()));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config("horizons must be a non-empty list of positive integers".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("horizons must be strictly increasing".into()));
        }
        if self.lambda_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Config("lambda values must be finite and non-negative".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) && self.epsilon != 0.0 {
            return Err(Error::Config(format!("epsilon {} outside [0, 1)", self.epsilon)));
        }
        if self.origin.dim() != self.spec.dim() {
            return Err(Error::Config("origin dimension differs from game dimension".into()));
        }
        Ok(())
    }

    pub fn seed(&self, index: usize) -> u64 {
        derive_seed(self.base_seed, index as u64)
    }

    /// Environment for run `index`, with a catalog covering `n` stages.
    pub fn environment(&self, index: usize, n: usize) -> Result<Environment> {
        Environment::for_cone(self.model.clone(), self.seed(index), &self.spec, &self.origin, n)
    }
}

/// One solved `(seed, n)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed_index: usize,
    pub n: usize,
    pub value: Option<f64>,
    pub min_cone_value: Option<f64>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

fn solve_run(config: &ExperimentConfig, env: &Environment, index: usize, n: usize) -> RunRecord {
    let started = Instant::now();
    let result = (|| -> Result<(f64, Option<f64>)> {
        let v = solve_value::<f64, _>(env, &config.spec, &config.origin, n)?;
        let min = if config.cone_min {
            let cone = reachable_cone(&config.spec, &config.origin, n + 1)?;
            let states: Vec<_> = cone.stage(n + 1).states().collect();
            let profile = value_profile::<f64, _>(env, &config.spec, &states, n)?;
            profile.into_iter().map(|(_, v)| v).reduce(f64::min)
        } else {
            None
        };
        Ok((v, min))
    })();
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok((v, min)) => RunRecord {
            seed_index: index,
            n,
            value: Some(v),
            min_cone_value: min,
            wall_ms,
            error: None,
        },
        Err(e) => RunRecord {
            seed_index: index,
            n,
            value: None,
            min_cone_value: None,
            wall_ms,
            error: Some(e.to_string()),
        },
    }
}

/// Solves every `(seed, horizon)` pair. Solver failures are recorded in the
/// affected records rather than aborting the experiment.
pub fn run_records(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let n_max = *config.horizons.last().unwrap();
    let reach = if config.cone_min { 2 * n_max } else { n_max };
    cone_bounding_box(&config.spec, &config.origin, reach)?;
    let per_seed: Vec<Vec<RunRecord>> = (0..config.num_seeds)
        .into_par_iter()
        .map(|k| match config.environment(k, reach) {
            Ok(env) => config.horizons.iter().map(|&n| solve_run(config, &env, k, n)).collect(),
            Err(e) => config
                .horizons
                .iter()
                .map(|&n| RunRecord {
                    seed_index: k,
                    n,
                    value: None,
                    min_cone_value: None,
                    wall_ms: 0.0,
                    error: Some(e.to_string()),
                })
                .collect(),
        })
        .collect();
    Ok(per_seed.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonRow {
    pub n: usize,
    /// Summary over completed runs; `None` if every run failed.
    pub summary: Option<Summary>,
    pub failed: usize,
    /// `|E(v_n) - E(v_{n/2})|` when `n/2` is also a horizon.
    pub diff_to_half: Option<f64>,
    /// 95% half-width of the paired per-seed difference `v_n - v_{n/2}`.
    pub diff_ci95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<HorizonRow>,
    /// Least-squares slope of `ln diff_to_half` against `ln n`.
    pub slope: Option<f64>,
}

impl ConvergenceReport {
    pub fn is_complete(&self) -> bool {
        self.rows.iter().all(|r| r.failed == 0)
    }

    /// Successive differences in horizon order: `(n, diff, ci)`.
    pub fn differences(&self) -> Vec<(usize, f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| Some((r.n, r.diff_to_half?, r.diff_ci95.unwrap_or(0.0))))
            .collect()
    }

    /// Counts increases between successive differences, and how many of
    /// them exceed the sum of the two confidence half-widths.
    pub fn inversions(&self) -> (usize, usize) {
        let d = self.differences();
        let mut total = 0;
        let mut unexplained = 0;
        for w in d.windows(2) {
            if w[1].1 > w[0].1 {
                total += 1;
                if w[1].1 - w[0].1 > w[0].2 + w[1].2 {
                    unexplained += 1;
                }
            }
        }
        (total, unexplained)
    }
}

/// Aggregates run records into per-horizon statistics.
pub fn convergence_report(horizons: &[usize], records: &[RunRecord]) -> ConvergenceReport {
    let values_at = |n: usize| -> Vec<(usize, f64)> {
        records
            .iter()
            .filter(|r| r.n == n)
            .filter_map(|r| Some((r.seed_index, r.value?)))
            .collect()
    };
    let mut rows = Vec::with_capacity(horizons.len());
    for &n in horizons {
        let vals = values_at(n);
        let failed = records.iter().filter(|r| r.n == n && r.value.is_none()).count();
        let xs: Vec<f64> = vals.iter().map(|p| p.1).collect();
        let summary = stats::summarize(&xs);
        let (diff_to_half, diff_ci95) = if n % 2 == 0 && horizons.contains(&(n / 2)) {
            let half = values_at(n / 2);
            let prev = stats::summarize(&half.iter().map(|p| p.1).collect::<Vec<_>>());
            let paired: Vec<f64> = vals
                .iter()
                .filter_map(|(k, v)| half.iter().find(|(k2, _)| k2 == k).map(|(_, w)| v - w))
                .collect();
            match (summary, prev) {
                (Some(a), Some(b)) => (
                    Some((a.mean - b.mean).abs()),
                    stats::summarize(&paired).map(|s| s.ci95),
                ),
                _ => (None, None),
            }
        } else {
            (None, None)
        };
        rows.push(HorizonRow {
            n,
            summary,
            failed,
            diff_to_half,
            diff_ci95,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.n as f64, r.diff_to_half?)))
        .collect();
    ConvergenceReport {
        slope: stats::log_log_slope(&pts),
        rows,
    }
}

/// Solves every run and summarises the estimated `E(v_n)` per horizon.
pub fn estimate_expected_value(config: &ExperimentConfig) -> Result<(Vec<RunRecord>, ConvergenceReport)> {
    let records = run_records(config)?;
    let report = convergence_report(&config.horizons, &records);
    Ok((records, report))
}
