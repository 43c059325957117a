//! Empirical deviation tails against the Azuma bound
//! `P(|v_n - E v_n| >= lambda) <= exp(-lambda^2 n / (8 |g|^2))`.

use super::stats::{binomial_sigma, summarize};
use super::{run_records, ExperimentConfig, RunRecord};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    pub lambda: f64,
    /// Fraction of runs with `|v_n - mean| >= lambda`.
    pub empirical: f64,
    pub bound: f64,
    /// Binomial standard deviation of the empirical fraction at the bound.
    pub sigma: f64,
    pub samples: usize,
    /// Empirical fraction above `bound + 3 sigma`.
    pub flagged: bool,
}

pub fn azuma_bound(lambda: f64, n: usize, sup_norm: f64) -> f64 {
    if sup_norm == 0.0 {
        return if lambda > 0.0 { 0.0 } else { 1.0 };
    }
    (-(lambda * lambda) * n as f64 / (8.0 * sup_norm * sup_norm)).exp()
}

pub fn concentration_from_records(
    records: &[RunRecord],
    horizons: &[usize],
    lambdas: &[f64],
    sup_norm: f64,
) -> Vec<ConcentrationRow> {
    let mut rows = Vec::new();
    for &n in horizons {
        let vals: Vec<f64> = records.iter().filter(|r| r.n == n).filter_map(|r| r.value).collect();
        let Some(s) = summarize(&vals) else { continue };
        for &lambda in lambdas {
            let hits = vals.iter().filter(|v| (*v - s.mean).abs() >= lambda).count();
            let empirical = hits as f64 / vals.len() as f64;
            let bound = azuma_bound(lambda, n, sup_norm);
            let sigma = binomial_sigma(bound, vals.len());
            rows.push(ConcentrationRow {
                n,
                lambda,
                empirical,
                bound,
                sigma,
                samples: vals.len(),
                flagged: empirical > bound + 3.0 * sigma,
            });
        }
    }
    rows
}

/// Solves every run, then tabulates tail frequencies per `(n, lambda)`.
pub fn concentration_curve(config: &ExperimentConfig) -> Result<Vec<ConcentrationRow>> {
    let records = run_records(config)?;
    Ok(concentration_from_records(
        &records,
        &config.horizons,
        &config.lambda_grid,
        config.model.sup_norm(),
    ))
}
