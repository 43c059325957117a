//! Per-realisation inequalities: concatenation of optimal strategies and the
//! single-hyperplane increment bound.

use rayon::prelude::*;

use super::ExperimentConfig;
use crate::cone::reachable_cone;
use crate::error::Result;
use crate::field::PayoffField;
use crate::game::{require_oriented, GameSpec, LatticePoint};
use crate::solver::{cone_level_range, hyperplane_zeroed_value, solve_value, value_profile};

/// Slack allowed on per-realisation inequalities.
pub const CONCAT_TOLERANCE: f64 = 1e-9;
pub const INCREMENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcatOutcome {
    /// `v_{m+n}(origin)`.
    pub lhs: f64,
    /// `(m v_m(origin) + n min_z v_n(z)) / (m + n)` over the stage-`(m+1)` cone.
    pub rhs: f64,
    pub min_cone_value: f64,
    pub holds: bool,
}

/// Player 1 can play `m`-stage optimally and then `n`-stage optimally from
/// wherever the state is at stage `m + 1`, so `v_{m+n}` is at least the
/// weighted guarantee. Compared on totals: `(m+n) lhs >= m v_m + n min - tol`.
pub fn concatenation_check<F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    m: usize,
    n: usize,
) -> Result<ConcatOutcome> {
    let lhs = solve_value::<f64, _>(field, spec, origin, m + n)?;
    let vm = solve_value::<f64, _>(field, spec, origin, m)?;
    let cone = reachable_cone(spec, origin, m + 1)?;
    let states: Vec<LatticePoint> = cone.stage(m + 1).states().collect();
    let min_cone_value = value_profile::<f64, _>(field, spec, &states, n)?
        .into_iter()
        .map(|(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    let (mf, nf) = (m as f64, n as f64);
    let lhs_total = (mf + nf) * lhs;
    let rhs_total = mf * vm + nf * min_cone_value;
    Ok(ConcatOutcome {
        lhs,
        rhs: rhs_total / (mf + nf),
        min_cone_value,
        holds: lhs_total >= rhs_total - CONCAT_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcatRow {
    pub seed_index: usize,
    pub m: usize,
    pub n: usize,
    pub outcome: Result<ConcatOutcome>,
}

/// Runs the concatenation check for every seed and every `(m, n)` in `pairs x pairs`.
pub fn concatenation_sweep(config: &ExperimentConfig, pairs: &[usize]) -> Result<Vec<ConcatRow>> {
    config.validate()?;
    let max = pairs.iter().copied().max().unwrap_or(1);
    let rows: Vec<Vec<ConcatRow>> = (0..config.num_seeds)
        .into_par_iter()
        .map(|k| {
            let env = config.environment(k, 2 * max);
            let mut out = Vec::with_capacity(pairs.len() * pairs.len());
            for &m in pairs {
                for &n in pairs {
                    let outcome = match &env {
                        Ok(env) => concatenation_check(env, &config.spec, &config.origin, m, n),
                        Err(e) => Err(e.clone()),
                    };
                    out.push(ConcatRow {
                        seed_index: k,
                        m,
                        n,
                        outcome,
                    });
                }
            }
            out
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneRow {
    pub seed_index: usize,
    pub n: usize,
    pub level: i128,
    pub value: f64,
    pub zeroed: f64,
    /// `|zeroed - value| <= |g| / n + 1e-12`.
    pub holds: bool,
}

/// Zeroes each hyperplane level crossed by the cone in turn and compares
/// the auxiliary value with the original, for every seed and horizon.
pub fn hyperplane_sweep(config: &ExperimentConfig) -> Result<Vec<HyperplaneRow>> {
    config.validate()?;
    require_oriented(&config.spec)?;
    let n_max = *config.horizons.last().unwrap();
    let rows: Vec<Result<Vec<HyperplaneRow>>> = (0..config.num_seeds)
        .into_par_iter()
        .map(|k| {
            let env = config.environment(k, n_max)?;
            let sup = env.sup_norm();
            let mut out = Vec::new();
            for &n in &config.horizons {
                let value = solve_value::<f64, _>(&env, &config.spec, &config.origin, n)?;
                let (lo, hi) = cone_level_range(&config.spec, &config.origin, n)?;
                for level in lo..=hi {
                    let zeroed = hyperplane_zeroed_value::<f64, _>(&env, &config.spec, &config.origin, n, level)?;
                    out.push(HyperplaneRow {
                        seed_index: k,
                        n,
                        level,
                        value,
                        zeroed,
                        holds: (zeroed - value).abs() <= sup / n as f64 + INCREMENT_TOLERANCE,
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for r in rows {
        all.extend(r?);
    }
    Ok(all)
}
