//! Conditional value bounds in the squares environment.
//!
//! A complete 1-square of side `T_j = 4 T_{j-2}` whose centre lies within
//! 1-norm distance `eps * T_{j-2}` of the origin lets Player 1 reach its
//! plane in at most that many stages and then stay there by not moving, so
//! the `T_{j-2}`-stage value is at least `1 - eps - 1/T_{j-2}`. A complete
//! 0-square gives Player 2 the symmetric upper bound `eps + 1/T_{j-2}`.

use rayon::prelude::*;

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::field::squares::{half_side, side_length};
use crate::field::{find_complete_squares, Environment, EnvironmentModel, SquareKind, SquarePlant};
use crate::game::{LatticeBox, LatticePoint};
use crate::solver::solve_value;

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleRow {
    pub seed_index: usize,
    pub scale: u32,
    pub kind: SquareKind,
    /// Witness square centre, if one was found.
    pub center: Option<[i64; 3]>,
    pub dist: Option<u64>,
    pub horizon: usize,
    pub value: Option<f64>,
    pub bound: f64,
    /// `None` when there is no witness.
    pub holds: Option<bool>,
}

/// Horizon `T_{j-2}` and search radius `floor(eps * T_{j-2})` for square scale `j`.
pub fn geometry(scale: u32, epsilon: f64) -> (usize, u64) {
    let horizon = side_length(scale - 2) as usize;
    (horizon, (epsilon * horizon as f64).floor() as u64)
}

pub fn bound_for(kind: SquareKind, epsilon: f64, horizon: usize) -> f64 {
    let slack = epsilon + 1.0 / horizon as f64;
    match kind {
        SquareKind::One => 1.0 - slack,
        SquareKind::Zero => slack,
    }
}

/// For each seed and each kind, finds (or plants then verifies) a complete
/// square of scale `scale` near the origin, solves the `T_{scale-2}`-stage
/// game and checks the one-sided bound.
pub fn counterexample_run(config: &ExperimentConfig, scale: u32, planted: bool) -> Result<Vec<CounterexampleRow>> {
    config.validate()?;
    let squares = config
        .model
        .as_squares()
        .ok_or_else(|| Error::Config("counterexample runs need the squares model".into()))?;
    if scale < 2 || scale > squares.k_max {
        return Err(Error::OutOfRange(format!("scale {scale} outside 2..={}", squares.k_max)));
    }
    if config.origin != LatticePoint::origin(3) {
        return Err(Error::Config("counterexample runs start at the origin".into()));
    }
    let (horizon, radius) = geometry(scale, config.epsilon);
    let reach = radius as i64 + half_side(scale);
    let region = LatticeBox::from_bounds(&[-reach; 3], &[reach; 3])?;
    let rows: Vec<Result<Vec<CounterexampleRow>>> = (0..config.num_seeds)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::with_capacity(2);
            for kind in SquareKind::BOTH {
                let mut model = squares.clone();
                if planted {
                    let r = radius as i64;
                    let center = match kind {
                        SquareKind::One => [r, 0, 0],
                        SquareKind::Zero => [0, r, 0],
                    };
                    model.plants.push(SquarePlant { kind, scale, center });
                }
                let env = Environment::with_region(EnvironmentModel::Squares(model), config.seed(k), &region)?;
                let witness = find_complete_squares(&env, kind, scale, radius)?.into_iter().next();
                let bound = bound_for(kind, config.epsilon, horizon);
                let (value, holds) = match witness {
                    Some(_) => {
                        let v = solve_value::<f64, _>(&env, &config.spec, &config.origin, horizon)?;
                        let ok = match kind {
                            SquareKind::One => v >= bound,
                            SquareKind::Zero => v <= bound,
                        };
                        (Some(v), Some(ok))
                    }
                    None => (None, None),
                };
                out.push(CounterexampleRow {
                    seed_index: k,
                    scale,
                    kind,
                    center: witness,
                    dist: witness.map(|c| c.iter().map(|v| v.unsigned_abs()).sum()),
                    horizon,
                    value,
                    bound,
                    holds,
                });
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
