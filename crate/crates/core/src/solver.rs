//! Exact n-stage values by backward induction over the reachable cone.
//!
//! Stage payoffs are summed, not averaged: `V_r(z)` is the optimal total
//! payoff of the last `r` stages from `z`, with
//! `V_r(z) = max_i min_j [ g(z, i, j) + V_{r-1}(z + q(i, j)) ]` and
//! `V_0 = 0`. Player 2 moves after observing Player 1's action, so pure
//! maxmin is exact. The n-stage value is `V_n(origin) / n`.
//!
//! Each stage is computed over the bounding box of its reachable set. Box
//! points outside the reachable set still receive their correct `V`, so the
//! box is a superset that never changes results.

use rayon::prelude::*;

use crate::cone::{base_index, reachable_from, stage_boxes, successor_offsets, StageLayer};
use crate::error::{Error, Result};
use crate::field::PayoffField;
use crate::game::{require_oriented, GameSpec, LatticeBox, LatticePoint};
use crate::scalar::Scalar;

/// Default cap on the number of stage cells held in memory.
pub const DEFAULT_MAX_CELLS: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub max_cells: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

/// Cumulative optimal payoffs at every reachable state of every stage.
#[derive(Debug, Clone)]
pub struct ValueTable<T> {
    horizon: usize,
    origin: LatticePoint,
    layers: Vec<StageLayer>,
    cumulative: Vec<Vec<T>>,
    value: T,
}

impl<T: Scalar> ValueTable<T> {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn origin(&self) -> &LatticePoint {
        &self.origin
    }

    /// `v_n(origin)`.
    pub fn value(&self) -> T {
        self.value
    }

    /// `V_n(origin)`, the optimal total payoff.
    pub fn total(&self) -> T {
        self.cumulative[0][0]
    }

    /// Reachable states at stage `m` in `1..=n + 1`.
    pub fn stage(&self, m: usize) -> &StageLayer {
        &self.layers[m - 1]
    }

    /// `V_{n-m+1}(z)` for a state reachable at stage `m`; `None` otherwise.
    pub fn cumulative(&self, m: usize, z: &[i64]) -> Option<T> {
        let layer = self.layers.get(m.checked_sub(1)?)?;
        let idx = layer.bounds().index_of(z)?;
        layer.mask()[idx].then(|| self.cumulative[m - 1][idx])
    }

    /// Value at any point of the stage's bounding box, reachable or not.
    pub(crate) fn cumulative_in_box(&self, m: usize, idx: usize) -> T {
        self.cumulative[m - 1][idx]
    }

    /// Stage states with their cumulative values, in lexicographic order.
    pub fn stage_values(&self, m: usize) -> impl Iterator<Item = (LatticePoint, T)> + '_ {
        let layer = &self.layers[m - 1];
        let vals = &self.cumulative[m - 1];
        layer
            .mask()
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (LatticePoint(layer.bounds().point_at(k)), vals[k]))
    }

    pub fn total_states(&self) -> usize {
        self.layers.iter().map(StageLayer::len).sum()
    }
}

fn check_inputs<F: PayoffField>(field: &F, spec: &GameSpec, origin: &[i64], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::OutOfRange("horizon must be at least 1".into()));
    }
    if origin.len() != spec.dim() {
        return Err(Error::InvalidSpec(format!(
            "state has dimension {}, game has dimension {}",
            origin.len(),
            spec.dim()
        )));
    }
    field.check_game(spec)
}

/// Computes one stage from the next one (`None` for the terminal stage).
const MIN_TASK_STATES: usize = 1024;

/// `max_i min_j entry(i * nj + j)`; ties keep the first index.
#[inline]
fn maxmin<T: Scalar>(ni: usize, nj: usize, entry: impl Fn(usize) -> T) -> T {
    let mut best = T::zero();
    for i in 0..ni {
        let mut worst = entry(i * nj);
        for j in 1..nj {
            let v = entry(i * nj + j);
            if v < worst {
                worst = v;
            }
        }
        if i == 0 || worst > best {
            best = worst;
        }
    }
    best
}

fn sweep<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    cur: &LatticeBox,
    next: Option<(&LatticeBox, &[T])>,
) -> Vec<T> {
    let vol = cur.volume();
    let mut out = vec![T::zero(); vol];
    if vol == 0 {
        return out;
    }
    let ni = spec.num_actions_p1();
    let nj = spec.num_actions_p2();
    let row_len = *cur.shape().last().unwrap();
    let offsets = next.map(|(nb, _)| successor_offsets(spec, nb));
    // several short rows per task so that buffers are set up once per chunk
    let rows_per_task = MIN_TASK_STATES.div_ceil(row_len).max(1);
    let task_len = rows_per_task * row_len;
    out.par_chunks_mut(task_len).enumerate().for_each(|(task, block)| {
        let mut z = vec![0i64; cur.dim()];
        let last = z.len() - 1;
        let mut g = vec![0.0; ni * nj];
        for (r, chunk) in block.chunks_mut(row_len).enumerate() {
            let start = task * task_len + r * row_len;
            cur.write_point(start, &mut z);
            let z0 = z[last];
            let base0 = next.map(|(nb, _)| base_index(cur, nb, start));
            for (t, slot) in chunk.iter_mut().enumerate() {
                z[last] = z0 + t as i64;
                field.stage_payoffs(&z, &mut g);
                let best = match (next, &offsets, base0) {
                    (Some((_, vals)), Some(offs), Some(b)) => {
                        let succ = &vals[b + t..];
                        maxmin(ni, nj, |k| T::from_payoff(g[k]) + succ[offs[k]])
                    }
                    _ => maxmin(ni, nj, |k| T::from_payoff(g[k])),
                };
                *slot = best;
            }
        }
    });
    out
}

/// Backward induction keeping every stage, so that strategies can be
/// extracted afterwards.
pub fn solve<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
) -> Result<ValueTable<T>> {
    solve_with(field, spec, origin, n, SolverOptions::default())
}

pub fn solve_with<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
    opts: SolverOptions,
) -> Result<ValueTable<T>> {
    check_inputs(field, spec, origin, n)?;
    // reachable_from checks the budget; values add one cell per mask cell
    let layers = reachable_from(spec, std::slice::from_ref(origin), n + 1, opts.max_cells / 2)?;
    let mut cumulative: Vec<Vec<T>> = vec![Vec::new(); n + 1];
    cumulative[n] = vec![T::zero(); layers[n].bounds().volume()];
    for m in (0..n).rev() {
        let next = if m + 1 == n {
            None
        } else {
            Some((layers[m + 1].bounds(), cumulative[m + 1].as_slice()))
        };
        cumulative[m] = sweep(field, spec, layers[m].bounds(), next);
    }
    let value = cumulative[0][0] / T::from_count(n);
    Ok(ValueTable {
        horizon: n,
        origin: origin.clone(),
        layers,
        cumulative,
        value,
    })
}

/// Backward induction over boxes starting at `start`, holding two stages at a time.
fn rolling_first_stage<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    start: LatticeBox,
    n: usize,
    opts: SolverOptions,
) -> Result<(LatticeBox, Vec<T>)> {
    let boxes = stage_boxes(spec, start, n)?;
    let peak = boxes
        .windows(2)
        .map(|w| w[0].volume() as u128 + w[1].volume() as u128)
        .max()
        .unwrap_or(boxes[0].volume() as u128);
    if peak > opts.max_cells as u128 {
        return Err(Error::BudgetExceeded {
            what: "backward induction",
            required: peak,
            limit: opts.max_cells as u128,
        });
    }
    let mut vals = sweep::<T, F>(field, spec, &boxes[n - 1], None);
    for m in (0..n - 1).rev() {
        vals = sweep(field, spec, &boxes[m], Some((&boxes[m + 1], vals.as_slice())));
    }
    Ok((boxes.into_iter().next().unwrap(), vals))
}

/// `v_n(origin)` without keeping the full table.
pub fn solve_value<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
) -> Result<T> {
    solve_value_with(field, spec, origin, n, SolverOptions::default())
}

pub fn solve_value_with<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
    opts: SolverOptions,
) -> Result<T> {
    check_inputs(field, spec, origin, n)?;
    let (_, vals) = rolling_first_stage::<T, F>(field, spec, LatticeBox::point(origin), n, opts)?;
    Ok(vals[0] / T::from_count(n))
}

/// `v_n(z)` for every state of a finite set, sharing one sweep over the
/// union of their cones. Output follows the input order.
pub fn value_profile<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    states: &[LatticePoint],
    n: usize,
) -> Result<Vec<(LatticePoint, T)>> {
    value_profile_with(field, spec, states, n, SolverOptions::default())
}

pub fn value_profile_with<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    states: &[LatticePoint],
    n: usize,
    opts: SolverOptions,
) -> Result<Vec<(LatticePoint, T)>> {
    let Some(first) = states.first() else {
        return Ok(Vec::new());
    };
    check_inputs(field, spec, first, n)?;
    if states.iter().any(|z| z.dim() != spec.dim()) {
        return Err(Error::InvalidSpec("states differ in dimension".into()));
    }
    let start = LatticeBox::bounding(states)?;
    let (b, vals) = rolling_first_stage::<T, F>(field, spec, start, n, opts)?;
    let scale = T::from_count(n);
    Ok(states
        .iter()
        .map(|z| (z.clone(), vals[b.index_of(z).unwrap()] / scale))
        .collect())
}

/// Range of `z . u` over the first `n` stages of the cone from `origin`.
pub fn cone_level_range(spec: &GameSpec, origin: &LatticePoint, n: usize) -> Result<(i128, i128)> {
    let u = require_oriented(spec)?;
    let (lo, hi) = spec.drift_range(u);
    let base = origin.dot(u);
    let steps = n.saturating_sub(1) as i128;
    Ok((base + steps * lo.min(0), base + steps * hi))
}

/// Payoff field equal to `inner` except on the hyperplane `z . u = level`, where it is zero.
pub struct HyperplaneZeroed<'a, F> {
    inner: &'a F,
    direction: Vec<i64>,
    level: i128,
}

impl<'a, F: PayoffField> HyperplaneZeroed<'a, F> {
    pub fn new(inner: &'a F, direction: &[i64], level: i128) -> Self {
        HyperplaneZeroed {
            inner,
            direction: direction.to_vec(),
            level,
        }
    }
}

impl<F: PayoffField> PayoffField for HyperplaneZeroed<'_, F> {
    fn check_game(&self, spec: &GameSpec) -> Result<()> {
        self.inner.check_game(spec)
    }

    fn stage_payoffs(&self, z: &[i64], out: &mut [f64]) {
        if crate::game::dot(z, &self.direction) == self.level {
            out.fill(0.0);
        } else {
            self.inner.stage_payoffs(z, out);
        }
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }
}

/// Value of the game whose payoffs vanish on the hyperplane `z . u = level`.
/// Requires the declared direction to orient the game, so that every play
/// visits the hyperplane at most once.
pub fn hyperplane_zeroed_value<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
    level: i128,
) -> Result<T> {
    let u = require_oriented(spec)?;
    solve_value(&HyperplaneZeroed::new(field, u, level), spec, origin, n)
}
