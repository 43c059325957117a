//! Brute-force value of tiny games by explicit enumeration of pure strategies.
//!
//! A strategy maps every history to an action. Two strategies that agree on
//! every history they can reach against all opponents yield identical plays,
//! so it suffices to enumerate reduced strategies: an action at the root,
//! then one sub-strategy per continuation the opponent can produce. Every
//! pair of reduced strategies is played out over the history tree and the
//! resulting normal form gives both the maxmin and the minmax. Nothing here
//! shares code with the state-indexed solver.

use crate::error::{Error, Result};
use crate::field::PayoffField;
use crate::game::{GameSpec, LatticePoint};
use crate::scalar::Scalar;

pub const MAX_HORIZON: usize = 3;
pub const MAX_ACTIONS: usize = 3;
/// Cap on the number of strategy pairs in the normal form.
pub const MAX_PAIRS: u128 = 100_000_000;

const UNSET: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceOutcome<T> {
    /// `max_sigma min_tau` of the average payoff.
    pub maxmin: T,
    /// `min_tau max_sigma` of the average payoff.
    pub minmax: T,
    pub p1_strategies: usize,
    pub p2_strategies: usize,
}

/// Number of reduced strategies for each player.
pub fn strategy_counts(ni: usize, nj: usize, n: usize) -> (u128, u128) {
    let (mut r, mut s) = (1u128, 1u128);
    for _ in 0..n {
        r = (ni as u128).saturating_mul(r.saturating_pow(nj as u32));
        s = (nj as u128).saturating_mul(s).saturating_pow(ni as u32);
    }
    (r, s)
}

/// The history tree: node ids are grouped by stage, and within a stage by
/// the base-`|I||J|` encoding of the action pairs played so far.
struct HistoryTree<T> {
    ni: usize,
    nj: usize,
    n: usize,
    offsets: Vec<usize>,
    payoffs: Vec<Vec<T>>,
}

impl<T: Scalar> HistoryTree<T> {
    fn build<F: PayoffField>(field: &F, spec: &GameSpec, origin: &LatticePoint, n: usize) -> Result<Self> {
        let (ni, nj) = (spec.num_actions_p1(), spec.num_actions_p2());
        let pairs = ni * nj;
        let mut offsets = vec![0usize];
        for m in 0..n {
            offsets.push(offsets[m] + pairs.pow(m as u32));
        }
        let mut states = vec![origin.clone()];
        let mut payoffs = Vec::with_capacity(offsets[n]);
        let mut g = vec![0.0; pairs];
        for m in 0..n {
            let mut next_states = Vec::new();
            for z in &states {
                field.stage_payoffs(z, &mut g);
                payoffs.push(g.iter().map(|&x| T::from_payoff(x)).collect());
                if m + 1 < n {
                    for i in 0..ni {
                        for j in 0..nj {
                            next_states.push(spec.successor(z, i, j)?);
                        }
                    }
                }
            }
            states = next_states;
        }
        Ok(HistoryTree {
            ni,
            nj,
            n,
            offsets,
            payoffs,
        })
    }

    fn nodes(&self) -> usize {
        self.offsets[self.n]
    }

    fn child(&self, stage: usize, h: usize, i: usize, j: usize) -> (usize, usize) {
        let h2 = h * self.ni * self.nj + i * self.nj + j;
        (self.offsets[stage + 1] + h2, h2)
    }

    /// Reduced Player 1 strategies of the subtree at `(stage, h)`, as
    /// lists of `(node, action)` assignments.
    fn p1_plans(&self, stage: usize, h: usize) -> Vec<Vec<(usize, u8)>> {
        if stage == self.n {
            return vec![Vec::new()];
        }
        let node = self.offsets[stage] + h;
        let mut out = Vec::new();
        for i in 0..self.ni {
            let children: Vec<_> = (0..self.nj)
                .map(|j| self.p1_plans(stage + 1, self.child(stage, h, i, j).1))
                .collect();
            for combo in product(&children) {
                let mut plan = vec![(node, i as u8)];
                plan.extend(combo);
                out.push(plan);
            }
        }
        out
    }

    /// Reduced Player 2 strategies; assignments are to `node * |I| + i`.
    fn p2_plans(&self, stage: usize, h: usize) -> Vec<Vec<(usize, u8)>> {
        if stage == self.n {
            return vec![Vec::new()];
        }
        let node = self.offsets[stage] + h;
        // per Player 1 action: every (reply, continuation) option
        let per_action: Vec<Vec<Vec<(usize, u8)>>> = (0..self.ni)
            .map(|i| {
                let mut opts = Vec::new();
                for j in 0..self.nj {
                    for sub in self.p2_plans(stage + 1, self.child(stage, h, i, j).1) {
                        let mut plan = vec![(node * self.ni + i, j as u8)];
                        plan.extend(sub);
                        opts.push(plan);
                    }
                }
                opts
            })
            .collect();
        product(&per_action)
    }

    fn dense(assignments: &[(usize, u8)], len: usize) -> Vec<u8> {
        let mut v = vec![UNSET; len];
        for &(k, a) in assignments {
            v[k] = a;
        }
        v
    }

    fn play(&self, p1: &[u8], p2: &[u8]) -> T {
        let mut total = T::zero();
        let (mut node, mut h) = (0usize, 0usize);
        for stage in 0..self.n {
            let i = p1[node] as usize;
            let j = p2[node * self.ni + i] as usize;
            total = total + self.payoffs[node][i * self.nj + j];
            (node, h) = self.child(stage, h, i, j);
        }
        total
    }
}

/// Cartesian product of lists of assignment lists, concatenating entries.
fn product(lists: &[Vec<Vec<(usize, u8)>>]) -> Vec<Vec<(usize, u8)>> {
    lists.iter().fold(vec![Vec::new()], |acc, options| {
        let mut out = Vec::with_capacity(acc.len() * options.len());
        for prefix in &acc {
            for o in options {
                let mut p = prefix.clone();
                p.extend_from_slice(o);
                out.push(p);
            }
        }
        out
    })
}

fn guard(spec: &GameSpec, n: usize) -> Result<()> {
    let (ni, nj) = (spec.num_actions_p1(), spec.num_actions_p2());
    if n == 0 || n > MAX_HORIZON || ni > MAX_ACTIONS || nj > MAX_ACTIONS {
        return Err(Error::OracleTooLarge(format!(
            "needs 1 <= n <= {MAX_HORIZON} and at most {MAX_ACTIONS} actions per player, got n = {n}, {ni}x{nj}"
        )));
    }
    let (r, s) = strategy_counts(ni, nj, n);
    if r.saturating_mul(s) > MAX_PAIRS {
        return Err(Error::OracleTooLarge(format!(
            "{r} x {s} strategy pairs exceed the cap of {MAX_PAIRS}"
        )));
    }
    Ok(())
}

/// Both sides of the normal form over reduced pure strategies.
pub fn brute_force_game<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
) -> Result<BruteForceOutcome<T>> {
    guard(spec, n)?;
    field.check_game(spec)?;
    if origin.dim() != spec.dim() {
        return Err(Error::InvalidSpec("origin dimension differs from game dimension".into()));
    }
    let tree = HistoryTree::<T>::build(field, spec, origin, n)?;
    let nodes = tree.nodes();
    let p1: Vec<Vec<u8>> = tree
        .p1_plans(0, 0)
        .iter()
        .map(|a| HistoryTree::<T>::dense(a, nodes))
        .collect();
    let p2: Vec<Vec<u8>> = tree
        .p2_plans(0, 0)
        .iter()
        .map(|a| HistoryTree::<T>::dense(a, nodes * tree.ni))
        .collect();
    let mut col_max: Vec<Option<T>> = vec![None; p2.len()];
    let mut maxmin: Option<T> = None;
    for s1 in &p1 {
        let mut row_min: Option<T> = None;
        for (b, s2) in p2.iter().enumerate() {
            let v = tree.play(s1, s2);
            if row_min.is_none_or(|m| v < m) {
                row_min = Some(v);
            }
            if col_max[b].is_none_or(|m| v > m) {
                col_max[b] = Some(v);
            }
        }
        let r = row_min.unwrap();
        if maxmin.is_none_or(|m| r > m) {
            maxmin = Some(r);
        }
    }
    let minmax = col_max
        .into_iter()
        .map(Option::unwrap)
        .reduce(|a, b| a.min_of(b))
        .unwrap();
    let scale = T::from_count(n);
    Ok(BruteForceOutcome {
        maxmin: maxmin.unwrap() / scale,
        minmax: minmax / scale,
        p1_strategies: p1.len(),
        p2_strategies: p2.len(),
    })
}

/// The n-stage value by strategy enumeration; fails if maxmin and minmax differ.
pub fn brute_force_value<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
) -> Result<T> {
    let out = brute_force_game::<T, F>(field, spec, origin, n)?;
    if out.maxmin != out.minmax {
        return Err(Error::OracleMismatch {
            maxmin: format!("{:?}", out.maxmin),
            minmax: format!("{:?}", out.minmax),
        });
    }
    Ok(out.maxmin)
}

/// Smallest average a fixed Player 1 Markov strategy can be held to, over
/// every Player 2 strategy.
pub fn p1_strategy_floor<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
    p1: impl Fn(usize, &[i64]) -> usize,
) -> Result<T> {
    guard(spec, n)?;
    let tree = HistoryTree::<T>::build(field, spec, origin, n)?;
    let fixed = markov_p1(spec, origin, &tree, &p1)?;
    let total = tree
        .p2_plans(0, 0)
        .iter()
        .map(|a| tree.play(&fixed, &HistoryTree::<T>::dense(a, tree.nodes() * tree.ni)))
        .reduce(|a, b| a.min_of(b))
        .unwrap();
    Ok(total / T::from_count(n))
}

/// Largest average Player 1 can reach against a fixed Player 2 Markov strategy.
pub fn p2_strategy_ceiling<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
    p2: impl Fn(usize, &[i64], usize) -> usize,
) -> Result<T> {
    guard(spec, n)?;
    let tree = HistoryTree::<T>::build(field, spec, origin, n)?;
    let fixed = markov_p2(spec, origin, &tree, &p2)?;
    let total = tree
        .p1_plans(0, 0)
        .iter()
        .map(|a| tree.play(&HistoryTree::<T>::dense(a, tree.nodes()), &fixed))
        .reduce(|a, b| a.max_of(b))
        .unwrap();
    Ok(total / T::from_count(n))
}

/// Visits every history node with its stage (1-based) and state.
fn for_each_node<T: Scalar>(
    spec: &GameSpec,
    origin: &LatticePoint,
    tree: &HistoryTree<T>,
    mut visit: impl FnMut(usize, usize, &LatticePoint),
) -> Result<()> {
    let mut frontier = vec![(0usize, origin.clone())];
    for stage in 0..tree.n {
        let mut next = Vec::new();
        for (h, z) in &frontier {
            visit(tree.offsets[stage] + h, stage + 1, z);
            for i in 0..tree.ni {
                for j in 0..tree.nj {
                    next.push((tree.child(stage, *h, i, j).1, spec.successor(z, i, j)?));
                }
            }
        }
        frontier = next;
    }
    Ok(())
}

fn markov_p1<T: Scalar>(
    spec: &GameSpec,
    origin: &LatticePoint,
    tree: &HistoryTree<T>,
    p1: &impl Fn(usize, &[i64]) -> usize,
) -> Result<Vec<u8>> {
    let mut v = vec![UNSET; tree.nodes()];
    for_each_node(spec, origin, tree, |node, m, z| v[node] = p1(m, z) as u8)?;
    Ok(v)
}

fn markov_p2<T: Scalar>(
    spec: &GameSpec,
    origin: &LatticePoint,
    tree: &HistoryTree<T>,
    p2: &impl Fn(usize, &[i64], usize) -> usize,
) -> Result<Vec<u8>> {
    let mut v = vec![UNSET; tree.nodes() * tree.ni];
    for_each_node(spec, origin, tree, |node, m, z| {
        for i in 0..tree.ni {
            v[node * tree.ni + i] = p2(m, z, i) as u8;
        }
    })?;
    Ok(v)
}
