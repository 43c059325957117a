//! Markov strategies read off a solved value table.

use crate::cone::{base_index, successor_offsets};
use crate::error::{Error, Result};
use crate::field::PayoffField;
use crate::game::{GameSpec, LatticeBox, LatticePoint};
use crate::scalar::Scalar;
use crate::solver::ValueTable;

/// Optimal actions per (stage, state), ties broken toward the lowest index.
/// Player 2's entry is a reply to each possible Player 1 action.
#[derive(Debug, Clone)]
pub struct StrategyProfile {
    horizon: usize,
    origin: LatticePoint,
    num_p1: usize,
    boxes: Vec<LatticeBox>,
    p1: Vec<Vec<u16>>,
    p2: Vec<Vec<u16>>,
}

/// A realised play.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    /// `z_1, ..., z_n`.
    pub states: Vec<LatticePoint>,
    pub actions: Vec<(usize, usize)>,
    pub payoffs: Vec<T>,
    pub total: T,
}

impl<T: Scalar> Trajectory<T> {
    pub fn average(&self) -> T {
        self.total / T::from_count(self.states.len())
    }
}

pub fn extract_strategy<T: Scalar, F: PayoffField>(
    table: &ValueTable<T>,
    field: &F,
    spec: &GameSpec,
) -> Result<StrategyProfile> {
    field.check_game(spec)?;
    let n = table.horizon();
    if table.origin().dim() != spec.dim() {
        return Err(Error::InvalidSpec("table and game differ in dimension".into()));
    }
    let ni = spec.num_actions_p1();
    let nj = spec.num_actions_p2();
    let boxes: Vec<LatticeBox> = (1..=n + 1).map(|m| table.stage(m).bounds().clone()).collect();
    let mut p1 = Vec::with_capacity(n);
    let mut p2 = Vec::with_capacity(n);
    let mut g = vec![0.0; ni * nj];
    for m in 1..=n {
        let (cur, next) = (&boxes[m - 1], &boxes[m]);
        let offs = successor_offsets(spec, next);
        let mut a1 = vec![0u16; cur.volume()];
        let mut a2 = vec![0u16; cur.volume() * ni];
        for (idx, z) in cur.points().enumerate() {
            field.stage_payoffs(&z, &mut g);
            let base = base_index(cur, next, idx);
            let mut best: Option<(T, usize)> = None;
            for i in 0..ni {
                let mut worst: Option<(T, usize)> = None;
                for j in 0..nj {
                    let k = i * nj + j;
                    let v = T::from_payoff(g[k]) + table.cumulative_in_box(m + 1, base + offs[k]);
                    if worst.is_none_or(|(w, _)| v < w) {
                        worst = Some((v, j));
                    }
                }
                let (w, j) = worst.unwrap();
                a2[idx * ni + i] = j as u16;
                if best.is_none_or(|(b, _)| w > b) {
                    best = Some((w, i));
                }
            }
            a1[idx] = best.unwrap().1 as u16;
        }
        p1.push(a1);
        p2.push(a2);
    }
    Ok(StrategyProfile {
        horizon: n,
        origin: table.origin().clone(),
        num_p1: ni,
        boxes,
        p1,
        p2,
    })
}

impl StrategyProfile {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn origin(&self) -> &LatticePoint {
        &self.origin
    }

    /// Player 1's action at stage `m` (1-based) in state `z`.
    pub fn p1_action(&self, m: usize, z: &[i64]) -> Option<usize> {
        let idx = self.boxes.get(m.checked_sub(1)?)?.index_of(z)?;
        self.p1.get(m - 1).map(|a| a[idx] as usize)
    }

    /// Player 2's reply to action `i` at stage `m` in state `z`.
    pub fn p2_reply(&self, m: usize, z: &[i64], i: usize) -> Option<usize> {
        if i >= self.num_p1 {
            return None;
        }
        let idx = self.boxes.get(m.checked_sub(1)?)?.index_of(z)?;
        self.p2.get(m - 1).map(|a| a[idx * self.num_p1 + i] as usize)
    }

    /// Both players follow the profile.
    pub fn self_play<T: Scalar, F: PayoffField>(&self, field: &F, spec: &GameSpec) -> Result<Trajectory<T>> {
        play(
            field,
            spec,
            &self.origin,
            self.horizon,
            |m, z| self.p1_action(m, z).expect("state inside cone"),
            |m, z, i| self.p2_reply(m, z, i).expect("state inside cone"),
        )
    }

    /// Worst-case average for Player 1 following the profile, against any
    /// Player 2 strategy.
    pub fn p1_guarantee<T: Scalar, F: PayoffField>(&self, field: &F, spec: &GameSpec) -> T {
        self.guarantee(field, spec, true)
    }

    /// Best-case average for Player 1 against Player 2 following the profile.
    pub fn p2_guarantee<T: Scalar, F: PayoffField>(&self, field: &F, spec: &GameSpec) -> T {
        self.guarantee(field, spec, false)
    }

    fn guarantee<T: Scalar, F: PayoffField>(&self, field: &F, spec: &GameSpec, fix_p1: bool) -> T {
        let ni = spec.num_actions_p1();
        let nj = spec.num_actions_p2();
        let n = self.horizon;
        let mut g = vec![0.0; ni * nj];
        let mut next_vals = vec![T::zero(); self.boxes[n].volume()];
        for m in (1..=n).rev() {
            let (cur, next) = (&self.boxes[m - 1], &self.boxes[m]);
            let offs = successor_offsets(spec, next);
            let mut vals = vec![T::zero(); cur.volume()];
            for (idx, z) in cur.points().enumerate() {
                field.stage_payoffs(&z, &mut g);
                let base = base_index(cur, next, idx);
                let cont = |i: usize, j: usize| {
                    let k = i * nj + j;
                    T::from_payoff(g[k]) + next_vals[base + offs[k]]
                };
                vals[idx] = if fix_p1 {
                    let i = self.p1[m - 1][idx] as usize;
                    (1..nj).fold(cont(i, 0), |acc, j| acc.min_of(cont(i, j)))
                } else {
                    let reply = |i: usize| self.p2[m - 1][idx * ni + i] as usize;
                    (1..ni).fold(cont(0, reply(0)), |acc, i| acc.max_of(cont(i, reply(i))))
                };
            }
            next_vals = vals;
        }
        next_vals[0] / T::from_count(n)
    }
}

/// Plays `n` stages from `origin` with arbitrary Markov strategies.
pub fn play<T: Scalar, F: PayoffField>(
    field: &F,
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
    p1: impl Fn(usize, &[i64]) -> usize,
    p2: impl Fn(usize, &[i64], usize) -> usize,
) -> Result<Trajectory<T>> {
    field.check_game(spec)?;
    let nj = spec.num_actions_p2();
    let mut g = vec![0.0; spec.num_pairs()];
    let mut z = origin.clone();
    let mut traj = Trajectory {
        states: Vec::with_capacity(n),
        actions: Vec::with_capacity(n),
        payoffs: Vec::with_capacity(n),
        total: T::zero(),
    };
    for m in 1..=n {
        let i = p1(m, &z);
        let j = p2(m, &z, i);
        if i >= spec.num_actions_p1() || j >= nj {
            return Err(Error::OutOfRange(format!("action pair ({i}, {j}) at stage {m}")));
        }
        field.stage_payoffs(&z, &mut g);
        let r = T::from_payoff(g[i * nj + j]);
        traj.total = traj.total + r;
        traj.payoffs.push(r);
        traj.actions.push((i, j));
        let next = spec.successor(&z, i, j)?;
        traj.states.push(std::mem::replace(&mut z, next));
    }
    Ok(traj)
}
