//! Game structure: action sets, the transition table and the declared
//! orientation direction.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// A state of the lattice `Z^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn origin(dim: usize) -> Self {
        LatticePoint(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, u: &[i64]) -> i128 {
        dot(&self.0, u)
    }

    /// 1-norm distance to the origin.
    pub fn norm1(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }
}

impl Deref for LatticePoint {
    type Target = [i64];

    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint(v)
    }
}

impl<const N: usize> From<[i64; N]> for LatticePoint {
    fn from(v: [i64; N]) -> Self {
        LatticePoint(v.to_vec())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

/// Action sets, transition function and optional orientation direction.
///
/// Actions are dense indexes `0..num_actions_p1` and `0..num_actions_p2`.
/// The transition table is stored row-major: entry `i * num_actions_p2 + j`
/// is the displacement applied when the action pair `(i, j)` is played.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSpec {
    dim: usize,
    num_actions_p1: usize,
    num_actions_p2: usize,
    transition: Vec<Vec<i64>>,
    direction: Option<Vec<i64>>,
    step_min: Vec<i64>,
    step_max: Vec<i64>,
}

impl GameSpec {
    pub fn new(
        dim: usize,
        num_actions_p1: usize,
        num_actions_p2: usize,
        transition: Vec<Vec<i64>>,
        direction: Option<Vec<i64>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if num_actions_p1 == 0 || num_actions_p2 == 0 {
            return Err(Error::InvalidSpec("action sets must be non-empty".into()));
        }
        if num_actions_p1 > u16::MAX as usize || num_actions_p2 > u16::MAX as usize {
            return Err(Error::InvalidSpec("too many actions".into()));
        }
        if transition.len() != num_actions_p1 * num_actions_p2 {
            return Err(Error::InvalidSpec(format!(
                "transition table has {} entries, expected {}x{}",
                transition.len(),
                num_actions_p1,
                num_actions_p2
            )));
        }
        for (k, q) in transition.iter().enumerate() {
            if q.len() != dim {
                return Err(Error::InvalidSpec(format!(
                    "transition entry ({}, {}) has {} components, expected {dim}",
                    k / num_actions_p2,
                    k % num_actions_p2,
                    q.len()
                )));
            }
        }
        if let Some(u) = &direction {
            if u.len() != dim {
                return Err(Error::InvalidSpec(format!(
                    "direction has {} components, expected {dim}",
                    u.len()
                )));
            }
        }
        let step_min = (0..dim).map(|c| transition.iter().map(|q| q[c]).min().unwrap()).collect();
        let step_max = (0..dim).map(|c| transition.iter().map(|q| q[c]).max().unwrap()).collect();
        Ok(GameSpec {
            dim,
            num_actions_p1,
            num_actions_p2,
            transition,
            direction,
            step_min,
            step_max,
        })
    }

    /// The three-dimensional game with `I = J = {-1, 0, 1}` (indexed 0, 1, 2),
    /// `q(i, j) = (i, j, 1)` and direction `(0, 0, 1)`.
    pub fn counterexample() -> Self {
        let mut transition = Vec::with_capacity(9);
        for i in -1..=1 {
            for j in -1..=1 {
                transition.push(vec![i, j, 1]);
            }
        }
        GameSpec::new(3, 3, 3, transition, Some(vec![0, 0, 1])).expect("well-formed")
    }

    /// A game whose transition does not depend on the actions.
    pub fn drift(num_actions_p1: usize, num_actions_p2: usize, step: Vec<i64>) -> Result<Self> {
        let dim = step.len();
        let direction = Some(step.clone());
        GameSpec::new(
            dim,
            num_actions_p1,
            num_actions_p2,
            vec![step; num_actions_p1 * num_actions_p2],
            direction,
        )
    }

    /// The non-oriented two-dimensional game where Player 1 moves up or down
    /// and Player 2 moves left or right. Exploratory only.
    pub fn benchmark_2d() -> Self {
        let transition = vec![vec![1, 1], vec![1, -1], vec![-1, 1], vec![-1, -1]];
        GameSpec::new(2, 2, 2, transition, None).expect("well-formed")
    }

    pub fn with_direction(mut self, direction: Option<Vec<i64>>) -> Result<Self> {
        if let Some(u) = &direction {
            if u.len() != self.dim {
                return Err(Error::InvalidSpec("direction dimension mismatch".into()));
            }
        }
        self.direction = direction;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_actions_p1(&self) -> usize {
        self.num_actions_p1
    }

    pub fn num_actions_p2(&self) -> usize {
        self.num_actions_p2
    }

    pub fn num_pairs(&self) -> usize {
        self.num_actions_p1 * self.num_actions_p2
    }

    pub fn q(&self, i: usize, j: usize) -> &[i64] {
        &self.transition[i * self.num_actions_p2 + j]
    }

    pub fn transition(&self) -> &[Vec<i64>] {
        &self.transition
    }

    pub fn direction(&self) -> Option<&[i64]> {
        self.direction.as_deref()
    }

    /// Componentwise minimum of all displacements.
    pub fn step_min(&self) -> &[i64] {
        &self.step_min
    }

    /// Componentwise maximum of all displacements.
    pub fn step_max(&self) -> &[i64] {
        &self.step_max
    }

    /// `max |q(i,j)_k|` over action pairs and coordinates.
    pub fn step_sup_norm(&self) -> u64 {
        self.transition
            .iter()
            .flat_map(|q| q.iter().map(|c| c.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    /// Minimum and maximum of `q(i,j) . u` over action pairs.
    pub fn drift_range(&self, u: &[i64]) -> (i128, i128) {
        let speeds = self.transition.iter().map(|q| dot(q, u));
        let lo = speeds.clone().min().unwrap();
        let hi = speeds.max().unwrap();
        (lo, hi)
    }

    pub fn successor(&self, z: &[i64], i: usize, j: usize) -> Result<LatticePoint> {
        z.iter()
            .zip(self.q(i, j))
            .map(|(&a, &b)| a.checked_add(b).ok_or(Error::Overflow("stepping a state")))
            .collect::<Result<Vec<_>>>()
            .map(LatticePoint)
    }
}

/// True iff `q(i,j) . u > 0` for every action pair, where `u` is the
/// declared direction.
pub fn validate_orientation(spec: &GameSpec) -> Result<bool> {
    let u = spec.direction().ok_or(Error::NoDirection)?;
    Ok(spec.transition().iter().all(|q| dot(q, u) > 0))
}

/// Fails with [`Error::NotOriented`] unless the declared direction orients the game.
pub fn require_oriented(spec: &GameSpec) -> Result<&[i64]> {
    if validate_orientation(spec)? {
        Ok(spec.direction().unwrap())
    } else {
        Err(Error::NotOriented {
            direction: spec.direction().unwrap().to_vec(),
        })
    }
}

/// An axis-aligned box of lattice points, stored as its lowest corner and
/// its extent along each coordinate. Linear indexes are row-major with the
/// last coordinate varying fastest, so iterating indexes in order visits
/// points in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    lo: Vec<i64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
}

impl LatticeBox {
    pub fn new(lo: Vec<i64>, shape: Vec<usize>) -> Result<Self> {
        if lo.len() != shape.len() {
            return Err(Error::InvalidSpec("box corner and shape differ in dimension".into()));
        }
        let mut strides = vec![1usize; shape.len()];
        for k in (0..shape.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1]
                .checked_mul(shape[k + 1])
                .ok_or(Error::Overflow("computing box strides"))?;
        }
        if let Some(&s) = shape.first() {
            strides[0]
                .checked_mul(s)
                .ok_or(Error::Overflow("computing box volume"))?;
        }
        for (k, &s) in shape.iter().enumerate() {
            if s > 0 {
                lo[k]
                    .checked_add(s as i64 - 1)
                    .ok_or(Error::Overflow("computing box corner"))?;
            }
        }
        Ok(LatticeBox { lo, shape, strides })
    }

    /// Box with inclusive corners `lo` and `hi`. Empty along any axis where `hi < lo`.
    pub fn from_bounds(lo: &[i64], hi: &[i64]) -> Result<Self> {
        let shape = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| {
                if b < a {
                    Ok(0)
                } else {
                    (b as i128 - a as i128 + 1)
                        .try_into()
                        .map_err(|_| Error::Overflow("computing box shape"))
                }
            })
            .collect::<Result<Vec<usize>>>()?;
        LatticeBox::new(lo.to_vec(), shape)
    }

    pub fn point(z: &[i64]) -> Self {
        LatticeBox::new(z.to_vec(), vec![1; z.len()]).expect("unit box")
    }

    /// Smallest box containing all the given points.
    pub fn bounding(points: &[LatticePoint]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidSpec("empty point set".into()))?;
        let mut lo = first.0.clone();
        let mut hi = first.0.clone();
        for p in points {
            if p.dim() != lo.len() {
                return Err(Error::InvalidSpec("points differ in dimension".into()));
            }
            for k in 0..lo.len() {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        LatticeBox::from_bounds(&lo, &hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    /// Inclusive upper corner. Meaningless for empty boxes.
    pub fn hi(&self) -> Vec<i64> {
        self.lo
            .iter()
            .zip(&self.shape)
            .map(|(&l, &s)| l + s as i64 - 1)
            .collect()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn volume(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.volume() == 0
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        self.index_of(z).is_some()
    }

    pub fn index_of(&self, z: &[i64]) -> Option<usize> {
        if z.len() != self.lo.len() {
            return None;
        }
        let mut idx = 0usize;
        for (k, &c) in z.iter().enumerate() {
            let off = c.checked_sub(self.lo[k])?;
            if off < 0 || off as u64 >= self.shape[k] as u64 {
                return None;
            }
            idx += off as usize * self.strides[k];
        }
        Some(idx)
    }

    pub fn point_at(&self, idx: usize) -> Vec<i64> {
        let mut z = vec![0; self.lo.len()];
        self.write_point(idx, &mut z);
        z
    }

    /// Like [`point_at`](Self::point_at), writing into `z`.
    pub fn write_point(&self, mut idx: usize, z: &mut [i64]) {
        for ((c, &lo), &s) in z.iter_mut().zip(&self.lo).zip(&self.strides) {
            *c = lo + (idx / s) as i64;
            idx %= s;
        }
    }

    /// Minkowski sum with the box `[step_min, step_max]`.
    pub fn dilate(&self, step_min: &[i64], step_max: &[i64]) -> Result<Self> {
        let lo = self
            .lo
            .iter()
            .zip(step_min)
            .map(|(&a, &b)| a.checked_add(b).ok_or(Error::Overflow("dilating a stage box")))
            .collect::<Result<Vec<_>>>()?;
        let shape = self
            .shape
            .iter()
            .zip(step_min.iter().zip(step_max))
            .map(|(&s, (&a, &b))| {
                let grow: usize = (b as i128 - a as i128)
                    .try_into()
                    .map_err(|_| Error::Overflow("dilating a stage box"))?;
                s.checked_add(grow).ok_or(Error::Overflow("dilating a stage box"))
            })
            .collect::<Result<Vec<_>>>()?;
        LatticeBox::new(lo, shape)
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &LatticeBox) -> Result<Self> {
        if self.is_empty() {
            return Ok(other.clone());
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        let (a, b) = (self.hi(), other.hi());
        let lo: Vec<i64> = self.lo.iter().zip(&other.lo).map(|(x, y)| *x.min(y)).collect();
        let hi: Vec<i64> = a.iter().zip(&b).map(|(x, y)| *x.max(y)).collect();
        LatticeBox::from_bounds(&lo, &hi)
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        if other.is_empty() {
            return true;
        }
        let (a, b) = (self.hi(), other.hi());
        self.dim() == other.dim()
            && (0..self.dim()).all(|k| self.lo[k] <= other.lo[k] && b[k] <= a[k])
            && !self.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.volume()).map(move |idx| self.point_at(idx))
    }
}
