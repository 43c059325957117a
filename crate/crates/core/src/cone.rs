//! Per-stage reachable state sets.

use crate::error::{Error, Result};
use crate::game::{GameSpec, LatticeBox, LatticePoint};

/// Reachable states at one stage, stored as a membership mask over the
/// stage's bounding box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageLayer {
    bounds: LatticeBox,
    mask: Vec<bool>,
}

impl StageLayer {
    pub fn bounds(&self) -> &LatticeBox {
        &self.bounds
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        self.bounds.index_of(z).is_some_and(|k| self.mask[k])
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Reachable states in lexicographic order.
    pub fn states(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| LatticePoint(self.bounds.point_at(k)))
    }
}

/// States reachable from `origin` at each of the first `n` stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageCone {
    origin: LatticePoint,
    layers: Vec<StageLayer>,
}

impl StageCone {
    pub fn origin(&self) -> &LatticePoint {
        &self.origin
    }

    pub fn horizon(&self) -> usize {
        self.layers.len()
    }

    /// Stage `m`, counted from 1.
    pub fn stage(&self, m: usize) -> &StageLayer {
        &self.layers[m - 1]
    }

    pub fn layers(&self) -> &[StageLayer] {
        &self.layers
    }

    pub fn total_states(&self) -> usize {
        self.layers.iter().map(StageLayer::len).sum()
    }

    /// Smallest box containing every stage.
    pub fn bounding_box(&self) -> LatticeBox {
        self.layers
            .iter()
            .skip(1)
            .fold(self.layers[0].bounds.clone(), |acc, l| acc.union(&l.bounds).expect("finite"))
    }
}

/// Bounding boxes of stages `1..=n` when stage 1 is `start`.
pub(crate) fn stage_boxes(spec: &GameSpec, start: LatticeBox, n: usize) -> Result<Vec<LatticeBox>> {
    let mut boxes = Vec::with_capacity(n);
    boxes.push(start);
    for _ in 1..n {
        let next = boxes.last().unwrap().dilate(spec.step_min(), spec.step_max())?;
        boxes.push(next);
    }
    Ok(boxes)
}

/// Bounding box of every stage of the cone, without enumerating states.
pub fn cone_bounding_box(spec: &GameSpec, origin: &LatticePoint, n: usize) -> Result<LatticeBox> {
    if origin.dim() != spec.dim() {
        return Err(Error::InvalidSpec("origin dimension differs from game dimension".into()));
    }
    let boxes = stage_boxes(spec, LatticeBox::point(origin), n.max(1))?;
    boxes.iter().skip(1).try_fold(boxes[0].clone(), |acc, b| acc.union(b))
}

/// Stage-by-stage forward enumeration of the reachable states.
///
/// `max_cells` bounds the total size of the per-stage bounding boxes.
pub fn reachable_cone_with_budget(
    spec: &GameSpec,
    origin: &LatticePoint,
    n: usize,
    max_cells: usize,
) -> Result<StageCone> {
    reachable_from(spec, std::slice::from_ref(origin), n, max_cells).map(|layers| StageCone {
        origin: origin.clone(),
        layers,
    })
}

pub fn reachable_cone(spec: &GameSpec, origin: &LatticePoint, n: usize) -> Result<StageCone> {
    reachable_cone_with_budget(spec, origin, n, crate::solver::DEFAULT_MAX_CELLS)
}

pub(crate) fn reachable_from(
    spec: &GameSpec,
    start: &[LatticePoint],
    n: usize,
    max_cells: usize,
) -> Result<Vec<StageLayer>> {
    if n == 0 {
        return Err(Error::OutOfRange("horizon must be at least 1".into()));
    }
    if start.iter().any(|z| z.dim() != spec.dim()) {
        return Err(Error::InvalidSpec("origin dimension differs from game dimension".into()));
    }
    let boxes = stage_boxes(spec, LatticeBox::bounding(start)?, n)?;
    let required: u128 = boxes.iter().map(|b| b.volume() as u128).sum();
    if required > max_cells as u128 {
        return Err(Error::BudgetExceeded {
            what: "reachable cone",
            required,
            limit: max_cells as u128,
        });
    }
    let mut layers = Vec::with_capacity(n);
    let mut mask = vec![false; boxes[0].volume()];
    for z in start {
        mask[boxes[0].index_of(z).unwrap()] = true;
    }
    layers.push(StageLayer {
        bounds: boxes[0].clone(),
        mask,
    });
    for m in 1..n {
        let (cur, next) = (&boxes[m - 1], &boxes[m]);
        let offsets = successor_offsets(spec, next);
        let mut next_mask = vec![false; next.volume()];
        let cur_mask = &layers[m - 1].mask;
        for (k, _) in cur_mask.iter().enumerate().filter(|(_, &b)| b) {
            let base = base_index(cur, next, k);
            for &off in &offsets {
                next_mask[base + off] = true;
            }
        }
        layers.push(StageLayer {
            bounds: next.clone(),
            mask: next_mask,
        });
    }
    Ok(layers)
}

/// Linear offset, in `next`'s indexing, of each action pair's displacement
/// relative to the componentwise minimum displacement.
pub(crate) fn successor_offsets(spec: &GameSpec, next: &LatticeBox) -> Vec<usize> {
    spec.transition()
        .iter()
        .map(|q| {
            q.iter()
                .zip(spec.step_min())
                .zip(next.strides())
                .map(|((&a, &lo), &s)| (a - lo) as usize * s)
                .sum()
        })
        .collect()
}

/// Index in `next` of the point `z - step_min` where `z` is the point at
/// index `k` in `cur`; adding a successor offset gives the index of `z + q`.
pub(crate) fn base_index(cur: &LatticeBox, next: &LatticeBox, mut k: usize) -> usize {
    let mut idx = 0;
    for (cs, ns) in cur.strides().iter().zip(next.strides()) {
        idx += (k / cs) * ns;
        k %= cs;
    }
    idx
}
