//! Two-phase squares construction on `Z^3`.
//!
//! A 1-square of scale `k` centred on `c` is the set of points `z` with
//! `z_0 = c_0` and `|z_1 - c_1|, |z_2 - c_2| <= T_k / 2` where `T_k = 2^k`;
//! it contains `(T_k + 1)^2` lattice points. A 0-square is the same shape in
//! the plane of constant second coordinate. Centres are independent
//! Bernoulli draws with probability `T_k^-3`, one family per kind.
//!
//! The sequential painting procedure (1-squares first, then 0-squares that
//! only overwrite points not covered by a 1-square of equal or larger scale)
//! reduces to a closed form: the payoff at `z` is 1 iff some 1-square covers
//! `z` and its largest covering scale is at least the largest covering
//! 0-square scale.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::LatticeBox;
use crate::prf::{dyadic_bernoulli, stream, Prf};

/// Largest supported scale: draws need `3k <= 64` bits.
pub const MAX_SCALE: u32 = 21;

/// Default cap on the number of candidate centres a catalog build may scan.
pub const DEFAULT_SCAN_BUDGET: u128 = 1 << 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SquareKind {
    /// Payoff-1 square, orthogonal to the first axis.
    One,
    /// Payoff-0 square, orthogonal to the second axis.
    Zero,
}

impl SquareKind {
    pub const BOTH: [SquareKind; 2] = [SquareKind::One, SquareKind::Zero];

    /// Axis the square is orthogonal to.
    pub fn normal_axis(self) -> usize {
        match self {
            SquareKind::One => 0,
            SquareKind::Zero => 1,
        }
    }

    fn stream(self) -> u64 {
        match self {
            SquareKind::One => stream::ONE_SQUARE,
            SquareKind::Zero => stream::ZERO_SQUARE,
        }
    }

    /// Payoff forced by this kind: 1 for 1-squares, 0 for 0-squares.
    pub fn payoff(self) -> u8 {
        match self {
            SquareKind::One => 1,
            SquareKind::Zero => 0,
        }
    }

    fn slot(self) -> usize {
        match self {
            SquareKind::One => 0,
            SquareKind::Zero => 1,
        }
    }
}

/// `T_k = 2^k`.
pub fn side_length(k: u32) -> i64 {
    1i64 << k
}

pub fn half_side(k: u32) -> i64 {
    side_length(k) / 2
}

/// A deterministically forced square centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SquarePlant {
    pub kind: SquareKind,
    pub scale: u32,
    pub center: [i64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquaresModel {
    pub k_max: u32,
    /// When false only planted centres exist.
    pub ambient: bool,
    pub plants: Vec<SquarePlant>,
}

impl SquaresModel {
    pub fn new(k_max: u32) -> Self {
        SquaresModel {
            k_max,
            ambient: true,
            plants: Vec::new(),
        }
    }

    pub fn plants_only(k_max: u32, plants: Vec<SquarePlant>) -> Self {
        SquaresModel {
            k_max,
            ambient: false,
            plants,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 || self.k_max > MAX_SCALE {
            return Err(Error::Model(format!("k_max must lie in 1..={MAX_SCALE}, got {}", self.k_max)));
        }
        for p in &self.plants {
            if p.scale == 0 || p.scale > self.k_max {
                return Err(Error::Model(format!(
                    "planted square scale {} outside 1..={}",
                    p.scale, self.k_max
                )));
            }
        }
        Ok(())
    }

    /// Whether `center` carries a square of the given kind and scale.
    pub fn is_center(&self, seed: u64, kind: SquareKind, k: u32, center: [i64; 3]) -> bool {
        (self.ambient && ambient_draw(seed, kind, k, center)) || self.is_planted(kind, k, center)
    }

    fn is_planted(&self, kind: SquareKind, k: u32, center: [i64; 3]) -> bool {
        self.plants
            .iter()
            .any(|p| p.kind == kind && p.scale == k && p.center == center)
    }
}

/// The raw Bernoulli(`T_k^-3`) centre draw, ignoring plants.
pub fn ambient_draw(seed: u64, kind: SquareKind, k: u32, c: [i64; 3]) -> bool {
    let h = Prf::new(seed, kind.stream())
        .push(k as u64)
        .push_i64(c[0])
        .push_i64(c[1])
        .push_i64(c[2])
        .finish();
    dyadic_bernoulli(h, 3 * k)
}

/// Whether the square of `kind` and scale `k` centred on `c` contains `z`.
pub fn covers(kind: SquareKind, k: u32, c: [i64; 3], z: [i64; 3]) -> bool {
    let a = kind.normal_axis();
    let r = half_side(k);
    (0..3).all(|ax| {
        let d = (z[ax] - c[ax]).abs();
        if ax == a {
            d == 0
        } else {
            d <= r
        }
    })
}

/// All points of a square, as a box.
pub fn square_box(kind: SquareKind, k: u32, c: [i64; 3]) -> LatticeBox {
    let a = kind.normal_axis();
    let r = half_side(k);
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for ax in 0..3 {
        if ax == a {
            lo[ax] = c[ax];
            hi[ax] = c[ax];
        } else {
            lo[ax] = c[ax] - r;
            hi[ax] = c[ax] + r;
        }
    }
    LatticeBox::from_bounds(&lo, &hi).expect("square box")
}

/// Centres whose square of the given kind and scale intersects `region`.
fn candidate_window(kind: SquareKind, k: u32, region: &LatticeBox) -> ([i64; 3], [i64; 3]) {
    let a = kind.normal_axis();
    let r = half_side(k);
    let rl = region.lo();
    let rh = region.hi();
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for ax in 0..3 {
        if ax == a {
            lo[ax] = rl[ax];
            hi[ax] = rh[ax];
        } else {
            lo[ax] = rl[ax] - r;
            hi[ax] = rh[ax] + r;
        }
    }
    (lo, hi)
}

fn window_volume(lo: &[i64; 3], hi: &[i64; 3]) -> u128 {
    (0..3).map(|ax| (hi[ax] - lo[ax] + 1).max(0) as u128).product()
}

/// Per-scale, per-kind sorted lists of centres whose squares intersect a region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareCatalog {
    region: LatticeBox,
    k_max: u32,
    centers: [Vec<Vec<[i64; 3]>>; 2],
}

impl SquareCatalog {
    pub fn region(&self) -> &LatticeBox {
        &self.region
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// Sorted centres of the given kind at scale `k` (1-based).
    pub fn centers(&self, kind: SquareKind, k: u32) -> &[[i64; 3]] {
        &self.centers[kind.slot()][k as usize - 1]
    }

    pub fn len(&self) -> usize {
        self.centers.iter().flatten().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Maximum covering scale per kind at `z`, by scanning every entry.
    pub fn scan_scales(&self, z: [i64; 3]) -> (Option<u32>, Option<u32>) {
        let best = |kind: SquareKind| {
            (1..=self.k_max)
                .rev()
                .find(|&k| self.centers(kind, k).iter().any(|&c| covers(kind, k, c, z)))
        };
        (best(SquareKind::One), best(SquareKind::Zero))
    }
}

/// Work a catalog build over `region` would perform.
pub fn catalog_work(model: &SquaresModel, region: &LatticeBox) -> u128 {
    if !model.ambient || region.is_empty() {
        return 0;
    }
    SquareKind::BOTH
        .iter()
        .flat_map(|&kind| {
            (1..=model.k_max).map(move |k| {
                let (lo, hi) = candidate_window(kind, k, region);
                window_volume(&lo, &hi)
            })
        })
        .sum()
}

/// Enumerate every centre whose square intersects `region`.
pub fn build_catalog(
    model: &SquaresModel,
    seed: u64,
    region: &LatticeBox,
    budget: u128,
) -> Result<SquareCatalog> {
    model.validate()?;
    if region.dim() != 3 {
        return Err(Error::Model("squares model requires a three-dimensional region".into()));
    }
    let required = catalog_work(model, region);
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: "square catalog scan",
            required,
            limit: budget,
        });
    }
    let mut centers: [Vec<Vec<[i64; 3]>>; 2] = [Vec::new(), Vec::new()];
    for kind in SquareKind::BOTH {
        for k in 1..=model.k_max {
            let (lo, hi) = candidate_window(kind, k, region);
            let mut found: Vec<[i64; 3]> = if model.ambient && !region.is_empty() {
                (lo[0]..=hi[0])
                    .into_par_iter()
                    .flat_map_iter(|c0| {
                        let prefix = Prf::new(seed, kind.stream()).push(k as u64).push_i64(c0);
                        (lo[1]..=hi[1]).flat_map(move |c1| {
                            let p1 = prefix.push_i64(c1);
                            (lo[2]..=hi[2]).filter_map(move |c2| {
                                dyadic_bernoulli(p1.push_i64(c2).finish(), 3 * k).then_some([c0, c1, c2])
                            })
                        })
                    })
                    .collect()
            } else {
                Vec::new()
            };
            for p in &model.plants {
                if p.kind == kind && p.scale == k && (0..3).all(|ax| lo[ax] <= p.center[ax] && p.center[ax] <= hi[ax]) {
                    found.push(p.center);
                }
            }
            found.sort_unstable();
            found.dedup();
            centers[kind.slot()].push(found);
        }
    }
    Ok(SquareCatalog {
        region: region.clone(),
        k_max: model.k_max,
        centers,
    })
}

/// Dense per-point maximum covering scales over a region (0 means none).
#[derive(Debug, Clone)]
pub(crate) struct ScaleRaster {
    region: LatticeBox,
    max_scale: [Vec<u8>; 2],
}

impl ScaleRaster {
    pub(crate) fn paint(catalog: &SquareCatalog) -> Self {
        let region = catalog.region.clone();
        let vol = region.volume();
        let mut max_scale = [vec![0u8; vol], vec![0u8; vol]];
        if vol > 0 {
            let rl = region.lo().to_vec();
            let rh = region.hi();
            for kind in SquareKind::BOTH {
                let grid = &mut max_scale[kind.slot()];
                for k in 1..=catalog.k_max {
                    for &c in catalog.centers(kind, k) {
                        let sq = square_box(kind, k, c);
                        let sl = sq.lo();
                        let sh = sq.hi();
                        let lo: Vec<i64> = (0..3).map(|ax| sl[ax].max(rl[ax])).collect();
                        let hi: Vec<i64> = (0..3).map(|ax| sh[ax].min(rh[ax])).collect();
                        if (0..3).any(|ax| lo[ax] > hi[ax]) {
                            continue;
                        }
                        for x in lo[0]..=hi[0] {
                            for y in lo[1]..=hi[1] {
                                let row = region.index_of(&[x, y, lo[2]]).unwrap();
                                let len = (hi[2] - lo[2] + 1) as usize;
                                // ascending k, so the last write is the maximum
                                grid[row..row + len].fill(k as u8);
                            }
                        }
                    }
                }
            }
        }
        ScaleRaster { region, max_scale }
    }

    pub(crate) fn region(&self) -> &LatticeBox {
        &self.region
    }

    #[inline]
    pub(crate) fn scales_at(&self, idx: usize) -> (Option<u32>, Option<u32>) {
        let f = |v: u8| (v > 0).then_some(v as u32);
        (f(self.max_scale[0][idx]), f(self.max_scale[1][idx]))
    }
}

/// Closed form of the two-phase procedure.
#[inline]
pub fn payoff_from_scales(one: Option<u32>, zero: Option<u32>) -> u8 {
    match (one, zero) {
        (Some(a), Some(b)) => u8::from(a >= b),
        (Some(_), None) => 1,
        (None, _) => 0,
    }
}

/// Maximum covering scale per kind at `z`, from direct per-point draws.
pub(crate) fn scales_on_demand(model: &SquaresModel, seed: u64, z: [i64; 3]) -> (Option<u32>, Option<u32>) {
    let best = |kind: SquareKind| {
        let a = kind.normal_axis();
        (1..=model.k_max).rev().find(|&k| {
            let r = half_side(k);
            let (b, c) = match a {
                0 => (1, 2),
                _ => (0, 2),
            };
            (z[b] - r..=z[b] + r).any(|cb| {
                (z[c] - r..=z[c] + r).any(|cc| {
                    let mut center = z;
                    center[b] = cb;
                    center[c] = cc;
                    model.is_center(seed, kind, k, center)
                })
            })
        })
    };
    (best(SquareKind::One), best(SquareKind::Zero))
}
