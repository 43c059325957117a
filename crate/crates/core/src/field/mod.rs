//! Stationary random payoff fields.

pub mod squares;

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::game::{GameSpec, LatticeBox, LatticePoint};
use crate::prf::{bernoulli, stream, unit_interval, Prf};

pub use squares::{
    build_catalog, SquareCatalog, SquareKind, SquarePlant, SquaresModel, DEFAULT_SCAN_BUDGET,
};
use squares::{payoff_from_scales, scales_on_demand, ScaleRaster};

/// Source of stage payoffs for the solver.
pub trait PayoffField: Sync {
    /// Fails if the field cannot serve states or action pairs of this game.
    fn check_game(&self, spec: &GameSpec) -> Result<()>;

    /// Writes `g(z, i, j)` to `out[i * |J| + j]` for every action pair.
    fn stage_payoffs(&self, z: &[i64], out: &mut [f64]);

    /// Upper bound on `|g|`.
    fn sup_norm(&self) -> f64;
}

/// Row-major payoff matrix indexed by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl PayoffMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Model(format!(
                "payoff matrix has {} entries, expected {rows}x{cols}",
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Model("payoff matrix entries must be finite".into()));
        }
        Ok(PayoffMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Model("ragged payoff matrix".into()));
        }
        PayoffMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn constant(rows: usize, cols: usize, c: f64) -> Self {
        PayoffMatrix::new(rows, cols, vec![c; rows * cols]).expect("constant matrix")
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }
}

/// Law of the payoff field.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentModel {
    /// State-only payoff, Bernoulli(p) independently per state.
    IidBernoulli { p: f64 },
    /// One matrix per state, drawn independently from a finite distribution.
    IidTable { support: Vec<PayoffMatrix>, probs: Vec<f64> },
    /// The two-phase squares field on `Z^3`.
    Squares(SquaresModel),
}

impl EnvironmentModel {
    pub fn constant(rows: usize, cols: usize, c: f64) -> Self {
        EnvironmentModel::IidTable {
            support: vec![PayoffMatrix::constant(rows, cols, c)],
            probs: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvironmentModel::IidBernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Model(format!("Bernoulli parameter {p} outside [0, 1]")));
                }
            }
            EnvironmentModel::IidTable { support, probs } => {
                if support.is_empty() {
                    return Err(Error::Model("table support is empty".into()));
                }
                if support.len() != probs.len() {
                    return Err(Error::Model(format!(
                        "{} support matrices but {} probabilities",
                        support.len(),
                        probs.len()
                    )));
                }
                let (r, c) = (support[0].rows, support[0].cols);
                for m in support {
                    if m.rows != r || m.cols != c || m.entries.len() != r * c {
                        return Err(Error::Model("support matrices differ in shape".into()));
                    }
                    if m.entries.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Model("support matrices must be finite".into()));
                    }
                }
                if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::Model("probabilities must lie in [0, 1]".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Model(format!("probabilities sum to {total}, not 1")));
                }
            }
            EnvironmentModel::Squares(m) => m.validate()?,
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            EnvironmentModel::IidBernoulli { .. } | EnvironmentModel::Squares(_) => 1.0,
            EnvironmentModel::IidTable { support, .. } => support
                .iter()
                .flat_map(|m| m.entries.iter().map(|x| x.abs()))
                .fold(0.0, f64::max),
        }
    }

    pub fn as_squares(&self) -> Option<&SquaresModel> {
        match self {
            EnvironmentModel::Squares(m) => Some(m),
            _ => None,
        }
    }
}

/// Payoff field realisation: a model, a seed, and for the squares model an
/// optional precomputed catalog over a region of interest.
#[derive(Debug, Clone)]
pub struct Environment {
    model: EnvironmentModel,
    seed: u64,
    iid: Prf,
    cumulative: Vec<f64>,
    raster: Option<ScaleRaster>,
    catalog: Option<SquareCatalog>,
}

impl Environment {
    /// Environment without precomputed state; squares payoffs are computed
    /// per point on demand.
    pub fn new(model: EnvironmentModel, seed: u64) -> Result<Self> {
        model.validate()?;
        let cumulative = match &model {
            EnvironmentModel::IidTable { probs, .. } => probs
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect(),
            _ => Vec::new(),
        };
        Ok(Environment {
            iid: Prf::new(seed, stream::IID_STATE),
            model,
            seed,
            cumulative,
            raster: None,
            catalog: None,
        })
    }

    /// Environment with a square catalog precomputed over `region`. For i.i.d.
    /// models the region is ignored.
    pub fn with_region(model: EnvironmentModel, seed: u64, region: &LatticeBox) -> Result<Self> {
        Environment::with_region_budget(model, seed, region, DEFAULT_SCAN_BUDGET)
    }

    pub fn with_region_budget(
        model: EnvironmentModel,
        seed: u64,
        region: &LatticeBox,
        budget: u128,
    ) -> Result<Self> {
        let mut env = Environment::new(model, seed)?;
        if let EnvironmentModel::Squares(m) = &env.model {
            let catalog = build_catalog(m, seed, region, budget)?;
            env.raster = Some(ScaleRaster::paint(&catalog));
            env.catalog = Some(catalog);
        }
        Ok(env)
    }

    /// Environment prepared for solving `n` stages from `origin`.
    pub fn for_cone(
        model: EnvironmentModel,
        seed: u64,
        spec: &GameSpec,
        origin: &LatticePoint,
        n: usize,
    ) -> Result<Self> {
        let region = crate::cone::cone_bounding_box(spec, origin, n)?;
        Environment::with_region(model, seed, &region)
    }

    pub fn model(&self) -> &EnvironmentModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn region(&self) -> Option<&LatticeBox> {
        self.catalog.as_ref().map(SquareCatalog::region)
    }

    pub fn catalog(&self) -> Option<&SquareCatalog> {
        self.catalog.as_ref()
    }

    /// `g(z, i, j)`.
    pub fn payoff(&self, z: &[i64], i: usize, j: usize) -> Result<f64> {
        match &self.model {
            EnvironmentModel::IidBernoulli { .. } => Ok(self.state_payoff(z)),
            EnvironmentModel::IidTable { support, .. } => {
                let shape = &support[0];
                if i >= shape.rows || j >= shape.cols {
                    return Err(Error::OutOfRange(format!(
                        "action pair ({i}, {j}) outside {}x{} table",
                        shape.rows, shape.cols
                    )));
                }
                Ok(support[self.table_index(z)].get(i, j))
            }
            EnvironmentModel::Squares(_) => {
                let (a, b) = self.square_scales(z)?;
                Ok(payoff_from_scales(a, b) as f64)
            }
        }
    }

    /// Largest covering 1-square and 0-square scales at `z`.
    pub fn square_scales(&self, z: &[i64]) -> Result<(Option<u32>, Option<u32>)> {
        let m = self
            .model
            .as_squares()
            .ok_or_else(|| Error::Model("square scales requested from a non-squares model".into()))?;
        let z3 = to3(z)?;
        if let Some(r) = &self.raster {
            if let Some(idx) = r.region().index_of(z) {
                return Ok(r.scales_at(idx));
            }
        }
        Ok(scales_on_demand(m, self.seed, z3))
    }

    /// This environment if it already covers `region`, otherwise a copy with
    /// a catalog built over `region`.
    pub fn localized(&self, region: &LatticeBox) -> Result<Cow<'_, Environment>> {
        match (&self.model, &self.raster) {
            (EnvironmentModel::Squares(_), Some(r)) if r.region().contains_box(region) => Ok(Cow::Borrowed(self)),
            (EnvironmentModel::Squares(_), _) => Ok(Cow::Owned(Environment::with_region(
                self.model.clone(),
                self.seed,
                region,
            )?)),
            _ => Ok(Cow::Borrowed(self)),
        }
    }

    #[inline]
    fn iid_hash(&self, z: &[i64]) -> u64 {
        z.iter().fold(self.iid, |p, &c| p.push_i64(c)).finish()
    }

    #[inline]
    fn state_payoff(&self, z: &[i64]) -> f64 {
        match &self.model {
            EnvironmentModel::IidBernoulli { p } => f64::from(u8::from(bernoulli(self.iid_hash(z), *p))),
            EnvironmentModel::Squares(m) => {
                let scales = match &self.raster {
                    Some(r) => match r.region().index_of(z) {
                        Some(idx) => r.scales_at(idx),
                        None => scales_on_demand(m, self.seed, [z[0], z[1], z[2]]),
                    },
                    None => scales_on_demand(m, self.seed, [z[0], z[1], z[2]]),
                };
                payoff_from_scales(scales.0, scales.1) as f64
            }
            EnvironmentModel::IidTable { .. } => unreachable!("table payoffs depend on actions"),
        }
    }

    #[inline]
    fn table_index(&self, z: &[i64]) -> usize {
        let u = unit_interval(self.iid_hash(z));
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }
}

fn to3(z: &[i64]) -> Result<[i64; 3]> {
    <[i64; 3]>::try_from(z)
        .map_err(|_| Error::Model(format!("squares model is defined on Z^3, got a {}-dimensional state", z.len())))
}

impl PayoffField for Environment {
    fn check_game(&self, spec: &GameSpec) -> Result<()> {
        match &self.model {
            EnvironmentModel::Squares(_) if spec.dim() != 3 => Err(Error::Model(format!(
                "squares model requires dimension 3, game has dimension {}",
                spec.dim()
            ))),
            EnvironmentModel::IidTable { support, .. }
                if support[0].rows != spec.num_actions_p1() || support[0].cols != spec.num_actions_p2() =>
            {
                Err(Error::Model(format!(
                    "payoff tables are {}x{} but the game has {}x{} actions",
                    support[0].rows,
                    support[0].cols,
                    spec.num_actions_p1(),
                    spec.num_actions_p2()
                )))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    fn stage_payoffs(&self, z: &[i64], out: &mut [f64]) {
        match &self.model {
            EnvironmentModel::IidTable { support, .. } => {
                out.copy_from_slice(&support[self.table_index(z)].entries);
            }
            _ => out.fill(self.state_payoff(z)),
        }
    }

    fn sup_norm(&self) -> f64 {
        self.model.sup_norm()
    }
}

/// Mean payoff over a region for the action pair `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub mean: f64,
    pub count: usize,
}

pub fn field_stats(env: &Environment, region: &LatticeBox) -> Result<FieldStats> {
    if region.is_empty() {
        return Err(Error::OutOfRange("field statistics over an empty region".into()));
    }
    let local = env.localized(region)?;
    let mut total = 0.0;
    for z in region.points() {
        total += local.payoff(&z, 0, 0)?;
    }
    let count = region.volume();
    Ok(FieldStats {
        mean: total / count as f64,
        count,
    })
}

/// Centres of complete squares of the given kind and scale within 1-norm
/// distance `radius` of the origin, sorted by distance then coordinates.
pub fn find_complete_squares(
    env: &Environment,
    kind: SquareKind,
    scale: u32,
    radius: u64,
) -> Result<Vec<[i64; 3]>> {
    let model = env
        .model()
        .as_squares()
        .ok_or_else(|| Error::Model("complete squares requested from a non-squares model".into()))?;
    if scale == 0 || scale > model.k_max {
        return Err(Error::OutOfRange(format!("scale {scale} outside 1..={}", model.k_max)));
    }
    let r = i64::try_from(radius).map_err(|_| Error::OutOfRange("radius too large".into()))?;
    let mut found = Vec::new();
    for x in -r..=r {
        let rx = r - x.abs();
        for y in -rx..=rx {
            let ry = rx - y.abs();
            for h in -ry..=ry {
                let c = [x, y, h];
                if model.is_center(env.seed(), kind, scale, c) && is_complete(env, kind, scale, c)? {
                    found.push(c);
                }
            }
        }
    }
    found.sort_by_key(|c| (c.iter().map(|v| v.unsigned_abs()).sum::<u64>(), *c));
    Ok(found)
}

/// Whether every point of the square carries the kind's payoff.
pub fn is_complete(env: &Environment, kind: SquareKind, scale: u32, center: [i64; 3]) -> Result<bool> {
    let sq = squares::square_box(kind, scale, center);
    let local = env.localized(&sq)?;
    let want = kind.payoff() as f64;
    for z in sq.points() {
        if local.payoff(&z, 0, 0)? != want {
            return Ok(false);
        }
    }
    Ok(true)
}
