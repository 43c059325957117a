//! TOML experiment configuration.
//!
//! ```toml
//! [game]
//! dim = 3
//! actions = [3, 3]
//! # transition[i][j] is q(i, j)
//! transition = [
//!     [[-1, -1, 1], [-1, 0, 1], [-1, 1, 1]],
//!     [[0, -1, 1], [0, 0, 1], [0, 1, 1]],
//!     [[1, -1, 1], [1, 0, 1], [1, 1, 1]],
//! ]
//! direction = [0, 0, 1]   # optional
//! origin = [0, 0, 0]      # optional, defaults to 0
//!
//! [model]
//! kind = "squares"        # or "iid-bernoulli" (p) / "iid-table" (support, probs)
//! k_max = 10
//! ambient = true
//! plants = [{ kind = "one", scale = 6, center = [4, 0, 0] }]
//!
//! [experiment]            # optional, every key has a default
//! base_seed = 1
//! num_seeds = 100
//! horizons = [8, 16, 32]
//! lambda = [0.05, 0.1]
//! epsilon = 0.25
//! cone_min = false
//! ```
//!
//! Unknown keys and duplicate keys are rejected.

use std::path::Path;

use percolation_core::experiments::ExperimentConfig;
use percolation_core::{EnvironmentModel, GameSpec, LatticePoint, PayoffMatrix, SquareKind, SquarePlant, SquaresModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub game: GameSection,
    pub model: ModelSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub dim: usize,
    pub actions: [usize; 2],
    pub transition: Vec<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSection {
    IidBernoulli {
        p: f64,
    },
    IidTable {
        /// One matrix per support point, as rows indexed by Player 1's action.
        support: Vec<Vec<Vec<f64>>>,
        probs: Vec<f64>,
    },
    Squares {
        #[serde(default = "default_k_max")]
        k_max: u32,
        #[serde(default = "default_true")]
        ambient: bool,
        #[serde(default)]
        plants: Vec<PlantSection>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub kind: PlantKind,
    pub scale: u32,
    pub center: [i64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantKind {
    One,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default = "default_num_seeds")]
    pub num_seeds: usize,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub cone_min: bool,
}

fn default_k_max() -> u32 {
    10
}
fn default_true() -> bool {
    true
}
fn default_base_seed() -> u64 {
    1
}
fn default_num_seeds() -> usize {
    20
}
fn default_horizons() -> Vec<usize> {
    vec![8, 16, 32]
}
fn default_lambda() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.3]
}
fn default_epsilon() -> f64 {
    0.25
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            base_seed: default_base_seed(),
            num_seeds: default_num_seeds(),
            horizons: default_horizons(),
            lambda: default_lambda(),
            epsilon: default_epsilon(),
            cone_min: false,
        }
    }
}

/// Parsed and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub file: ConfigFile,
    pub experiment: ExperimentConfig,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        ConfigFile::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Canonical text form; parsing it yields an identical structure.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical text, framed like a git blob.
    pub fn content_hash(&self, extra: &str) -> String {
        let body = format!("{}{extra}", self.to_canonical());
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn game_spec(&self) -> Result<GameSpec, CliError> {
        let g = &self.game;
        let [ni, nj] = g.actions;
        if g.transition.len() != ni {
            return Err(CliError::Config(format!(
                "game.transition: expected {ni} rows (one per Player 1 action), found {}",
                g.transition.len()
            )));
        }
        for (i, row) in g.transition.iter().enumerate() {
            if row.len() != nj {
                return Err(CliError::Config(format!(
                    "game.transition[{i}]: expected {nj} entries (one per Player 2 action), found {}",
                    row.len()
                )));
            }
        }
        let flat = g.transition.iter().flatten().cloned().collect();
        GameSpec::new(g.dim, ni, nj, flat, g.direction.clone()).map_err(|e| CliError::Config(format!("game: {e}")))
    }

    pub fn model(&self) -> Result<EnvironmentModel, CliError> {
        let model = match &self.model {
            ModelSection::IidBernoulli { p } => EnvironmentModel::IidBernoulli { p: *p },
            ModelSection::IidTable { support, probs } => {
                let support = support
                    .iter()
                    .enumerate()
                    .map(|(k, rows)| {
                        PayoffMatrix::from_rows(rows.clone())
                            .map_err(|e| CliError::Config(format!("model.support[{k}]: {e}")))
                    })
                    .collect::<Result<_, _>>()?;
                EnvironmentModel::IidTable {
                    support,
                    probs: probs.clone(),
                }
            }
            ModelSection::Squares { k_max, ambient, plants } => EnvironmentModel::Squares(SquaresModel {
                k_max: *k_max,
                ambient: *ambient,
                plants: plants
                    .iter()
                    .map(|p| SquarePlant {
                        kind: match p.kind {
                            PlantKind::One => SquareKind::One,
                            PlantKind::Zero => SquareKind::Zero,
                        },
                        scale: p.scale,
                        center: p.center,
                    })
                    .collect(),
            }),
        };
        model.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
        Ok(model)
    }

    pub fn load(&self) -> Result<Loaded, CliError> {
        let spec = self.game_spec()?;
        let model = self.model()?;
        let mut cfg = ExperimentConfig::new(spec, model);
        if let Some(o) = &self.game.origin {
            cfg.origin = LatticePoint::from(o.clone());
        }
        let e = &self.experiment;
        cfg.base_seed = e.base_seed;
        cfg.num_seeds = e.num_seeds;
        cfg.horizons = e.horizons.clone();
        cfg.lambda_grid = e.lambda.clone();
        cfg.epsilon = e.epsilon;
        cfg.cone_min = e.cone_min;
        // model/game compatibility surfaces here rather than mid-run
        percolation_core::Environment::new(cfg.model.clone(), 0)
            .and_then(|env| percolation_core::PayoffField::check_game(&env, &cfg.spec))
            .map_err(|e| CliError::Config(format!("model does not fit the game: {e}")))?;
        cfg.validate().map_err(|e| CliError::Config(format!("experiment: {e}")))?;
        Ok(Loaded {
            file: self.clone(),
            experiment: cfg,
        })
    }

    pub fn from_spec(spec: &GameSpec, model: ModelSection) -> Self {
        let [ni, nj] = [spec.num_actions_p1(), spec.num_actions_p2()];
        let transition = (0..ni).map(|i| (0..nj).map(|j| spec.q(i, j).to_vec()).collect()).collect();
        ConfigFile {
            game: GameSection {
                dim: spec.dim(),
                actions: [ni, nj],
                transition,
                direction: spec.direction().map(<[i64]>::to_vec),
                origin: None,
            },
            model,
            experiment: ExperimentSection::default(),
        }
    }
}
