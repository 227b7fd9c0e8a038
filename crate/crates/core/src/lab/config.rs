//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "name": "lyapunov",
//!   "problem": { "kind": "lyapunov", "dims": [4, 4], "diagonals": [[1, 2, 3, 4]] },
//!   "rhs": { "kind": "random_rank_one", "terms": 1 },
//!   "splittings": "tt",
//!   "n_steps": 12,
//!   "seed": 7
//! }
//! ```
//!
//! Explicit factor matrices are given inline as rows or as
//! `{"csv": "path/to/matrix.csv"}`; paths are relative to the working
//! directory.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kron::{load_matrix_csv, ModelKind, ModelParams, RhsTensor};
use crate::tensor::{Splitting, Tensor, DEFAULT_EPS_RANK};

pub const DEFAULT_STEPS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Linear,
    Eigen,
    Commuting,
    DSweep,
    TwoStep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Linear => "linear",
            Mode::Eigen => "eigen",
            Mode::Commuting => "commuting",
            Mode::DSweep => "d_sweep",
            Mode::TwoStep => "two_step",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<f64>>),
    Csv { csv: PathBuf },
}

impl MatrixSpec {
    pub fn resolve(&self) -> Result<DMatrix<f64>> {
        match self {
            MatrixSpec::Rows(rows) => crate::kron::matrix_from_rows(rows),
            MatrixSpec::Csv { csv } => load_matrix_csv(csv),
        }
    }
}

fn resolve_list(list: &Option<Vec<MatrixSpec>>) -> Result<Option<Vec<DMatrix<f64>>>> {
    list.as_ref()
        .map(|specs| specs.iter().map(MatrixSpec::resolve).collect())
        .transpose()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ModelKind,
    pub dims: Vec<usize>,
    /// Generator seed; defaults to the experiment seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub a_interval: Option<[f64; 2]>,
    #[serde(default)]
    pub b_max: Option<f64>,
    #[serde(default)]
    pub c_max: Option<f64>,
    #[serde(default)]
    pub a: Option<Vec<MatrixSpec>>,
    #[serde(default)]
    pub b: Option<Vec<MatrixSpec>>,
    #[serde(default)]
    pub c: Option<Vec<MatrixSpec>>,
    #[serde(default)]
    pub diagonals: Option<Vec<Vec<f64>>>,
}

impl ProblemSpec {
    pub fn params(&self, default_seed: u64) -> Result<ModelParams> {
        let mut p = ModelParams::new(self.dims.clone());
        p.seed = self.seed.unwrap_or(default_seed);
        if let Some([lo, hi]) = self.a_interval {
            p.a_interval = (lo, hi);
        }
        if let Some(b) = self.b_max {
            p.b_max = b;
        }
        if let Some(c) = self.c_max {
            p.c_max = c;
        }
        p.a = resolve_list(&self.a)?;
        p.b = resolve_list(&self.b)?;
        p.c = resolve_list(&self.c)?;
        p.diagonals = self.diagonals.clone();
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsSpec {
    /// Sum of `terms` unit-norm random elementary tensors, optionally solved
    /// in chunks of `chunk` summands.
    RandomRankOne {
        #[serde(default = "one")]
        terms: usize,
        #[serde(default)]
        chunk: Option<usize>,
    },
    /// A single elementary tensor with the given per-mode factors.
    RankOne { factors: Vec<Vec<f64>> },
    /// All entries, row-major.
    Values { data: Vec<f64> },
}

fn one() -> usize {
    1
}

impl Default for RhsSpec {
    fn default() -> Self {
        RhsSpec::RandomRankOne { terms: 1, chunk: None }
    }
}

impl RhsSpec {
    pub fn build(&self, dims: &[usize], seed: u64) -> Result<RhsTensor> {
        match self {
            RhsSpec::RandomRankOne { terms, .. } => {
                if *terms == 0 {
                    return Err(Error::Config("rhs needs at least one term".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                RhsTensor::random_rank_one_sum(dims, *terms, &mut rng)
            }
            RhsSpec::RankOne { factors } => {
                let x = Tensor::rank_one(factors)?;
                x.check_dims(dims)?;
                let mut b = RhsTensor::new(x.clone());
                b.summands.push(x);
                Ok(b)
            }
            RhsSpec::Values { data } => Ok(RhsTensor::new(Tensor::new(dims.to_vec(), data.clone())?)),
        }
    }

    pub fn chunk(&self) -> Option<usize> {
        match self {
            RhsSpec::RandomRankOne { chunk, .. } => *chunk,
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    /// `u_0 = 0` (linear runs).
    Zero,
    /// Random admissible rank-one start (eigen runs).
    Random,
    /// Rescaled leading rank-one term of the eigenvector across the first splitting.
    Leading,
    /// The fixed point itself.
    Solution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SplittingSpec {
    /// `"tt"`: all splittings `{1}, {1,2}, …, {1,…,d−1}`.
    Named(String),
    /// 1-based mode lists.
    Lists(Vec<Vec<usize>>),
}

impl Default for SplittingSpec {
    fn default() -> Self {
        SplittingSpec::Named("tt".into())
    }
}

impl SplittingSpec {
    pub fn resolve(&self, order: usize) -> Result<Vec<Splitting>> {
        match self {
            SplittingSpec::Named(name) if name == "tt" => {
                if order < 2 {
                    return Err(Error::Config("splittings need order >= 2".into()));
                }
                Ok(Splitting::tt_family(order))
            }
            SplittingSpec::Named(name) => Err(Error::Config(format!("unknown splitting family {name:?}"))),
            SplittingSpec::Lists(lists) => {
                if lists.is_empty() {
                    return Err(Error::Config("no splittings listed".into()));
                }
                lists
                    .iter()
                    .map(|modes| Splitting::from_one_based(order, modes))
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub prefix: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub d_list: Vec<usize>,
    /// Mode size used for every `d`.
    #[serde(default = "two")]
    pub n: usize,
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStepSpec {
    #[serde(default = "fifty")]
    pub instances: usize,
    #[serde(default = "one")]
    pub samples: usize,
    #[serde(default = "five")]
    pub n: usize,
}

fn fifty() -> usize {
    50
}

fn five() -> usize {
    5
}

impl Default for TwoStepSpec {
    fn default() -> Self {
        TwoStepSpec {
            instances: 50,
            samples: 1,
            n: 5,
        }
    }
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_eps() -> f64 {
    DEFAULT_EPS_RANK
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Experiment kind; the CLI subcommand fills it in when absent.
    #[serde(default)]
    pub mode: Option<Mode>,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub rhs: RhsSpec,
    #[serde(default)]
    pub start: Option<StartSpec>,
    #[serde(default)]
    pub splittings: SplittingSpec,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_eps")]
    pub eps_rank: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub two_step: Option<TwoStepSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = ExperimentConfig::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode
            .ok_or_else(|| Error::Config("experiment mode not set".into()))
    }

    pub fn name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.mode.map(Mode::name).unwrap_or("experiment").to_string())
    }

    pub fn prefix(&self) -> String {
        self.output.prefix.clone().unwrap_or_else(|| self.name())
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.problem.params(self.seed)
    }

    pub fn resolve_splittings(&self) -> Result<Vec<Splitting>> {
        self.splittings.resolve(self.problem.dims.len())
    }

    /// Checks everything that does not require building the operator.
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_rank > 0.0 && self.eps_rank < 1.0) {
            return Err(Error::Domain(format!("eps_rank {} must lie in (0, 1)", self.eps_rank)));
        }
        Tensor::zeros(&self.problem.dims)?;
        self.resolve_splittings()?;
        self.params()?;
        if let Some(0) = self.rhs.chunk() {
            return Err(Error::Config("rhs chunk must be positive".into()));
        }
        match self.mode {
            Some(Mode::DSweep) => {
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| Error::Config("d_sweep needs a \"sweep\" section".into()))?;
                if sweep.d_list.iter().any(|&d| d < 2) || sweep.d_list.is_empty() {
                    return Err(Error::Config("sweep d_list entries must be >= 2".into()));
                }
            }
            Some(Mode::TwoStep) => {
                let spec = self.two_step.clone().unwrap_or_default();
                if spec.instances == 0 || spec.samples == 0 || spec.n < 2 {
                    return Err(Error::Config("two_step needs instances, samples >= 1 and n >= 2".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}
