//! Sums of elementary Kronecker products `Σ_i A_i^(1) ⊗ … ⊗ A_i^(d)`.
//!
//! Terms are stored fully factored per mode; the split form
//! `Σ A_i^(t) ⊗ A_i^(t^c)` for a particular splitting is derived on demand
//! by the rank routines in [`rank`].

mod models;
pub mod rank;
mod spectral;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Splitting, Tensor};

pub(crate) use models::matrix_from_rows;
pub use models::{build_model, load_matrix_csv, random_psd, random_symmetric, ModelKind, ModelParams};
pub use rank::{operator_t_rank, reshuffled_t_rank, split_structure, SplitStructure};
pub use spectral::{power_extremes, spectral_interval, SpectralInterval, SpectralSource};

/// Dense assembly and dense eigen/solve oracles refuse operators above this size.
pub const DENSE_LIMIT: usize = 4096;

const SYMMETRY_SAMPLES: usize = 20;
const SYMMETRY_TOL: f64 = 1e-10;

/// One term `A^(1) ⊗ … ⊗ A^(d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryOp {
    factors: Vec<DMatrix<f64>>,
    identity: Vec<bool>,
}

impl ElementaryOp {
    /// Identity flags are set on exactly those factors equal to `I`.
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidDims("elementary operator with no factors".into()));
        }
        for (mu, f) in factors.iter().enumerate() {
            if !f.is_square() || f.nrows() == 0 {
                return Err(Error::Construction(format!(
                    "factor {} has shape {}x{}",
                    mu + 1,
                    f.nrows(),
                    f.ncols()
                )));
            }
        }
        let identity = factors
            .iter()
            .map(|f| *f == DMatrix::identity(f.nrows(), f.ncols()))
            .collect();
        Ok(ElementaryOp { factors, identity })
    }

    /// `I ⊗ … ⊗ m ⊗ … ⊗ I` with `m` in position `mode`.
    pub fn single(dims: &[usize], mode: usize, m: DMatrix<f64>) -> Result<Self> {
        let factors = dims
            .iter()
            .enumerate()
            .map(|(mu, &n)| if mu == mode { m.clone() } else { DMatrix::identity(n, n) })
            .collect();
        ElementaryOp::new(factors)
    }

    /// Two adjacent non-identity factors, identity elsewhere.
    pub fn pair(dims: &[usize], mode: usize, left: DMatrix<f64>, right: DMatrix<f64>) -> Result<Self> {
        let factors = dims
            .iter()
            .enumerate()
            .map(|(mu, &n)| {
                if mu == mode {
                    left.clone()
                } else if mu == mode + 1 {
                    right.clone()
                } else {
                    DMatrix::identity(n, n)
                }
            })
            .collect();
        ElementaryOp::new(factors)
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn identity_flags(&self) -> &[bool] {
        &self.identity
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn apply(&self, u: &Tensor) -> Tensor {
        let mut out = u.clone();
        for (mu, f) in self.factors.iter().enumerate() {
            if !self.identity[mu] {
                out = out.mode_product(mu, f);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBounds {
    pub gamma: f64,
    pub big_gamma: f64,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KronSumOperator {
    dims: Vec<usize>,
    terms: Vec<ElementaryOp>,
    symmetric: bool,
    analytic_bounds: Option<AnalyticBounds>,
}

impl KronSumOperator {
    pub fn new(dims: Vec<usize>, terms: Vec<ElementaryOp>) -> Result<Self> {
        Tensor::zeros(&dims)?;
        for term in &terms {
            let td = term.dims();
            if td != dims {
                return Err(Error::ShapeMismatch {
                    expected: dims,
                    found: td,
                });
            }
        }
        Ok(KronSumOperator {
            dims,
            terms,
            symmetric: false,
            analytic_bounds: None,
        })
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        let factors = dims.iter().map(|&n| DMatrix::identity(n, n)).collect();
        KronSumOperator::new(dims.to_vec(), vec![ElementaryOp::new(factors)?])
    }

    /// Marks the operator symmetric after checking `⟨Av, w⟩ = ⟨v, Aw⟩` on
    /// random pairs drawn from `seed`.
    pub fn declare_symmetric(mut self, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SYMMETRY_SAMPLES {
            let v = Tensor::random(&self.dims, &mut rng)?;
            let w = Tensor::random(&self.dims, &mut rng)?;
            let av = self.apply(&v)?;
            let aw = self.apply(&w)?;
            let lhs = av.dot(&w);
            let rhs = v.dot(&aw);
            let scale = av.norm() * w.norm() + v.norm() * aw.norm();
            if (lhs - rhs).abs() > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Construction(format!(
                    "operator declared symmetric but <Av,w> = {lhs:e}, <v,Aw> = {rhs:e}"
                )));
            }
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn with_analytic_bounds(mut self, bounds: AnalyticBounds) -> Self {
        self.analytic_bounds = Some(bounds);
        self
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn terms(&self) -> &[ElementaryOp] {
        &self.terms
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn analytic_bounds(&self) -> Option<&AnalyticBounds> {
        self.analytic_bounds.as_ref()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Matrix-free action, one mode product per non-identity factor.
    pub fn apply(&self, u: &Tensor) -> Result<Tensor> {
        u.check_dims(&self.dims)?;
        let mut out = Tensor::zeros(&self.dims)?;
        for term in &self.terms {
            out.axpy(1.0, &term.apply(u));
        }
        Ok(out)
    }

    /// Dense matrix under the row-major linearization.
    pub fn assemble_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.total_dim();
        if n > DENSE_LIMIT {
            return Err(Error::Capacity {
                what: "dense assembly",
                requested: n,
                limit: DENSE_LIMIT,
            });
        }
        let mut out = DMatrix::zeros(n, n);
        for term in &self.terms {
            let mut k = DMatrix::from_element(1, 1, 1.0);
            for f in term.factors() {
                k = k.kronecker(f);
            }
            out += k;
        }
        Ok(out)
    }
}

/// Right-hand side with optional known structure.
#[derive(Clone, Debug, PartialEq)]
pub struct RhsTensor {
    pub tensor: Tensor,
    /// Rank-one summands when `b` was built as such a sum.
    pub summands: Vec<Tensor>,
    declared_ranks: BTreeMap<Splitting, usize>,
}

impl RhsTensor {
    pub fn new(tensor: Tensor) -> Self {
        RhsTensor {
            tensor,
            summands: Vec::new(),
            declared_ranks: BTreeMap::new(),
        }
    }

    /// Sum of `terms` random elementary tensors, each normalized to unit norm.
    pub fn random_rank_one_sum<R: Rng + ?Sized>(dims: &[usize], terms: usize, rng: &mut R) -> Result<Self> {
        let mut sum = Tensor::zeros(dims)?;
        let mut summands = Vec::with_capacity(terms);
        for _ in 0..terms {
            let x = Tensor::random_rank_one(dims, rng)?;
            let x = x.scaled(1.0 / x.norm());
            sum.axpy(1.0, &x);
            summands.push(x);
        }
        Ok(RhsTensor {
            tensor: sum,
            summands,
            declared_ranks: BTreeMap::new(),
        })
    }

    pub fn declare_rank(&mut self, t: Splitting, rank: usize) {
        self.declared_ranks.insert(t, rank);
    }

    /// Declared rank if present, otherwise the measured numerical rank.
    pub fn rank(&self, t: &Splitting, eps_rank: f64) -> Result<usize> {
        match self.declared_ranks.get(t) {
            Some(&r) => Ok(r),
            None => crate::tensor::t_rank(&self.tensor, t, eps_rank),
        }
    }

    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        self.tensor.check_dims(dims)
    }
}
