//! `t`-rank of a Kronecker-sum operator.
//!
//! Viewing `A` as an element of `L(H_t) ⊗ L(H_{t^c})`, its `t`-rank is the
//! rank of `M = X Y^T`, where column `i` of `X` (resp. `Y`) is the vectorized
//! `t`-side (resp. `t^c`-side) Kronecker factor of term `i`. The Gram
//! matrices `X^T X` and `Y^T Y` factor mode by mode into Frobenius inner
//! products of the per-mode factors, so the rank is computed from an
//! `m × m` core without ever forming `X` or `Y`.
//!
//! [`reshuffled_t_rank`] is the brute-force check: assemble `A` densely,
//! rearrange entries into `M` and take its numerical rank.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{KronSumOperator, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::tensor::svd::jacobi_svd;
use crate::tensor::Splitting;

/// Largest term count handled by the Gram route.
pub const GRAM_TERM_LIMIT: usize = 64;

// Gram eigenvalues below this fraction of the largest are treated as exact zeros.
const GRAM_DROP: f64 = 1e-13;
const IDENTITY_SPAN_TOL: f64 = 1e-8;

/// Rank of `A` across a splitting, plus whether `I_t` (resp. `I_{t^c}`)
/// belongs to the `t`-side (resp. `t^c`-side) factor space of a minimal
/// representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitStructure {
    pub rank: usize,
    pub identity_on_t_side: bool,
    pub identity_on_complement_side: bool,
    pub singular_values: Vec<f64>,
}

impl SplitStructure {
    /// One of the minimal-representation factors can be taken as the identity.
    pub fn identity_refinable(&self) -> bool {
        self.identity_on_t_side || self.identity_on_complement_side
    }
}

pub fn operator_t_rank(a: &KronSumOperator, t: &Splitting, eps_rank: f64) -> Result<usize> {
    if a.terms().len() <= GRAM_TERM_LIMIT {
        Ok(split_structure(a, t, eps_rank)?.rank)
    } else if a.total_dim() <= DENSE_LIMIT {
        reshuffled_t_rank(a, t, eps_rank)
    } else {
        Err(Error::Capacity {
            what: "operator t-rank (terms)",
            requested: a.terms().len(),
            limit: GRAM_TERM_LIMIT,
        })
    }
}

struct SideBasis {
    // S with S^T S = Gram, shape k × m
    factor: DMatrix<f64>,
    // Q^T vec(I_side), length k
    identity_coords: DVector<f64>,
    identity_norm_sq: f64,
}

fn side_basis(gram: &DMatrix<f64>, identity_inner: &DVector<f64>, identity_norm_sq: f64) -> SideBasis {
    let m = gram.nrows();
    let eig = SymmetricEigen::new(gram.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..m)
        .filter(|&k| lmax > 0.0 && eig.eigenvalues[k] > GRAM_DROP * lmax)
        .collect();
    let mut factor = DMatrix::zeros(keep.len(), m);
    let mut identity_coords = DVector::zeros(keep.len());
    for (row, &k) in keep.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        let w = eig.eigenvectors.column(k);
        factor.set_row(row, &(w.transpose() * lambda.sqrt()));
        identity_coords[row] = w.dot(identity_inner) / lambda.sqrt();
    }
    SideBasis {
        factor,
        identity_coords,
        identity_norm_sq,
    }
}

/// Gram-route rank and identity-span diagnostics.
pub fn split_structure(a: &KronSumOperator, t: &Splitting, eps_rank: f64) -> Result<SplitStructure> {
    t.check_order(a.order())?;
    let terms = a.terms();
    let m = terms.len();
    if m == 0 {
        return Ok(SplitStructure {
            rank: 0,
            identity_on_t_side: false,
            identity_on_complement_side: false,
            singular_values: Vec::new(),
        });
    }
    if m > GRAM_TERM_LIMIT {
        return Err(Error::Capacity {
            what: "operator t-rank (terms)",
            requested: m,
            limit: GRAM_TERM_LIMIT,
        });
    }

    let mut gram_t = DMatrix::from_element(m, m, 1.0);
    let mut gram_c = DMatrix::from_element(m, m, 1.0);
    let mut id_t = DVector::from_element(m, 1.0);
    let mut id_c = DVector::from_element(m, 1.0);
    let (mut norm_t, mut norm_c) = (1.0, 1.0);
    for (mu, &n) in a.dims().iter().enumerate() {
        let on_t = t.contains(mu);
        let (gram, id, norm) = if on_t {
            (&mut gram_t, &mut id_t, &mut norm_t)
        } else {
            (&mut gram_c, &mut id_c, &mut norm_c)
        };
        *norm *= n as f64;
        for i in 0..m {
            let fi = &terms[i].factors()[mu];
            id[i] *= fi.trace();
            for j in i..m {
                let fj = &terms[j].factors()[mu];
                let ip = fi.dot(fj);
                gram[(i, j)] *= ip;
                if i != j {
                    gram[(j, i)] *= ip;
                }
            }
        }
    }

    let side_t = side_basis(&gram_t, &id_t, norm_t);
    let side_c = side_basis(&gram_c, &id_c, norm_c);
    let core = &side_t.factor * side_c.factor.transpose();
    if core.nrows() == 0 || core.ncols() == 0 {
        return Ok(SplitStructure {
            rank: 0,
            identity_on_t_side: false,
            identity_on_complement_side: false,
            singular_values: Vec::new(),
        });
    }
    let svd = jacobi_svd(&core)?;
    let s1 = svd.values[0];
    let rank = if s1 == 0.0 {
        0
    } else {
        svd.values.iter().filter(|&&s| s > eps_rank * s1).count()
    };

    let in_span = |basis: &DMatrix<f64>, side: &SideBasis| {
        if rank == 0 || side.identity_coords.is_empty() {
            return false;
        }
        let lead = basis.columns(0, rank);
        let proj = lead.transpose() * &side.identity_coords;
        proj.norm_squared() >= (1.0 - IDENTITY_SPAN_TOL) * side.identity_norm_sq
    };
    Ok(SplitStructure {
        rank,
        identity_on_t_side: in_span(&svd.u, &side_t),
        identity_on_complement_side: in_span(&svd.v, &side_c),
        singular_values: svd.values,
    })
}

/// Rank of the rearranged dense matrix `M[(i_t, j_t), (i_c, j_c)] = A[i, j]`.
pub fn reshuffled_t_rank(a: &KronSumOperator, t: &Splitting, eps_rank: f64) -> Result<usize> {
    t.check_order(a.order())?;
    let dense = a.assemble_dense()?;
    let dims = a.dims();
    let nt = t.row_dim(dims);
    let nc = t.col_dim(dims);
    let n = nt * nc;

    // split every linear index into its (t, t^c) parts
    let unfold = crate::tensor::unfold(
        &crate::tensor::Tensor::new(dims.to_vec(), (0..n).map(|i| i as f64).collect())?,
        t,
    )?;
    let mut parts = vec![(0usize, 0usize); n];
    for r in 0..nt {
        for c in 0..nc {
            parts[unfold[(r, c)] as usize] = (r, c);
        }
    }

    let mut m = DMatrix::zeros(nt * nt, nc * nc);
    for i in 0..n {
        let (it, ic) = parts[i];
        for j in 0..n {
            let (jt, jc) = parts[j];
            m[(it * nt + jt, ic * nc + jc)] = dense[(i, j)];
        }
    }
    let values = jacobi_svd(&m)?.values;
    let s1 = values.first().copied().unwrap_or(0.0);
    if s1 == 0.0 {
        return Ok(0);
    }
    Ok(values.iter().filter(|&&s| s > eps_rank * s1).count())
}
