//! One-sided (Hestenes) Jacobi SVD.
//!
//! Rotations are applied in cyclic row order, so results are bit-for-bit
//! reproducible for a given input. Singular values come out nonincreasing;
//! equal values keep the order of the columns that produced them. Columns
//! with norm below `m·ε·‖A‖_F` are left unrotated, so singular values at that
//! level carry an absolute error of the same size.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sweep cap before reporting non-convergence.
pub const MAX_SWEEPS: usize = 100;

/// Thin SVD `a = u * diag(values) * v^T` with `k = min(m, n)` triplets.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub values: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    /// Reassembles the leading `r` triplets.
    pub fn reconstruct(&self, r: usize) -> DMatrix<f64> {
        let r = r.min(self.values.len());
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut out = DMatrix::zeros(m, n);
        for k in 0..r {
            let s = self.values[k];
            if s == 0.0 {
                continue;
            }
            out += (self.u.column(k) * s) * self.v.column(k).transpose();
        }
        out
    }
}

pub fn jacobi_svd(a: &DMatrix<f64>) -> Result<Svd> {
    if a.nrows() >= a.ncols() {
        one_sided(a.clone())
    } else {
        let t = one_sided(a.transpose())?;
        Ok(Svd {
            u: t.v,
            values: t.values,
            v: t.u,
        })
    }
}

/// Singular values only.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(jacobi_svd(a)?.values)
}

// Requires m >= n.
fn one_sided(mut g: DMatrix<f64>) -> Result<Svd> {
    let (m, n) = g.shape();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * (m.max(1) as f64);
    let negligible = (tol * g.norm()).powi(2);

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..m {
                    let (gi, gj) = (g[(k, i)], g[(k, j)]);
                    alpha += gi * gi;
                    beta += gj * gj;
                    gamma += gi * gj;
                }
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut g, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence(MAX_SWEEPS));
    }

    let norms: Vec<f64> = (0..n).map(|k| g.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep column order
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let mut u = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        values.push(s);
        if s > 0.0 {
            u.set_column(dst, &(g.column(src) / s));
        }
        vs.set_column(dst, &v.column(src));
    }
    Ok(Svd { u, values, v: vs })
}

fn rotate_columns(a: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for k in 0..a.nrows() {
        let (ai, aj) = (a[(k, i)], a[(k, j)]);
        a[(k, i)] = c * ai - s * aj;
        a[(k, j)] = s * ai + c * aj;
    }
}
