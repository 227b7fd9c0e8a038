#![allow(dead_code)]

use lowrank_core::kron::KronSumOperator;
use lowrank_core::tensor::{Splitting, Tensor};
use nalgebra::DMatrix;

/// Unfolding built entry by entry from multi-indices: row index runs over the
/// `t`-modes, column index over the rest, last mode fastest in both.
pub fn unfold_by_loops(u: &Tensor, t: &Splitting) -> DMatrix<f64> {
    let dims = u.dims();
    let rows: Vec<usize> = t.modes().to_vec();
    let cols: Vec<usize> = t.complement();
    let nr: usize = rows.iter().map(|&m| dims[m]).product();
    let nc: usize = cols.iter().map(|&m| dims[m]).product();
    let mut out = DMatrix::zeros(nr, nc);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..u.len() {
        let r = rows.iter().fold(0, |acc, &m| acc * dims[m] + idx[m]);
        let c = cols.iter().fold(0, |acc, &m| acc * dims[m] + idx[m]);
        out[(r, c)] = u.get(&idx);
        for m in (0..dims.len()).rev() {
            idx[m] += 1;
            if idx[m] < dims[m] {
                break;
            }
            idx[m] = 0;
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations,
/// sorted nonincreasing.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * a.norm() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Singular values as the nonnegative eigenvalues of `[[0, M], [Mᵀ, 0]]`.
pub fn augmented_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut aug = DMatrix::zeros(r + c, r + c);
    aug.view_mut((0, r), (r, c)).copy_from(m);
    aug.view_mut((r, 0), (c, r)).copy_from(&m.transpose());
    let ev = jacobi_eigenvalues(&aug);
    ev[..r.min(c)].iter().map(|&x| x.max(0.0)).collect()
}

/// `Σ_k F_k¹ ⊗ … ⊗ F_k^d` assembled with `kronecker`, independent of the
/// operator's own dense assembly.
pub fn dense_by_kronecker(op: &KronSumOperator) -> DMatrix<f64> {
    let n = op.total_dim();
    let mut out = DMatrix::zeros(n, n);
    for term in op.terms() {
        let mut acc = DMatrix::from_element(1, 1, 1.0);
        for f in term.factors() {
            acc = acc.kronecker(f);
        }
        out += acc;
    }
    out
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
