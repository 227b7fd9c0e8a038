use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::svd::{jacobi_svd, Svd};
use super::{increment, strides, Splitting, Tensor};
use crate::error::{Error, Result};

/// Relative threshold (against `σ_1`) below which a singular value counts as zero.
pub const DEFAULT_EPS_RANK: f64 = 1e-10;

/// Nonincreasing singular values of a `t`-unfolding, padded to `D^(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    pub splitting: Splitting,
    /// `‖u‖` computed from the entries, not from the spectrum.
    pub norm: f64,
}

impl SingularSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `σ_k` for 1-based `k`; zero past the end.
    pub fn sigma(&self, k: usize) -> f64 {
        assert!(k >= 1, "singular values are 1-indexed");
        self.values.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn rank(&self, eps_rank: f64) -> usize {
        let Some(&s1) = self.values.first() else {
            return 0;
        };
        if s1 == 0.0 {
            return 0;
        }
        self.values.iter().filter(|&&s| s > eps_rank * s1).count()
    }

    /// `τ_r = (Σ_{k>r} σ_k²)^{1/2}`, summed smallest-first.
    pub fn tail(&self, r: usize) -> f64 {
        if r >= self.values.len() {
            return 0.0;
        }
        self.values[r..]
            .iter()
            .rev()
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }

    /// `τ_0, τ_1, …, τ_D`.
    pub fn tails(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0; self.values.len() + 1];
        for (k, s) in self.values.iter().enumerate().rev() {
            acc += s * s;
            out[k] = acc.sqrt();
        }
        out
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().rev().map(|s| s * s).sum()
    }
}

/// Shannon-type entropy of the normalized squared spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entropy {
    /// `Σ σ̂² ln σ̂²` (nonpositive).
    pub signed: f64,
    /// `-Σ σ̂² ln σ̂²` (nonnegative).
    pub conventional: f64,
}

impl Entropy {
    pub fn from_normalized_squares(squares: impl IntoIterator<Item = f64>) -> Entropy {
        let signed: f64 = squares
            .into_iter()
            .filter(|&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum();
        Entropy {
            signed,
            conventional: -signed,
        }
    }
}

fn row_col_strides(dims: &[usize], t: &Splitting) -> (Vec<usize>, Vec<usize>) {
    // per mode: contribution to row index (0 for complement modes) and to column index
    let rows: Vec<usize> = t.modes().iter().map(|&m| dims[m]).collect();
    let comp = t.complement();
    let cols: Vec<usize> = comp.iter().map(|&m| dims[m]).collect();
    let rs = strides(&rows);
    let cs = strides(&cols);
    let mut row_stride = vec![0usize; dims.len()];
    let mut col_stride = vec![0usize; dims.len()];
    for (k, &m) in t.modes().iter().enumerate() {
        row_stride[m] = rs[k];
    }
    for (k, &m) in comp.iter().enumerate() {
        col_stride[m] = cs[k];
    }
    (row_stride, col_stride)
}

/// Matricization with the `t`-modes as rows.
pub fn unfold(u: &Tensor, t: &Splitting) -> Result<DMatrix<f64>> {
    t.check_order(u.order())?;
    let dims = u.dims();
    let (rs, cs) = row_col_strides(dims, t);
    let mut m = DMatrix::zeros(t.row_dim(dims), t.col_dim(dims));
    let mut idx = vec![0usize; dims.len()];
    for &value in u.data() {
        let row: usize = idx.iter().zip(&rs).map(|(i, s)| i * s).sum();
        let col: usize = idx.iter().zip(&cs).map(|(i, s)| i * s).sum();
        m[(row, col)] = value;
        increment(&mut idx, dims);
    }
    Ok(m)
}

/// Inverse of [`unfold`].
pub fn refold(m: &DMatrix<f64>, dims: &[usize], t: &Splitting) -> Result<Tensor> {
    t.check_order(dims.len())?;
    let expected = (t.row_dim(dims), t.col_dim(dims));
    if m.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected: vec![expected.0, expected.1],
            found: vec![m.nrows(), m.ncols()],
        });
    }
    let (rs, cs) = row_col_strides(dims, t);
    let mut out = Tensor::zeros(dims)?;
    let mut idx = vec![0usize; dims.len()];
    for value in out.data_mut() {
        let row: usize = idx.iter().zip(&rs).map(|(i, s)| i * s).sum();
        let col: usize = idx.iter().zip(&cs).map(|(i, s)| i * s).sum();
        *value = m[(row, col)];
        increment(&mut idx, dims);
    }
    Ok(out)
}

fn svd_of(u: &Tensor, t: &Splitting) -> Result<Svd> {
    jacobi_svd(&unfold(u, t)?)
}

pub fn singular_spectrum(u: &Tensor, t: &Splitting) -> Result<SingularSpectrum> {
    let svd = svd_of(u, t)?;
    debug_assert_eq!(svd.values.len(), t.max_rank(u.dims()));
    Ok(SingularSpectrum {
        values: svd.values,
        splitting: t.clone(),
        norm: u.norm(),
    })
}

fn check_eps(eps_rank: f64) -> Result<()> {
    if eps_rank > 0.0 && eps_rank < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps_rank {eps_rank} not in (0, 1)")))
    }
}

/// Numerical `t`-rank: the count of `σ_k > eps_rank · σ_1`.
pub fn t_rank(u: &Tensor, t: &Splitting, eps_rank: f64) -> Result<usize> {
    check_eps(eps_rank)?;
    Ok(singular_spectrum(u, t)?.rank(eps_rank))
}

/// Best `t`-rank-`r` approximation error `τ_r^(t)(u)`.
pub fn tail_error(u: &Tensor, t: &Splitting, r: usize) -> Result<f64> {
    if r == 0 {
        t.check_order(u.order())?;
        return Ok(u.norm());
    }
    Ok(singular_spectrum(u, t)?.tail(r))
}

/// Best `t`-rank-`r` approximation via the truncated SVD.
pub fn truncate(u: &Tensor, t: &Splitting, r: usize) -> Result<Tensor> {
    if r >= t.max_rank(u.dims()) {
        t.check_order(u.order())?;
        return Ok(u.clone());
    }
    let svd = svd_of(u, t)?;
    refold(&svd.reconstruct(r), u.dims(), t)
}

/// Unit-norm `t`-rank-one tensor built from the leading singular pair.
pub fn leading_term(u: &Tensor, t: &Splitting) -> Result<Tensor> {
    let svd = svd_of(u, t)?;
    if svd.values.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(Error::Domain("leading term of the zero tensor".into()));
    }
    let m = svd.u.column(0) * svd.v.column(0).transpose();
    refold(&m, u.dims(), t)
}

pub fn von_neumann_entropy(u: &Tensor, t: &Splitting) -> Result<Entropy> {
    let spec = singular_spectrum(u, t)?;
    if spec.norm == 0.0 {
        return Err(Error::Domain("entropy of the zero tensor".into()));
    }
    let n2 = spec.norm * spec.norm;
    Ok(Entropy::from_normalized_squares(
        spec.values.iter().map(|s| s * s / n2),
    ))
}

/// Largest overlap of `u/‖u‖` with unit `t`-rank-one tensors, `σ_1/‖u‖`.
pub fn overlap_theta(u: &Tensor, t: &Splitting) -> Result<f64> {
    let spec = singular_spectrum(u, t)?;
    if spec.norm == 0.0 {
        return Err(Error::Domain("overlap of the zero tensor".into()));
    }
    Ok((spec.values[0] / spec.norm).min(1.0))
}

/// Quasi-optimal tensor-train error `(Σ_μ τ^{1..μ}_{r_μ}(u)²)^{1/2}`.
pub fn tt_aggregate_error(u: &Tensor, ranks: &[usize]) -> Result<f64> {
    let d = u.order();
    if d < 2 {
        return Err(Error::InvalidDims("tensor-train error needs order >= 2".into()));
    }
    if ranks.len() != d - 1 {
        return Err(Error::ShapeMismatch {
            expected: vec![d - 1],
            found: vec![ranks.len()],
        });
    }
    let mut acc = 0.0;
    for (t, &r) in Splitting::tt_family(d).iter().zip(ranks) {
        let tau = tail_error(u, t, r)?;
        acc += tau * tau;
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn unfold_outer_product() {
        let u = Tensor::rank_one(&[e(2, 0), e(2, 1)]).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        let m = unfold(&u, &t).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn unfold_rejects_wrong_order() {
        let u = Tensor::zeros(&[2, 2, 2]).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        assert!(unfold(&u, &t).is_err());
    }

    #[test]
    fn bell_state_spectrum() {
        let s = 0.5f64.sqrt();
        let u = Tensor::new(vec![2, 2], vec![s, 0.0, 0.0, s]).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        let spec = singular_spectrum(&u, &t).unwrap();
        for v in &spec.values {
            assert!((v - s).abs() < 1e-15);
        }
        assert!((overlap_theta(&u, &t).unwrap() - s).abs() < 1e-15);
        let h = von_neumann_entropy(&u, &t).unwrap();
        assert!((h.conventional - 2f64.ln()).abs() < 1e-15);
        assert_eq!(h.signed, -h.conventional);
    }

    #[test]
    fn rank_one_diagnostics() {
        let u = Tensor::rank_one(&[vec![1.0, 2.0], vec![3.0, 0.0, 1.0]]).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        assert_eq!(t_rank(&u, &t, 1e-10).unwrap(), 1);
        assert!((overlap_theta(&u, &t).unwrap() - 1.0).abs() < 1e-15);
        let h = von_neumann_entropy(&u, &t).unwrap();
        assert!(h.conventional.abs() < 1e-14);
        let tr = truncate(&u, &t, 1).unwrap();
        assert!((&tr - &u).norm() < 1e-14);
    }

    #[test]
    fn zero_tensor_edge_cases() {
        let u = Tensor::zeros(&[3, 3]).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        assert_eq!(t_rank(&u, &t, 1e-10).unwrap(), 0);
        assert!(matches!(von_neumann_entropy(&u, &t), Err(Error::Domain(_))));
        assert!(matches!(overlap_theta(&u, &t), Err(Error::Domain(_))));
        assert!(matches!(leading_term(&u, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn eps_rank_domain() {
        let u = Tensor::zeros(&[2, 2]).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        assert!(t_rank(&u, &t, 0.0).is_err());
        assert!(t_rank(&u, &t, 1.0).is_err());
    }

    #[test]
    fn tail_error_cases() {
        let u = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 0.5]).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        assert_eq!(tail_error(&u, &t, 0).unwrap(), u.norm());
        assert_eq!(tail_error(&u, &t, 1).unwrap(), 0.5);
        assert_eq!(tail_error(&u, &t, 2).unwrap(), 0.0);
        assert_eq!(tail_error(&u, &t, 7).unwrap(), 0.0);
    }

    #[test]
    fn truncate_full_rank_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = Tensor::random(&[3, 2, 2], &mut rng).unwrap();
        let t = Splitting::new(3, [1]).unwrap();
        assert_eq!(truncate(&u, &t, 2).unwrap(), u);
        assert_eq!(truncate(&u, &t, 9).unwrap(), u);
    }

    #[test]
    fn tails_vector_matches_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = Tensor::random(&[4, 4], &mut rng).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        let spec = singular_spectrum(&u, &t).unwrap();
        let tails = spec.tails();
        for (r, tail) in tails.iter().enumerate() {
            assert!((tail - spec.tail(r)).abs() < 1e-14);
        }
    }

    #[test]
    fn tt_error_order_two_is_single_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = Tensor::random(&[4, 5], &mut rng).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        assert_eq!(
            tt_aggregate_error(&u, &[2]).unwrap(),
            tail_error(&u, &t, 2).unwrap()
        );
        assert_eq!(tt_aggregate_error(&u, &[4]).unwrap(), 0.0);
        assert!(tt_aggregate_error(&u, &[1, 1]).is_err());
    }
}
