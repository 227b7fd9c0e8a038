//! Dense order-d tensors over `f64`, mode splittings, and the singular-value
//! diagnostics of their unfoldings.
//!
//! Entries are stored row-major over modes `0..d`: the last mode varies
//! fastest. The same linearization is used for unfoldings (ascending mode
//! order within `t` for rows and within the complement for columns) and for
//! dense operator assembly, so every oracle in this crate agrees on indexing.

mod splitting;
mod spectrum;
pub mod svd;

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use splitting::Splitting;
pub use spectrum::{
    leading_term, overlap_theta, refold, singular_spectrum, t_rank, tail_error, truncate,
    tt_aggregate_error, unfold, von_neumann_entropy, Entropy, SingularSpectrum,
    DEFAULT_EPS_RANK,
};

/// A dense real tensor with per-mode dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidDims("order must be at least 1".into()));
    }
    if let Some(mu) = dims.iter().position(|&n| n == 0) {
        return Err(Error::InvalidDims(format!("mode {} has dimension 0", mu + 1)));
    }
    dims.iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::InvalidDims(format!("{dims:?} overflows usize")))
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if data.len() != len {
            return Err(Error::InvalidDims(format!(
                "data length {} does not match dims {:?} (expected {len})",
                data.len(),
                dims
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = checked_len(dims)?;
        Ok(Tensor {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Tensor::zeros(dims)?;
        let mut idx = vec![0usize; dims.len()];
        for value in t.data.iter_mut() {
            *value = f(&idx);
            increment(&mut idx, dims);
        }
        Ok(t)
    }

    /// Elementary tensor `x_1 ⊗ x_2 ⊗ … ⊗ x_d`.
    pub fn rank_one<V: AsRef<[f64]>>(factors: &[V]) -> Result<Self> {
        let dims: Vec<usize> = factors.iter().map(|f| f.as_ref().len()).collect();
        checked_len(&dims)?;
        let mut data = vec![1.0];
        for factor in factors {
            let factor = factor.as_ref();
            let mut next = Vec::with_capacity(data.len() * factor.len());
            for &a in &data {
                next.extend(factor.iter().map(|&b| a * b));
            }
            data = next;
        }
        Ok(Tensor { dims, data })
    }

    /// Entries drawn i.i.d. from the standard normal distribution.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let len = checked_len(dims)?;
        let data = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        Ok(Tensor {
            dims: dims.to_vec(),
            data,
        })
    }

    /// Elementary tensor with standard normal factors.
    pub fn random_rank_one<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        checked_len(dims)?;
        let factors: Vec<Vec<f64>> = dims
            .iter()
            .map(|&n| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        Tensor::rank_one(&factors)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        strides(&self.dims)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.dims.len());
        let offset: usize = idx
            .iter()
            .zip(self.strides())
            .map(|(&i, s)| i * s)
            .sum();
        self.data[offset]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Tensor) -> f64 {
        debug_assert_eq!(self.dims, other.dims);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if self.dims == dims {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: dims.to_vec(),
                found: self.dims.clone(),
            })
        }
    }

    pub fn scaled(&self, alpha: f64) -> Tensor {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|x| alpha * x).collect(),
        }
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: f64, x: &Tensor) {
        debug_assert_eq!(self.dims, x.dims);
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }

    /// Applies `m` along `mode`: `out[.., i, ..] = Σ_j m[i, j] self[.., j, ..]`.
    pub fn mode_product(&self, mode: usize, m: &DMatrix<f64>) -> Tensor {
        let n = self.dims[mode];
        debug_assert_eq!(m.shape(), (n, n));
        let left: usize = self.dims[..mode].iter().product();
        let right: usize = self.dims[mode + 1..].iter().product();
        let mut out = vec![0.0; self.data.len()];
        for l in 0..left {
            let base = l * n * right;
            for i in 0..n {
                let dst = &mut out[base + i * right..base + (i + 1) * right];
                for j in 0..n {
                    let a = m[(i, j)];
                    if a == 0.0 {
                        continue;
                    }
                    let src = &self.data[base + j * right..base + (j + 1) * right];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += a * s;
                    }
                }
            }
        }
        Tensor {
            dims: self.dims.clone(),
            data: out,
        }
    }
}

impl Add<&Tensor> for &Tensor {
    type Output = Tensor;

    fn add(self, rhs: &Tensor) -> Tensor {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub<&Tensor> for &Tensor {
    type Output = Tensor;

    fn sub(self, rhs: &Tensor) -> Tensor {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &Tensor {
    type Output = Tensor;

    fn mul(self, rhs: f64) -> Tensor {
        self.scaled(rhs)
    }
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for mu in (0..dims.len().saturating_sub(1)).rev() {
        s[mu] = s[mu + 1] * dims[mu + 1];
    }
    s
}

/// Row-major odometer increment; wraps to all zeros after the last index.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for mu in (0..dims.len()).rev() {
        idx[mu] += 1;
        if idx[mu] < dims[mu] {
            return;
        }
        idx[mu] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_dims() {
        assert!(Tensor::zeros(&[]).is_err());
        assert!(Tensor::zeros(&[2, 0]).is_err());
        assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn rank_one_layout_is_row_major() {
        let t = Tensor::rank_one(&[vec![1.0, 2.0], vec![1.0, 10.0, 100.0]]).unwrap();
        assert_eq!(t.data(), &[1.0, 10.0, 100.0, 2.0, 20.0, 200.0]);
        assert_eq!(t.get(&[1, 2]), 200.0);
    }

    #[test]
    fn mode_product_matches_index_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Tensor::random(&[2, 3, 4], &mut rng).unwrap();
        let m = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let y = x.mode_product(1, &m);
        let expect = Tensor::from_fn(&[2, 3, 4], |idx| {
            (0..3).map(|j| m[(idx[1], j)] * x.get(&[idx[0], j, idx[2]])).sum()
        })
        .unwrap();
        for (a, b) in y.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn odometer_covers_all_indices() {
        let dims = [2, 1, 3];
        let mut idx = vec![0; 3];
        let mut seen = Vec::new();
        for _ in 0..6 {
            seen.push(idx.clone());
            increment(&mut idx, &dims);
        }
        assert_eq!(idx, vec![0, 0, 0]);
        assert_eq!(seen[5], vec![1, 0, 2]);
    }
}
