//! Fixtures shared by the criterion benches in `benches/`.

use lowrank_core::kron::{build_model, KronSumOperator, ModelKind, ModelParams, RhsTensor};
use lowrank_core::Tensor;

/// `laplace_plus_nn` on `[n; d]` with a fixed seed.
pub fn laplace_nn(d: usize, n: usize) -> KronSumOperator {
    let mut p = ModelParams::new(vec![n; d]);
    p.seed = 42;
    build_model(ModelKind::LaplacePlusNn, &p).expect("valid model parameters")
}

/// Deterministic dense tensor with entries in `[-1, 1)`.
pub fn ramp(dims: &[usize]) -> Tensor {
    let len: usize = dims.iter().product();
    let data = (0..len).map(|i| ((i * 7919) % 1000) as f64 / 500.0 - 1.0).collect();
    Tensor::new(dims.to_vec(), data).expect("consistent length")
}

pub fn rank_one_rhs(dims: &[usize]) -> RhsTensor {
    let factors: Vec<Vec<f64>> = dims.iter().map(|&n| (0..n).map(|i| 1.0 + i as f64).collect()).collect();
    RhsTensor::new(Tensor::rank_one(&factors).expect("nonempty factors"))
}
