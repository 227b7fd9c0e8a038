//! Richardson iteration `u_{n+1} = u_n − α(A u_n − b)` for symmetric positive
//! definite Kronecker-sum systems, with exact rank bookkeeping.
//!
//! Iterates are kept dense and untruncated. [`richardson_run_truncated`] is
//! the exception: it rounds every iterate and exists for problems where the
//! exact run is too large to be interesting.

use nalgebra::{Cholesky, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bounds::contraction_rate;
use crate::error::{Error, Result};
use crate::kron::{spectral_interval, KronSumOperator, RhsTensor, SpectralInterval, DENSE_LIMIT};
use crate::tensor::{t_rank, tail_error, truncate, Splitting, Tensor};
use crate::trace::{check_iterate_capacity, IterationTrace, RankGrowth, TraceStep};

/// Relative residual accepted from [`dense_solve`].
pub const SOLVE_TOL: f64 = 1e-12;
const CG_TOL: f64 = 1e-14;

/// Spectral data fixing the damping `α = 2/(γ+Γ)` and contraction `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub gamma: f64,
    pub big_gamma: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub q: f64,
}

impl SpectralData {
    pub fn new(gamma: f64, big_gamma: f64) -> Result<SpectralData> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::NotSpd(gamma));
        }
        if !(big_gamma >= gamma) || !big_gamma.is_finite() {
            return Err(Error::Domain(format!("Gamma = {big_gamma} below gamma = {gamma}")));
        }
        let kappa = big_gamma / gamma;
        Ok(SpectralData {
            gamma,
            big_gamma,
            kappa,
            alpha: 2.0 / (gamma + big_gamma),
            q: contraction_rate(kappa)?,
        })
    }

    pub fn from_interval(s: &SpectralInterval) -> Result<SpectralData> {
        SpectralData::new(s.gamma, s.big_gamma)
    }
}

/// Solves `A u = b` to relative residual [`SOLVE_TOL`]: Cholesky with one
/// refinement step under [`DENSE_LIMIT`], conjugate gradients above it.
pub fn dense_solve(a: &KronSumOperator, b: &RhsTensor) -> Result<Tensor> {
    b.check_dims(a.dims())?;
    if !a.is_symmetric() {
        return Err(Error::Domain("dense solve requires a symmetric operator".into()));
    }
    let rhs = &b.tensor;
    let nb = rhs.norm();
    if nb == 0.0 {
        return Tensor::zeros(a.dims());
    }
    let u = if a.total_dim() <= DENSE_LIMIT {
        cholesky_solve(a, rhs)?
    } else {
        conjugate_gradient(a, rhs)?
    };
    let res = (&a.apply(&u)? - rhs).norm();
    if res > SOLVE_TOL * nb {
        return Err(Error::Numerical(format!(
            "relative residual {:e} above {SOLVE_TOL:e}",
            res / nb
        )));
    }
    Ok(u)
}

fn cholesky_solve(a: &KronSumOperator, rhs: &Tensor) -> Result<Tensor> {
    let m = a.assemble_dense()?;
    let chol = match Cholesky::new(m.clone()) {
        Some(c) => c,
        None => {
            let lo = SymmetricEigen::new(m).eigenvalues.min();
            return Err(Error::NotSpd(lo));
        }
    };
    let b = DVector::from_column_slice(rhs.data());
    let mut x = chol.solve(&b);
    let r = &b - &m * &x;
    x += chol.solve(&r);
    Tensor::new(a.dims().to_vec(), x.as_slice().to_vec())
}

fn conjugate_gradient(a: &KronSumOperator, b: &Tensor) -> Result<Tensor> {
    let nb = b.norm();
    let max_iter = 10 * a.total_dim();
    let mut x = Tensor::zeros(a.dims())?;
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    for _ in 0..max_iter {
        if rr.sqrt() <= CG_TOL * nb {
            return Ok(x);
        }
        let ap = a.apply(&p)?;
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::NotSpd(pap / p.dot(&p)));
        }
        let step = rr / pap;
        x.axpy(step, &p);
        r.axpy(-step, &ap);
        let rr_next = r.dot(&r);
        p = p.scaled(rr_next / rr);
        p.axpy(1.0, &r);
        rr = rr_next;
    }
    if rr.sqrt() <= SOLVE_TOL * nb {
        Ok(x)
    } else {
        Err(Error::Numerical(format!(
            "conjugate gradients stalled at relative residual {:e}",
            rr.sqrt() / nb
        )))
    }
}

/// An SPD system together with its certified spectral data and reference solution.
#[derive(Clone, Debug)]
pub struct LinearProblem<'a> {
    pub operator: &'a KronSumOperator,
    pub rhs: &'a RhsTensor,
    pub interval: SpectralInterval,
    pub spectral: SpectralData,
    pub solution: Tensor,
}

impl<'a> LinearProblem<'a> {
    pub fn new(operator: &'a KronSumOperator, rhs: &'a RhsTensor) -> Result<LinearProblem<'a>> {
        rhs.check_dims(operator.dims())?;
        let interval = spectral_interval(operator)?;
        let spectral = SpectralData::from_interval(&interval)?;
        let solution = dense_solve(operator, rhs)?;
        Ok(LinearProblem {
            operator,
            rhs,
            interval,
            spectral,
            solution,
        })
    }

    /// One Richardson step.
    pub fn step(&self, u: &Tensor) -> Result<Tensor> {
        let mut r = self.operator.apply(u)?;
        r.axpy(-1.0, &self.rhs.tensor);
        let mut next = u.clone();
        next.axpy(-self.spectral.alpha, &r);
        Ok(next)
    }

    pub fn residual(&self, u: &Tensor) -> Result<f64> {
        Ok((&self.operator.apply(u)? - &self.rhs.tensor).norm())
    }

    /// Round-off level below which contraction ratios are not meaningful.
    pub fn error_floor(&self, u0: &Tensor) -> f64 {
        let scale = self.solution.norm() + (u0 - &self.solution).norm();
        1e3 * f64::EPSILON * self.spectral.kappa * scale
    }
}

fn rank_bookkeeping(
    problem: &LinearProblem,
    u0: &Tensor,
    splittings: &[Splitting],
    eps_rank: f64,
) -> Result<(Vec<RankGrowth>, Vec<usize>)> {
    let mut growth = Vec::with_capacity(splittings.len());
    let mut rhs_ranks = Vec::with_capacity(splittings.len());
    for t in splittings {
        t.check_order(u0.order())?;
        growth.push(RankGrowth::of(problem.operator, t, eps_rank)?);
        rhs_ranks.push(problem.rhs.rank(t, eps_rank)?);
    }
    Ok((growth, rhs_ranks))
}

fn measure(
    problem: &LinearProblem,
    n: usize,
    u: &Tensor,
    splittings: &[Splitting],
    bounds: &[usize],
    eps_rank: f64,
) -> Result<TraceStep> {
    let ranks = splittings
        .iter()
        .map(|t| t_rank(u, t, eps_rank))
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceStep {
        step: n,
        error: (u - &problem.solution).norm(),
        residual: problem.residual(u)?,
        ranks,
        rank_bounds: bounds.to_vec(),
        overlap: None,
        q_step: None,
    })
}

/// Runs `n_steps` exact Richardson steps from `u0`.
///
/// The rank bound per splitting follows `b_0 = rank(u_0)`,
/// `b_{n+1} = min(D, s·b_n + r_b)` where `s` is the step rank of
/// [`RankGrowth`] and `r_b` the rank of the right-hand side.
pub fn richardson_run(
    problem: &LinearProblem,
    u0: &Tensor,
    n_steps: usize,
    splittings: &[Splitting],
    eps_rank: f64,
) -> Result<IterationTrace> {
    u0.check_dims(problem.operator.dims())?;
    check_iterate_capacity(u0.len(), n_steps)?;
    let (growth, rhs_ranks) = rank_bookkeeping(problem, u0, splittings, eps_rank)?;
    let dims = u0.dims();

    let mut bounds = splittings
        .iter()
        .map(|t| t_rank(u0, t, eps_rank))
        .collect::<Result<Vec<_>>>()?;
    let mut steps = vec![measure(problem, 0, u0, splittings, &bounds, eps_rank)?];
    let mut iterates = vec![u0.clone()];
    for n in 1..=n_steps {
        let next = problem.step(iterates.last().expect("nonempty"))?;
        for (k, t) in splittings.iter().enumerate() {
            bounds[k] = growth[k]
                .step_rank
                .saturating_mul(bounds[k])
                .saturating_add(rhs_ranks[k])
                .min(t.max_rank(dims));
        }
        steps.push(measure(problem, n, &next, splittings, &bounds, eps_rank)?);
        iterates.push(next);
    }
    Ok(IterationTrace {
        splittings: splittings.to_vec(),
        growth,
        q: problem.spectral.q,
        steps,
        iterates,
    })
}

/// Richardson iteration that truncates every iterate across each splitting
/// in turn, keeping the smallest rank with tail below
/// `rel_tol·‖u‖/√(#splittings)`.
///
/// Not an exact iteration: rank bounds are reported as the truncation ranks
/// and errors include the accumulated rounding.
pub fn richardson_run_truncated(
    problem: &LinearProblem,
    u0: &Tensor,
    n_steps: usize,
    splittings: &[Splitting],
    rel_tol: f64,
    eps_rank: f64,
) -> Result<IterationTrace> {
    u0.check_dims(problem.operator.dims())?;
    check_iterate_capacity(u0.len(), n_steps)?;
    if !(rel_tol >= 0.0) {
        return Err(Error::Domain(format!("truncation tolerance {rel_tol} must be >= 0")));
    }
    let (growth, _) = rank_bookkeeping(problem, u0, splittings, eps_rank)?;
    let share = (splittings.len().max(1) as f64).sqrt();

    let mut ranks0 = Vec::new();
    for t in splittings {
        ranks0.push(t_rank(u0, t, eps_rank)?);
    }
    let mut steps = vec![measure(problem, 0, u0, splittings, &ranks0, eps_rank)?];
    let mut iterates = vec![u0.clone()];
    for n in 1..=n_steps {
        let mut next = problem.step(iterates.last().expect("nonempty"))?;
        let budget = rel_tol * next.norm() / share;
        let mut kept = Vec::with_capacity(splittings.len());
        for t in splittings {
            let d = t.max_rank(next.dims());
            let r = (0..=d)
                .find(|&r| tail_error(&next, t, r).map(|e| e <= budget).unwrap_or(false))
                .unwrap_or(d);
            next = truncate(&next, t, r)?;
            kept.push(r);
        }
        steps.push(measure(problem, n, &next, splittings, &kept, eps_rank)?);
        iterates.push(next);
    }
    Ok(IterationTrace {
        splittings: splittings.to_vec(),
        growth,
        q: problem.spectral.q,
        steps,
        iterates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kron::{build_model, ElementaryOp, ModelKind, ModelParams};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    fn lyapunov_diag() -> KronSumOperator {
        let dims = [4, 4];
        let a = diag(&[1.0, 2.0, 3.0, 4.0]);
        KronSumOperator::new(
            dims.to_vec(),
            vec![
                ElementaryOp::single(&dims, 0, a.clone()).unwrap(),
                ElementaryOp::single(&dims, 1, a).unwrap(),
            ],
        )
        .unwrap()
        .declare_symmetric(3)
        .unwrap()
    }

    fn rank_one_rhs(dims: &[usize], seed: u64) -> RhsTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RhsTensor::random_rank_one_sum(dims, 1, &mut rng).unwrap()
    }

    #[test]
    fn spectral_data_values() {
        let s = SpectralData::new(1.0, 3.0).unwrap();
        assert_eq!((s.kappa, s.alpha, s.q), (3.0, 0.5, 0.5));
        assert!(matches!(SpectralData::new(0.0, 1.0), Err(Error::NotSpd(_))));
        assert!(SpectralData::new(2.0, 1.0).is_err());
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = KronSumOperator::identity(&[3, 2]).unwrap().declare_symmetric(0).unwrap();
        let b = rank_one_rhs(&[3, 2], 4);
        let u = dense_solve(&a, &b).unwrap();
        for (x, y) in u.data().iter().zip(b.tensor.data()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_solve_divides_by_eigenvalue_sums() {
        let a = lyapunov_diag();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = RhsTensor::new(Tensor::random(&[4, 4], &mut rng).unwrap());
        let u = dense_solve(&a, &b).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = b.tensor.get(&[i, j]) / ((i + 1 + j + 1) as f64);
                assert!((u.get(&[i, j]) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn conjugate_gradient_matches_cholesky() {
        let mut p = ModelParams::new(vec![3, 4, 2]);
        p.seed = 9;
        let a = build_model(ModelKind::LaplacePlusNn, &p).unwrap();
        let b = rank_one_rhs(&[3, 4, 2], 5);
        let direct = cholesky_solve(&a, &b.tensor).unwrap();
        let cg = conjugate_gradient(&a, &b.tensor).unwrap();
        assert!((&direct - &cg).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn indefinite_rejected() {
        let dims = [2, 2];
        let a = KronSumOperator::new(
            dims.to_vec(),
            vec![ElementaryOp::single(&dims, 0, diag(&[1.0, -1.0])).unwrap()],
        )
        .unwrap()
        .declare_symmetric(0)
        .unwrap();
        let b = rank_one_rhs(&dims, 1);
        assert!(matches!(dense_solve(&a, &b), Err(Error::NotSpd(_))));
    }

    #[test]
    fn start_at_solution_stays() {
        let a = lyapunov_diag();
        let b = rank_one_rhs(&[4, 4], 7);
        let problem = LinearProblem::new(&a, &b).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        let trace = richardson_run(&problem, &problem.solution, 5, &[t], 1e-10).unwrap();
        for s in &trace.steps {
            assert!(s.error < 1e-14);
            assert!(s.residual < 1e-13);
        }
    }

    #[test]
    fn scalar_operator_converges_in_one_step() {
        let a = KronSumOperator::identity(&[3, 3])
            .unwrap()
            .declare_symmetric(0)
            .unwrap();
        let b = rank_one_rhs(&[3, 3], 8);
        let problem = LinearProblem::new(&a, &b).unwrap();
        assert_eq!(problem.spectral.q, 0.0);
        let u0 = Tensor::zeros(&[3, 3]).unwrap();
        let trace = richardson_run(&problem, &u0, 3, &[], 1e-10).unwrap();
        assert!(trace.steps[1].error < 1e-15);
    }

    #[test]
    fn errors_follow_eigenbasis_propagation() {
        let a = lyapunov_diag();
        let b = rank_one_rhs(&[4, 4], 11);
        let problem = LinearProblem::new(&a, &b).unwrap();
        let alpha = problem.spectral.alpha;
        assert_eq!(alpha, 2.0 / 10.0);
        let u0 = Tensor::zeros(&[4, 4]).unwrap();
        let trace = richardson_run(&problem, &u0, 12, &[], 1e-10).unwrap();
        // A is diagonal: (I − αA)ⁿ acts entrywise with factor (1 − α(i+j))ⁿ.
        for s in &trace.steps {
            let mut acc = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let lambda = (i + j + 2) as f64;
                    let e0 = problem.solution.get(&[i, j]);
                    let f = (1.0 - alpha * lambda).powi(s.step as i32);
                    acc += (f * e0).powi(2);
                }
            }
            assert!((s.error - acc.sqrt()).abs() < 1e-13);
        }
        assert!(trace.contraction_violations(1e-10, problem.error_floor(&u0)).is_empty());
    }

    #[test]
    fn rank_bounds_hold_for_laplace_plus_nn() {
        let mut p = ModelParams::new(vec![3, 3, 3]);
        p.seed = 21;
        let a = build_model(ModelKind::LaplacePlusNn, &p).unwrap();
        let b = rank_one_rhs(&[3, 3, 3], 3);
        let problem = LinearProblem::new(&a, &b).unwrap();
        let ts = Splitting::tt_family(3);
        let u0 = Tensor::zeros(&[3, 3, 3]).unwrap();
        let trace = richardson_run(&problem, &u0, 6, &ts, 1e-10).unwrap();
        assert!(trace.ranks_within_bounds());
        assert!(trace.multiplicative_law_holds(RankGrowth::linear_factor));
        assert!(trace.contraction_violations(1e-10, problem.error_floor(&u0)).is_empty());
        let e = trace.errors();
        assert!(e.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn laplace_growth_is_refined() {
        let a = build_model(ModelKind::LaplaceLike, &ModelParams::new(vec![2, 3, 2])).unwrap();
        let t = Splitting::new(3, [1]).unwrap();
        let g = RankGrowth::of(&a, &t, 1e-10).unwrap();
        assert_eq!(g.operator_rank, 2);
        assert!(g.identity_refined);
        assert_eq!(g.linear_factor(), 3);
        assert_eq!(g.eigen_factor(), 2);
    }

    #[test]
    fn truncated_run_tracks_exact() {
        let a = lyapunov_diag();
        let b = rank_one_rhs(&[4, 4], 13);
        let problem = LinearProblem::new(&a, &b).unwrap();
        let t = Splitting::new(2, [0]).unwrap();
        let u0 = Tensor::zeros(&[4, 4]).unwrap();
        let exact = richardson_run(&problem, &u0, 10, std::slice::from_ref(&t), 1e-10).unwrap();
        let rounded = richardson_run_truncated(&problem, &u0, 10, &[t], 1e-8, 1e-10).unwrap();
        let last = exact.steps.last().unwrap().error;
        assert!((rounded.steps.last().unwrap().error - last).abs() < 1e-6);
        assert!(rounded.steps.iter().all(|s| s.rank_bounds[0] <= 4));
    }

    #[test]
    fn capacity_error_for_long_runs() {
        let a = KronSumOperator::identity(&[2000, 1000]).unwrap();
        let b = RhsTensor::new(Tensor::zeros(&[2000, 1000]).unwrap());
        let problem = LinearProblem {
            operator: &a,
            rhs: &b,
            interval: SpectralInterval {
                gamma: 1.0,
                big_gamma: 1.0,
                source: crate::kron::SpectralSource::Analytic,
                computed: (1.0, 1.0),
            },
            spectral: SpectralData::new(1.0, 1.0).unwrap(),
            solution: b.tensor.clone(),
        };
        let u0 = b.tensor.clone();
        assert!(matches!(
            richardson_run(&problem, &u0, 12, &[], 1e-10),
            Err(Error::Capacity { .. })
        ));
    }
}
