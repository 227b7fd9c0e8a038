//! Shifted Richardson iteration `u_{n+1} = (1 + βλ₁)u_n − βAu_n` towards the
//! eigenvector of the smallest eigenvalue, rank-one starting points and
//! estimates of the start distance `π₁`.
//!
//! `λ₁` is taken from the dense eigensolver, so everything here is limited
//! to operators that can be assembled.

use nalgebra::SymmetricEigen;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kron::KronSumOperator;
use crate::tensor::{leading_term, overlap_theta, t_rank, Splitting, Tensor};
use crate::trace::{check_iterate_capacity, IterationTrace, RankGrowth, TraceStep};

/// Relative gap below which `λ₁` is treated as degenerate.
pub const SIMPLICITY_TOL: f64 = 1e-8;
/// Accepted defect `|⟨u_0 − target, u⋆⟩|` of a starting point.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;
const EIGEN_RESIDUAL_TOL: f64 = 1e-10;
const ORTHOGONAL_TOL: f64 = 1e-12;
const REJECT_OVERLAP: f64 = 1e-6;
const MAX_DRAWS: usize = 10_000;

/// Spectral data of the shifted iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSetup {
    pub lambda1: f64,
    pub lambda2: f64,
    pub big_gamma: f64,
    /// `δ = λ₂ − λ₁`.
    pub delta: f64,
    /// `Δ = δ/(Γ − λ₁)`.
    pub rel_gap: f64,
    pub beta: f64,
    pub q: f64,
    /// Unit eigenvector for `λ₁`.
    pub u_star: Tensor,
}

impl EigenSetup {
    pub fn new(a: &KronSumOperator) -> Result<EigenSetup> {
        let (lambda1, lambda2, big_gamma, u_star) = smallest_pair(a)?;
        let delta = lambda2 - lambda1;
        let rel_gap = delta / (big_gamma - lambda1);
        Ok(EigenSetup {
            lambda1,
            lambda2,
            big_gamma,
            delta,
            rel_gap,
            beta: 2.0 / (delta + big_gamma - lambda1),
            q: (1.0 - rel_gap) / (1.0 + rel_gap),
            u_star,
        })
    }

    /// One shifted step.
    pub fn step(&self, a: &KronSumOperator, u: &Tensor) -> Result<Tensor> {
        let mut next = u.scaled(1.0 + self.beta * self.lambda1);
        next.axpy(-self.beta, &a.apply(u)?);
        Ok(next)
    }

    /// `P u = ⟨u, u⋆⟩ u⋆`, the limit of the iteration started at `u`.
    pub fn project(&self, u: &Tensor) -> Tensor {
        self.u_star.scaled(u.dot(&self.u_star))
    }
}

/// `(λ₁, λ₂, Γ, u⋆)` from the dense eigensolver. The eigenvector has unit
/// norm and its largest-magnitude entry (first on ties) positive.
pub fn smallest_pair(a: &KronSumOperator) -> Result<(f64, f64, f64, Tensor)> {
    if !a.is_symmetric() {
        return Err(Error::Domain("eigenpair requires a symmetric operator".into()));
    }
    let m = a.assemble_dense()?;
    if m.nrows() < 2 {
        return Err(Error::InvalidDims("eigen problems need total dimension >= 2".into()));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambda1 = eig.eigenvalues[order[0]];
    let lambda2 = eig.eigenvalues[order[1]];
    let big_gamma = eig.eigenvalues[order[order.len() - 1]];
    if lambda2 - lambda1 <= SIMPLICITY_TOL * lambda1.abs().max(1.0) {
        return Err(Error::Lambda1Degenerate { lambda1, lambda2 });
    }

    let mut v = eig.eigenvectors.column(order[0]).into_owned();
    v /= v.norm();
    let mut pivot = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v = -v;
    }
    let residual = (&m * &v - &v * lambda1).norm();
    if residual > EIGEN_RESIDUAL_TOL * big_gamma.abs().max(1.0) {
        return Err(Error::Numerical(format!("eigenpair residual {residual:e}")));
    }
    let u = Tensor::new(a.dims().to_vec(), v.as_slice().to_vec())?;
    Ok((lambda1, lambda2, big_gamma, u))
}

/// Rescales a `t`-rank-one `û` onto the affine slice `u + ⟨u⟩^⊥`:
/// `u_0 = ‖u‖²/⟨u, û⟩ · û`.
pub fn rank_one_start(u: &Tensor, u_hat: &Tensor, t: &Splitting) -> Result<Tensor> {
    u_hat.check_dims(u.dims())?;
    let rank = t_rank(u_hat, t, crate::tensor::DEFAULT_EPS_RANK)?;
    if rank != 1 {
        return Err(Error::StartNotRankOne(rank));
    }
    let ip = u.dot(u_hat);
    let nh = u_hat.norm();
    if ip.abs() <= ORTHOGONAL_TOL * nh {
        return Err(Error::OrthogonalStart(ip / nh));
    }
    Ok(u_hat.scaled(u.dot(u) / ip))
}

/// Upper estimates of `π₁^(t)(u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pi1Estimates {
    /// `‖u‖/θ`.
    pub via_theta: f64,
    /// `√(D^(t))·‖u‖`.
    pub naive: f64,
    /// Distance from `u` to the rescaled leading rank-one term.
    pub constructive: f64,
}

pub fn pi1_upper_bounds(u: &Tensor, t: &Splitting) -> Result<Pi1Estimates> {
    let norm = u.norm();
    if norm == 0.0 {
        return Err(Error::Domain("start distance of the zero tensor".into()));
    }
    let theta = overlap_theta(u, t)?;
    let start = rank_one_start(u, &leading_term(u, t)?, t)?;
    Ok(Pi1Estimates {
        via_theta: norm / theta,
        naive: (t.max_rank(u.dims()) as f64).sqrt() * norm,
        constructive: (&start - u).norm(),
    })
}

/// Random `t`-rank-one start on the slice `u + ⟨u⟩^⊥`: an elementary tensor
/// drawn until its normalized overlap with `u` exceeds `1e-6`, then rescaled.
pub fn random_admissible_start<R: Rng + ?Sized>(u: &Tensor, t: &Splitting, rng: &mut R) -> Result<Tensor> {
    let nu = u.norm();
    for _ in 0..MAX_DRAWS {
        let x = Tensor::random_rank_one(u.dims(), rng)?;
        let nx = x.norm();
        if nx == 0.0 || u.dot(&x).abs() <= REJECT_OVERLAP * nx * nu {
            continue;
        }
        return rank_one_start(u, &x.scaled(1.0 / nx), t);
    }
    Err(Error::Numerical(format!(
        "no admissible rank-one start in {MAX_DRAWS} draws"
    )))
}

/// Runs `n_steps` shifted steps from `u0` towards `target` (default `P u0`).
///
/// The start must satisfy `|⟨u_0 − target, u⋆⟩| ≤ 1e-10·max(1, ‖target‖)`.
/// Rank bounds follow `b_n = min(D, R·b_{n−1})` with `R` the eigen growth
/// factor of [`RankGrowth`].
pub fn shifted_richardson_run(
    setup: &EigenSetup,
    a: &KronSumOperator,
    u0: &Tensor,
    n_steps: usize,
    splittings: &[Splitting],
    target: Option<&Tensor>,
    eps_rank: f64,
) -> Result<IterationTrace> {
    u0.check_dims(a.dims())?;
    check_iterate_capacity(u0.len(), n_steps)?;
    let target = match target {
        Some(x) => {
            x.check_dims(a.dims())?;
            let defect = (u0 - x).dot(&setup.u_star);
            if defect.abs() > ADMISSIBILITY_TOL * x.norm().max(1.0) {
                return Err(Error::InadmissibleStart(defect));
            }
            x.clone()
        }
        None => setup.project(u0),
    };

    let mut growth = Vec::with_capacity(splittings.len());
    let mut bounds = Vec::with_capacity(splittings.len());
    for t in splittings {
        t.check_order(a.order())?;
        growth.push(RankGrowth::of(a, t, eps_rank)?);
        bounds.push(t_rank(u0, t, eps_rank)?);
    }

    let measure = |n: usize, u: &Tensor, bounds: &[usize], prev: Option<f64>| -> Result<TraceStep> {
        let error = (u - &target).norm();
        let mut r = a.apply(u)?;
        r.axpy(-setup.lambda1, u);
        let ranks = splittings
            .iter()
            .map(|t| t_rank(u, t, eps_rank))
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceStep {
            step: n,
            error,
            residual: r.norm(),
            ranks,
            rank_bounds: bounds.to_vec(),
            overlap: Some(u.dot(&setup.u_star)),
            q_step: prev.map(|e| if e > 0.0 { error / e } else { 0.0 }),
        })
    };

    let mut steps = vec![measure(0, u0, &bounds, None)?];
    let mut iterates = vec![u0.clone()];
    for n in 1..=n_steps {
        let next = setup.step(a, iterates.last().expect("nonempty"))?;
        for (k, t) in splittings.iter().enumerate() {
            bounds[k] = growth[k]
                .eigen_factor()
                .saturating_mul(bounds[k])
                .min(t.max_rank(next.dims()));
        }
        let prev = steps.last().map(|s| s.error);
        steps.push(measure(n, &next, &bounds, prev)?);
        iterates.push(next);
    }
    Ok(IterationTrace {
        splittings: splittings.to_vec(),
        growth,
        q: setup.q,
        steps,
        iterates,
    })
}

/// Result of [`two_step_rank_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepProbe {
    pub samples: usize,
    /// Largest `rank(u_1)/max(1, rank(u_0))`.
    pub max_one_step: f64,
    /// Largest `rank(u_2)/max(1, rank(u_0))`.
    pub max_two_step: f64,
    pub claimed_cap: usize,
    pub naive_cap: usize,
}

/// Two shifted steps from random rank-one admissible starts for an operator
/// `A₁⊗I + I⊗A₂ + B⊗C`.
pub fn two_step_rank_probe<R: Rng + ?Sized>(
    a: &KronSumOperator,
    setup: &EigenSetup,
    t: &Splitting,
    samples: usize,
    eps_rank: f64,
    rng: &mut R,
) -> Result<TwoStepProbe> {
    let terms = a.terms();
    if a.order() != 2 || terms.len() != 3 {
        return Err(Error::ShapeMismatch {
            expected: vec![2, 3],
            found: vec![a.order(), terms.len()],
        });
    }
    if !terms[0].identity_flags()[1] || !terms[1].identity_flags()[0] {
        return Err(Error::Construction(
            "expected terms A1 (x) I, I (x) A2, B (x) C in that order".into(),
        ));
    }
    t.check_order(2)?;
    let mut max_one: f64 = 0.0;
    let mut max_two: f64 = 0.0;
    for _ in 0..samples {
        let u0 = random_admissible_start(&setup.u_star, t, rng)?;
        let r0 = t_rank(&u0, t, eps_rank)?.max(1) as f64;
        let u1 = setup.step(a, &u0)?;
        let u2 = setup.step(a, &u1)?;
        max_one = max_one.max(t_rank(&u1, t, eps_rank)? as f64 / r0);
        max_two = max_two.max(t_rank(&u2, t, eps_rank)? as f64 / r0);
    }
    Ok(TwoStepProbe {
        samples,
        max_one_step: max_one,
        max_two_step: max_two,
        claimed_cap: 6,
        naive_cap: 9,
    })
}
