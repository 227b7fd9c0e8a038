//! Per-step records of a fixed-point iteration and their CSV export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kron::{split_structure, KronSumOperator};
use crate::tensor::{Splitting, Tensor};

/// Largest number of tensor entries a trace may hold across all iterates.
pub const ITERATE_LIMIT: usize = 10_000_000;

/// Formats a real for CSV export: shortest round-trip scientific notation.
pub fn fmt_real(x: f64) -> String {
    format!("{x:e}")
}

/// How one Richardson-type step `v ↦ v − α(A v − …)` can grow `t`-ranks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankGrowth {
    pub splitting: Splitting,
    /// `r_A^(t)`.
    pub operator_rank: usize,
    /// `I_t` or `I_{t^c}` can be taken as a factor of a minimal representation of `A`.
    pub identity_refined: bool,
    /// Bound on the `t`-rank of `I − αA`: `r_A` when refined, else `r_A + 1`.
    pub step_rank: usize,
}

impl RankGrowth {
    pub fn of(a: &KronSumOperator, t: &Splitting, eps_rank: f64) -> Result<RankGrowth> {
        let s = split_structure(a, t, eps_rank)?;
        let refined = s.identity_refinable();
        let step_rank = if refined { s.rank.max(1) } else { s.rank + 1 };
        Ok(RankGrowth {
            splitting: t.clone(),
            operator_rank: s.rank,
            identity_refined: refined,
            step_rank,
        })
    }

    /// Growth factor for the linear iteration with a right-hand side:
    /// `r_A + 2`, or `r_A + 1` when refined.
    pub fn linear_factor(&self) -> usize {
        self.step_rank + 1
    }

    /// Growth factor for the shifted eigenvector iteration: `r_A + 1`, or
    /// `r_A` when refined.
    pub fn eigen_factor(&self) -> usize {
        self.step_rank
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub error: f64,
    pub residual: f64,
    pub ranks: Vec<usize>,
    pub rank_bounds: Vec<usize>,
    /// `⟨u_n, u⋆⟩` with the unit eigenvector `u⋆` (eigenvector runs).
    pub overlap: Option<f64>,
    /// `e_n/e_{n−1}` (eigenvector runs; empty at step 0).
    pub q_step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub splittings: Vec<Splitting>,
    pub growth: Vec<RankGrowth>,
    /// Contraction factor the run was certified with.
    pub q: f64,
    pub steps: Vec<TraceStep>,
    #[serde(skip)]
    pub iterates: Vec<Tensor>,
}

impl IterationTrace {
    pub fn errors(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.error).collect()
    }

    pub fn final_iterate(&self) -> Option<&Tensor> {
        self.iterates.last()
    }

    /// Steps `n ≥ 1` with `e_n > (q + rel_tol)·e_{n−1} + floor`.
    pub fn contraction_violations(&self, rel_tol: f64, floor: f64) -> Vec<usize> {
        self.steps
            .windows(2)
            .filter(|w| w[1].error > (self.q + rel_tol) * w[0].error + floor)
            .map(|w| w[1].step)
            .collect()
    }

    /// Largest ratio `e_n/e_{n−1}` over steps whose previous error exceeds `floor`.
    pub fn max_contraction_ratio(&self, floor: f64) -> f64 {
        self.steps
            .windows(2)
            .filter(|w| w[0].error > floor)
            .map(|w| w[1].error / w[0].error)
            .fold(0.0, f64::max)
    }

    /// Every measured rank is within its predicted bound.
    pub fn ranks_within_bounds(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.ranks.iter().zip(&s.rank_bounds).all(|(r, b)| r <= b))
    }

    /// `rank(u_{n+1}) ≤ factor · max(1, rank(u_n))` for every step and splitting.
    pub fn multiplicative_law_holds(&self, factor: impl Fn(&RankGrowth) -> usize) -> bool {
        self.steps.windows(2).all(|w| {
            self.growth.iter().enumerate().all(|(k, g)| {
                w[1].ranks[k] <= factor(g).saturating_mul(w[0].ranks[k].max(1))
            })
        })
    }

    pub fn to_csv(&self) -> String {
        let with_overlap = self.steps.iter().any(|s| s.overlap.is_some());
        let mut out = String::from("step,error,residual");
        for t in &self.splittings {
            let _ = write!(out, ",rank_{t},rank_bound_{t}");
        }
        if with_overlap {
            out.push_str(",overlap,q_step");
        }
        out.push('\n');
        for s in &self.steps {
            let _ = write!(out, "{},{},{}", s.step, fmt_real(s.error), fmt_real(s.residual));
            for (r, b) in s.ranks.iter().zip(&s.rank_bounds) {
                let _ = write!(out, ",{r},{b}");
            }
            if with_overlap {
                let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
                let _ = write!(out, ",{},{}", opt(s.overlap), opt(s.q_step));
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn check_iterate_capacity(len: usize, n_steps: usize) -> Result<()> {
    let requested = len.saturating_mul(n_steps.saturating_add(1));
    if requested > ITERATE_LIMIT {
        return Err(Error::Capacity {
            what: "stored iterates (entries)",
            requested,
            limit: ITERATE_LIMIT,
        });
    }
    Ok(())
}
