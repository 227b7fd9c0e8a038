use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{KronSumOperator, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const CONSISTENCY_TOL: f64 = 1e-6;
const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 20_000;
const POWER_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralSource {
    Exact,
    Analytic,
    PowerIteration,
}

/// `γ ≤ ⟨v, Av⟩/‖v‖² ≤ Γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralInterval {
    pub gamma: f64,
    pub big_gamma: f64,
    pub source: SpectralSource,
    /// Extreme eigenvalues (or estimates) computed from the operator itself.
    pub computed: (f64, f64),
}

impl SpectralInterval {
    pub fn kappa(&self) -> f64 {
        self.big_gamma / self.gamma
    }

    pub fn is_coercive(&self) -> bool {
        self.gamma > 0.0
    }
}

/// Extreme eigenvalue estimates by power iteration: `Γ` from `A`, then `γ`
/// from `Γ_est·I − A`.
pub fn power_extremes(a: &KronSumOperator) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let start = Tensor::random(a.dims(), &mut rng)?;
    let hi = power(|v| a.apply(v), &start)?;
    let lo_shift = power(
        |v| {
            let mut out = v.scaled(hi);
            out.axpy(-1.0, &a.apply(v)?);
            Ok(out)
        },
        &start,
    )?;
    Ok((hi - lo_shift, hi))
}

fn power(op: impl Fn(&Tensor) -> Result<Tensor>, start: &Tensor) -> Result<f64> {
    let mut v = start.scaled(1.0 / start.norm());
    let mut rayleigh = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let w = op(&v)?;
        let next = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return Ok(0.0);
        }
        v = w.scaled(1.0 / nw);
        if (next - rayleigh).abs() <= POWER_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        rayleigh = next;
    }
    Err(Error::Numerical(format!(
        "power iteration did not reach {POWER_TOL:e} relative in {POWER_MAX_ITER} steps"
    )))
}

/// Spectral interval of a symmetric operator.
///
/// Exact extremes from the dense eigensolver under [`DENSE_LIMIT`], power
/// iteration estimates above it. When the operator carries analytic bounds
/// they are checked against the computed extremes and returned instead.
pub fn spectral_interval(a: &KronSumOperator) -> Result<SpectralInterval> {
    if !a.is_symmetric() {
        return Err(Error::Domain("spectral interval requires a symmetric operator".into()));
    }
    let (computed, source) = if a.total_dim() <= DENSE_LIMIT {
        let eig = SymmetricEigen::new(a.assemble_dense()?);
        let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ((lo, hi), SpectralSource::Exact)
    } else {
        (power_extremes(a)?, SpectralSource::PowerIteration)
    };

    match a.analytic_bounds() {
        Some(bounds) => {
            let scale = computed.0.abs().max(computed.1.abs()).max(1.0);
            let slack = CONSISTENCY_TOL * scale;
            if bounds.gamma > computed.0 + slack || bounds.big_gamma < computed.1 - slack {
                return Err(Error::InconsistentBounds {
                    analytic_lo: bounds.gamma,
                    analytic_hi: bounds.big_gamma,
                    computed_lo: computed.0,
                    computed_hi: computed.1,
                });
            }
            Ok(SpectralInterval {
                gamma: bounds.gamma,
                big_gamma: bounds.big_gamma,
                source: SpectralSource::Analytic,
                computed,
            })
        }
        None => Ok(SpectralInterval {
            gamma: computed.0,
            big_gamma: computed.1,
            source,
            computed,
        }),
    }
}
