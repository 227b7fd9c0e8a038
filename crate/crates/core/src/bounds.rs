//! Closed-form decay bounds for fixed-point iterations with contraction
//! factor `q` and rank growth factor `R`.
//!
//! Every bound below controls the best rank-`r` approximation error `τ_r`
//! (or the squared singular value `σ_r²`) of the fixed point. Integer
//! logarithms are computed by repeated multiplication, so the bounds are
//! bit-stable at `r = Rⁿ`.

use crate::error::{Error, Result};

/// Largest `n` with `growthⁿ ≤ r`, together with `growthⁿ`.
///
/// `growth` must exceed 1 and `r` must be at least 1.
pub fn floor_log(r: usize, growth: f64) -> (u32, f64) {
    assert!(growth > 1.0, "rank growth factor must exceed 1");
    assert!(r >= 1, "rank must be positive");
    let target = r as f64;
    let mut n = 0u32;
    let mut power = 1.0f64;
    while power * growth <= target {
        power *= growth;
        n += 1;
    }
    (n, power)
}

/// `|ln q / ln R|`, the algebraic decay exponent.
pub fn decay_exponent(q: f64, growth: f64) -> f64 {
    (q.ln() / growth.ln()).abs()
}

/// Contraction factor `(κ−1)/(κ+1)` of optimally damped Richardson iteration.
pub fn contraction_rate(kappa: f64) -> Result<f64> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!("condition number {kappa} must be >= 1")));
    }
    Ok((kappa - 1.0) / (kappa + 1.0))
}

/// The sharper bound that interpolates between the anchors `r = Rⁿ`:
/// `c π₁ qⁿ (1 − (1−q²)(r−Rⁿ)/((R−1)Rⁿ))^{1/2}` with `n = ⌊log_R r⌋`.
pub fn tail_bound_interpolated(r: usize, q: f64, growth: f64, c: f64, pi1: f64) -> f64 {
    let (n, power) = floor_log(r, growth);
    let s = r as f64 - power;
    let factor = 1.0 - (1.0 - q * q) * s / ((growth - 1.0) * power);
    c * pi1 * factor.max(0.0).sqrt() * q.powi(n as i32)
}

/// `c π₁ q⁻¹ r^{−|ln q / ln R|}`; dominates [`tail_bound_interpolated`].
pub fn tail_bound_algebraic(r: usize, q: f64, growth: f64, c: f64, pi1: f64) -> f64 {
    c * pi1 / q * (r as f64).powf(-decay_exponent(q, growth))
}

/// Tail bound for the solution of an SPD system: the algebraic bound with
/// `c = 1` and `π₁ = ‖u‖` (start from zero).
pub fn linear_tail_bound(r: usize, q: f64, growth: f64, norm_u: f64) -> f64 {
    tail_bound_algebraic(r, q, growth, 1.0, norm_u)
}

/// Bound on `σ_r²` derived from the algebraic tail bound:
/// `(c π₁)² q⁻² (2/(r−1))^{2|ln q / ln R|}` for `r ≥ 2`.
///
/// The prefactor is squared so the bound scales like `σ_r²` when `u` is
/// rescaled.
pub fn singular_value_bound(r: usize, q: f64, growth: f64, c: f64, pi1: f64) -> Result<f64> {
    if r < 2 {
        return Err(Error::Domain(format!("singular value bound needs r >= 2, got {r}")));
    }
    let scale = c * pi1;
    let ratio = 2.0 / (r as f64 - 1.0);
    Ok(scale * scale / (q * q) * ratio.powf(2.0 * decay_exponent(q, growth)))
}

/// Additive rank bound `(n+1) r₀ + n r_b` for commuting Laplace-like operators.
pub fn commuting_rank_bound(n: usize, r0: usize, rb: usize) -> usize {
    (n + 1) * r0 + n * rb
}

/// Tail bound for an eigenvector: `π₁ q⁻¹ r^{−|ln q / ln R|}`.
pub fn eigen_tail_bound(r: usize, q: f64, growth: f64, pi1: f64) -> f64 {
    tail_bound_algebraic(r, q, growth, 1.0, pi1)
}

fn check_overlap_hypothesis(q: f64, growth: f64) -> Result<f64> {
    let x = q * q * growth;
    if !(x < 1.0) {
        return Err(Error::HypothesisUnmet(x));
    }
    Ok(x)
}

/// `m = ⌈−ln 2 / ln(q²R)⌉`, at least 1. Values within `1e-12` of an integer
/// are snapped to it before taking the ceiling.
pub fn overlap_exponent(q: f64, growth: f64) -> Result<u32> {
    let x = check_overlap_hypothesis(q, growth)?;
    let ratio = -std::f64::consts::LN_2 / x.ln();
    let nearest = ratio.round();
    let m = if (ratio - nearest).abs() <= 1e-12 {
        nearest
    } else {
        ratio.ceil()
    };
    Ok((m as u32).max(1))
}

/// Lower bound on the leading normalized singular value of the eigenvector:
/// `θ ≥ (½ R^{−m})^{1/2}` when `q²R < 1`.
pub fn overlap_lower_bound(q: f64, growth: f64) -> Result<f64> {
    let m = overlap_exponent(q, growth)?;
    Ok((0.5 * growth.powi(-(m as i32))).sqrt())
}

/// `√2 R^{m/2} ‖u‖ r^{−|ln q / ln R|}` when `q²R < 1`.
///
/// This is the overlap-based bound in its stated form. It omits the `q⁻¹`
/// carried by [`eigen_tail_bound`]; see [`eigen_tail_bound_via_overlap`] for
/// the substituted version.
pub fn eigen_tail_bound_from_overlap(r: usize, q: f64, growth: f64, norm_u: f64) -> Result<f64> {
    let m = overlap_exponent(q, growth)?;
    Ok(std::f64::consts::SQRT_2
        * growth.powf(0.5 * m as f64)
        * norm_u
        * (r as f64).powf(-decay_exponent(q, growth)))
}

/// [`eigen_tail_bound`] with `π₁ ≤ ‖u‖/θ` and `θ` replaced by
/// [`overlap_lower_bound`].
pub fn eigen_tail_bound_via_overlap(r: usize, q: f64, growth: f64, norm_u: f64) -> Result<f64> {
    let theta = overlap_lower_bound(q, growth)?;
    Ok(eigen_tail_bound(r, q, growth, norm_u / theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_log_integer_anchors() {
        assert_eq!(floor_log(1, 3.0), (0, 1.0));
        assert_eq!(floor_log(8, 3.0), (1, 3.0));
        assert_eq!(floor_log(9, 3.0), (2, 9.0));
        assert_eq!(floor_log(243, 3.0), (5, 243.0));
        assert_eq!(floor_log(242, 3.0), (4, 81.0));
        assert_eq!(floor_log(1 << 40, 2.0), (40, (1u64 << 40) as f64));
    }

    #[test]
    fn contraction_rate_values() {
        assert_eq!(contraction_rate(1.0).unwrap(), 0.0);
        assert_eq!(contraction_rate(3.0).unwrap(), 0.5);
        assert!(contraction_rate(0.5).is_err());
        // κ = (d Γ_A + (d−1) Γ_B Γ_C)/(d γ_A) with γ_A=1, Γ_A=2, Γ_B=Γ_C=1, d=4
        let kappa = (8.0 + 3.0) / 4.0;
        assert!((contraction_rate(kappa).unwrap() - 1.75 / 3.75).abs() < 1e-15);
    }

    #[test]
    fn interpolated_bound_values() {
        // r = 5 = 3 + 2: n = 1, s = 2
        let v = tail_bound_interpolated(5, 0.5, 3.0, 1.0, 1.0);
        assert!((v - 0.5 * 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(tail_bound_interpolated(9, 0.5, 3.0, 1.0, 1.0), 0.25);
        assert_eq!(tail_bound_interpolated(1, 0.3, 4.0, 2.0, 1.5), 3.0);
        // anchor r = Rⁿ is exactly c π₁ qⁿ
        for n in 0..8 {
            let r = 4usize.pow(n);
            assert_eq!(tail_bound_interpolated(r, 0.37, 4.0, 1.0, 2.5), 2.5 * 0.37f64.powi(n as i32));
        }
    }

    #[test]
    fn algebraic_bound_values() {
        assert_eq!(tail_bound_algebraic(1, 0.25, 3.0, 2.0, 3.0), 24.0);
        // q = 1/2, R = 2: exponent 1
        let v = tail_bound_algebraic(7, 0.5, 2.0, 1.0, 1.0);
        assert!((v - 2.0 / 7.0).abs() < 1e-15);
        let v = tail_bound_algebraic(9, 0.5, 3.0, 1.0, 1.0);
        assert!((v - 2.0 * 9f64.powf(-(2f64.ln() / 3f64.ln()))).abs() < 1e-15);
        assert!(tail_bound_interpolated(9, 0.5, 3.0, 1.0, 1.0) <= v);
    }

    #[test]
    fn linear_bound_refinement_is_smaller() {
        let (q, norm) = (0.6, 1.3);
        for r in 1..50 {
            let general = linear_tail_bound(r, q, 4.0, norm);
            let refined = linear_tail_bound(r, q, 3.0, norm);
            assert!(refined <= general);
        }
        assert_eq!(linear_tail_bound(1, 0.6, 4.0, 1.2), 2.0);
    }

    #[test]
    fn singular_value_bound_values() {
        assert!((singular_value_bound(3, 0.5, 2.0, 1.0, 1.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(singular_value_bound(1, 0.5, 2.0, 1.0, 1.0).is_err());
        let mut prev = f64::INFINITY;
        for r in 2..40 {
            let v = singular_value_bound(r, 0.4, 3.0, 1.0, 2.0).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn commuting_bound_values() {
        assert_eq!(commuting_rank_bound(0, 3, 7), 3);
        assert_eq!(commuting_rank_bound(2, 1, 1), 5);
    }

    #[test]
    fn overlap_exponent_values() {
        // q²R = 0.27: −ln2/ln0.27 ≈ 0.5295
        assert_eq!(overlap_exponent(0.3, 3.0).unwrap(), 1);
        assert!((overlap_lower_bound(0.3, 3.0).unwrap().powi(2) - 1.0 / 6.0).abs() < 1e-15);
        // q²R = 0.75: ≈ 2.409
        assert_eq!(overlap_exponent(0.5, 3.0).unwrap(), 3);
        assert!((overlap_lower_bound(0.5, 3.0).unwrap().powi(2) - 1.0 / 54.0).abs() < 1e-16);
        assert_eq!(overlap_exponent(0.0, 5.0).unwrap(), 1);
        assert_eq!(overlap_exponent(1e-9, 5.0).unwrap(), 1);
        assert!(matches!(overlap_exponent(0.6, 3.0), Err(Error::HypothesisUnmet(_))));
        // q²R = 1/2 exactly → ratio 1
        assert_eq!(overlap_exponent(0.5, 2.0).unwrap(), 1);
        // q²R = 1/√2 → ratio 2 (snapped)
        let q = (0.5f64.sqrt() / 2.0).sqrt();
        assert_eq!(overlap_exponent(q, 2.0).unwrap(), 2);
    }

    #[test]
    fn overlap_tail_bounds() {
        let v = eigen_tail_bound_from_overlap(1, 0.3, 3.0, 1.0).unwrap();
        assert!((v - 6f64.sqrt()).abs() < 1e-14);
        for r in 1..20 {
            let via = eigen_tail_bound_via_overlap(r, 0.3, 3.0, 1.0).unwrap();
            let theta = overlap_lower_bound(0.3, 3.0).unwrap();
            let direct = eigen_tail_bound(r, 0.3, 3.0, 1.0 / theta);
            assert!((via - direct).abs() <= 1e-14 * direct);
            let printed = eigen_tail_bound_from_overlap(r, 0.3, 3.0, 1.0).unwrap();
            assert!((printed - 0.3 * via).abs() <= 1e-14 * via);
        }
        assert!(eigen_tail_bound_from_overlap(1, 0.9, 3.0, 1.0).is_err());
    }

    #[test]
    fn eigen_refinement_is_smaller() {
        for r in 2..30 {
            assert!(eigen_tail_bound(r, 0.4, 3.0, 1.0) < eigen_tail_bound(r, 0.4, 4.0, 1.0));
        }
        assert_eq!(eigen_tail_bound(1, 0.5, 3.0, 0.7), 1.4);
    }
}
