//! Constructors for the model operators: Laplace-like sums, nearest-neighbour
//! interactions, their sum, (generalized) Lyapunov operators and a diagonal
//! test family.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{AnalyticBounds, ElementaryOp, KronSumOperator};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `Σ_μ I ⊗ … ⊗ A_μ ⊗ … ⊗ I`
    LaplaceLike,
    /// `Σ_μ I ⊗ … ⊗ B_μ ⊗ C_{μ+1} ⊗ … ⊗ I`
    NnInteraction,
    LaplacePlusNn,
    /// `A ⊗ I + I ⊗ A`, i.e. `U ↦ AU + UA^T`
    Lyapunov,
    /// `A ⊗ I + I ⊗ A + C ⊗ C`, i.e. `U ↦ AU + UA^T + CUC^T`
    GeneralizedLyapunov,
    /// Laplace-like with diagonal `A_μ`.
    DiagonalTest,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LaplaceLike => "laplace_like",
            ModelKind::NnInteraction => "nn_interaction",
            ModelKind::LaplacePlusNn => "laplace_plus_nn",
            ModelKind::Lyapunov => "lyapunov",
            ModelKind::GeneralizedLyapunov => "generalized_lyapunov",
            ModelKind::DiagonalTest => "diagonal_test",
        }
    }

    /// No interaction terms, so all terms commute.
    pub fn is_commuting(self) -> bool {
        matches!(
            self,
            ModelKind::LaplaceLike | ModelKind::Lyapunov | ModelKind::DiagonalTest
        )
    }
}

/// Generator parameters. Explicit factors take precedence over random ones;
/// a single explicit factor is reused for every mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub dims: Vec<usize>,
    pub seed: u64,
    /// `(γ_A, Γ_A)`: spectral interval of the random `A_μ`.
    pub a_interval: (f64, f64),
    /// `Γ_B`: random `B_μ` have spectrum in `[0, Γ_B]`.
    pub b_max: f64,
    /// `Γ_C`.
    pub c_max: f64,
    pub a: Option<Vec<DMatrix<f64>>>,
    /// `B_1 … B_{d-1}`.
    pub b: Option<Vec<DMatrix<f64>>>,
    /// `C_2 … C_d` (or the single `C` of the generalized Lyapunov operator).
    pub c: Option<Vec<DMatrix<f64>>>,
    /// Diagonal `A_μ`, shorthand for explicit diagonal factors.
    pub diagonals: Option<Vec<Vec<f64>>>,
}

impl ModelParams {
    pub fn new(dims: Vec<usize>) -> Self {
        ModelParams {
            dims,
            seed: 0,
            a_interval: (1.0, 2.0),
            b_max: 1.0,
            c_max: 1.0,
            a: None,
            b: None,
            c: None,
            diagonals: None,
        }
    }
}

/// Random symmetric matrix with spectrum in `[lo, hi]`; both endpoints are
/// eigenvalues when `n >= 2`. Returns exactly `lo·I` when `lo == hi`.
pub fn random_symmetric<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    if lo == hi || n == 1 {
        return DMatrix::identity(n, n) * lo;
    }
    let mut eigs = vec![lo, hi];
    eigs.extend((2..n).map(|_| rng.random_range(lo..hi)));
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let m = &q * DMatrix::from_diagonal(&DVector::from_vec(eigs)) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random symmetric positive semidefinite matrix with spectrum in `[0, hi]`.
pub fn random_psd<R: Rng + ?Sized>(n: usize, hi: f64, rng: &mut R) -> DMatrix<f64> {
    random_symmetric(n, 0.0, hi, rng)
}

/// Header-free, row-major CSV of a square matrix.
pub fn load_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| csv_err(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    matrix_from_rows(&rows).map_err(|e| csv_err(e.to_string()))
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Construction(format!(
            "factor must be a nonempty square matrix, got {} rows of lengths {:?}",
            n,
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn check_symmetric(m: &DMatrix<f64>, name: &str) -> Result<()> {
    let scale = m.norm().max(1.0);
    if (m - m.transpose()).norm() > SYMMETRY_TOL * scale {
        return Err(Error::FactorNotSymmetric(name.to_string()));
    }
    Ok(())
}

fn extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn pick(list: &[DMatrix<f64>], k: usize) -> &DMatrix<f64> {
    if list.len() == 1 {
        &list[0]
    } else {
        &list[k]
    }
}

struct Factors {
    mats: Vec<DMatrix<f64>>,
    lo: f64,
    hi: f64,
}

/// Per-mode `A_μ` plus the spectral interval they actually occupy.
fn a_factors(p: &ModelParams, rng: &mut ChaCha8Rng, positive: bool, shared: bool) -> Result<Factors> {
    let d = p.dims.len();
    if let Some(diags) = &p.diagonals {
        if diags.len() != 1 && diags.len() != d {
            return Err(Error::Config(format!("expected 1 or {d} diagonals, got {}", diags.len())));
        }
        let mats: Vec<DMatrix<f64>> = (0..d)
            .map(|mu| DMatrix::from_diagonal(&DVector::from_row_slice(if diags.len() == 1 { &diags[0] } else { &diags[mu] })))
            .collect();
        return finish_explicit(mats, &p.dims, "A", positive);
    }
    if let Some(list) = &p.a {
        if list.len() != 1 && list.len() != d {
            return Err(Error::Config(format!("expected 1 or {d} A factors, got {}", list.len())));
        }
        let mats = (0..d).map(|mu| pick(list, mu).clone()).collect();
        return finish_explicit(mats, &p.dims, "A", positive);
    }
    let (lo, hi) = p.a_interval;
    if !(lo <= hi) || (positive && lo <= 0.0) {
        return Err(Error::Construction(format!(
            "A spectral interval ({lo}, {hi}) must satisfy 0 < lo <= hi"
        )));
    }
    let mats = if shared {
        let m = random_symmetric(p.dims[0], lo, hi, rng);
        vec![m; d]
    } else {
        p.dims.iter().map(|&n| random_symmetric(n, lo, hi, rng)).collect()
    };
    Ok(Factors { mats, lo, hi })
}

fn finish_explicit(mats: Vec<DMatrix<f64>>, dims: &[usize], name: &str, positive: bool) -> Result<Factors> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (mu, m) in mats.iter().enumerate() {
        let label = format!("{name}_{}", mu + 1);
        if m.nrows() != dims[mu] || !m.is_square() {
            return Err(Error::ShapeMismatch {
                expected: vec![dims[mu], dims[mu]],
                found: vec![m.nrows(), m.ncols()],
            });
        }
        check_symmetric(m, &label)?;
        let (l, h) = extremes(m);
        if positive && l <= 0.0 {
            return Err(Error::Construction(format!("{label} is not positive definite (min eigenvalue {l:e})")));
        }
        lo = lo.min(l);
        hi = hi.max(h);
    }
    Ok(Factors { mats, lo, hi })
}

/// Interaction factors for modes `modes`, spectrum in `[0, max]`.
fn psd_factors(
    explicit: Option<&Vec<DMatrix<f64>>>,
    dims: &[usize],
    modes: &[usize],
    max: f64,
    name: &str,
    rng: &mut ChaCha8Rng,
) -> Result<Factors> {
    match explicit {
        Some(list) => {
            if list.len() != 1 && list.len() != modes.len() {
                return Err(Error::Config(format!(
                    "expected 1 or {} {name} factors, got {}",
                    modes.len(),
                    list.len()
                )));
            }
            let mut mats = Vec::with_capacity(modes.len());
            let mut hi: f64 = 0.0;
            for (k, &mu) in modes.iter().enumerate() {
                let m = pick(list, k).clone();
                let label = format!("{name}_{}", mu + 1);
                if m.nrows() != dims[mu] || !m.is_square() {
                    return Err(Error::ShapeMismatch {
                        expected: vec![dims[mu], dims[mu]],
                        found: vec![m.nrows(), m.ncols()],
                    });
                }
                check_symmetric(&m, &label)?;
                let (l, h) = extremes(&m);
                if l < -SYMMETRY_TOL * h.abs().max(1.0) {
                    return Err(Error::FactorNotPsd(label));
                }
                hi = hi.max(h);
                mats.push(m);
            }
            Ok(Factors { mats, lo: 0.0, hi })
        }
        None => {
            if !(max >= 0.0) {
                return Err(Error::Construction(format!("{name} bound {max} must be >= 0")));
            }
            let mats = modes.iter().map(|&mu| random_psd(dims[mu], max, rng)).collect();
            Ok(Factors { mats, lo: 0.0, hi: max })
        }
    }
}

/// Builds one of the model operators, declared symmetric and, for the
/// Laplace and Lyapunov families, carrying analytic spectral bounds.
pub fn build_model(kind: ModelKind, p: &ModelParams) -> Result<KronSumOperator> {
    let dims = p.dims.clone();
    let d = dims.len();
    crate::tensor::Tensor::zeros(&dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let needs_pairs = matches!(kind, ModelKind::NnInteraction | ModelKind::LaplacePlusNn);
    if needs_pairs && d < 2 {
        return Err(Error::InvalidDims(format!("{} needs order >= 2", kind.name())));
    }
    if matches!(kind, ModelKind::Lyapunov | ModelKind::GeneralizedLyapunov) && d != 2 {
        return Err(Error::InvalidDims(format!("{} needs order 2, got {d}", kind.name())));
    }
    if matches!(kind, ModelKind::Lyapunov | ModelKind::GeneralizedLyapunov) && dims[0] != dims[1] {
        return Err(Error::InvalidDims(format!("{} needs equal mode sizes", kind.name())));
    }

    let mut terms = Vec::new();
    let bounds = match kind {
        ModelKind::LaplaceLike | ModelKind::DiagonalTest | ModelKind::Lyapunov => {
            if kind == ModelKind::DiagonalTest && p.diagonals.is_none() && p.a.is_none() {
                // random diagonal entries with both interval endpoints present
                let (lo, hi) = p.a_interval;
                let diags: Vec<Vec<f64>> = dims
                    .iter()
                    .map(|&n| {
                        (0..n)
                            .map(|i| match i {
                                0 => lo,
                                1 => hi,
                                _ => rng.random_range(lo..=hi),
                            })
                            .collect()
                    })
                    .collect();
                let mut q = p.clone();
                q.diagonals = Some(diags);
                return build_model(kind, &q);
            }
            let a = a_factors(p, &mut rng, kind != ModelKind::DiagonalTest, kind == ModelKind::Lyapunov)?;
            for (mu, m) in a.mats.iter().enumerate() {
                terms.push(ElementaryOp::single(&dims, mu, m.clone())?);
            }
            if kind == ModelKind::DiagonalTest {
                let lo: f64 = a.mats.iter().map(|m| m.diagonal().min()).sum();
                let hi: f64 = a.mats.iter().map(|m| m.diagonal().max()).sum();
                Some(AnalyticBounds {
                    gamma: lo,
                    big_gamma: hi,
                    note: "sums of extreme diagonal entries".into(),
                })
            } else {
                Some(AnalyticBounds {
                    gamma: d as f64 * a.lo,
                    big_gamma: d as f64 * a.hi,
                    note: format!("d*gamma_A, d*Gamma_A with gamma_A={}, Gamma_A={}", a.lo, a.hi),
                })
            }
        }
        ModelKind::NnInteraction | ModelKind::LaplacePlusNn => {
            let a = if kind == ModelKind::LaplacePlusNn {
                let a = a_factors(p, &mut rng, true, false)?;
                for (mu, m) in a.mats.iter().enumerate() {
                    terms.push(ElementaryOp::single(&dims, mu, m.clone())?);
                }
                Some(a)
            } else {
                None
            };
            let left: Vec<usize> = (0..d - 1).collect();
            let right: Vec<usize> = (1..d).collect();
            let b = psd_factors(p.b.as_ref(), &dims, &left, p.b_max, "B", &mut rng)?;
            let c = psd_factors(p.c.as_ref(), &dims, &right, p.c_max, "C", &mut rng)?;
            for mu in 0..d - 1 {
                terms.push(ElementaryOp::pair(&dims, mu, b.mats[mu].clone(), c.mats[mu].clone())?);
            }
            a.map(|a| AnalyticBounds {
                gamma: d as f64 * a.lo,
                big_gamma: d as f64 * a.hi + (d - 1) as f64 * b.hi * c.hi,
                note: format!(
                    "d*gamma_A, d*Gamma_A + (d-1)*Gamma_B*Gamma_C with gamma_A={}, Gamma_A={}, Gamma_B={}, Gamma_C={}",
                    a.lo, a.hi, b.hi, c.hi
                ),
            })
        }
        ModelKind::GeneralizedLyapunov => {
            let a = a_factors(p, &mut rng, true, true)?;
            for (mu, m) in a.mats.iter().enumerate() {
                terms.push(ElementaryOp::single(&dims, mu, m.clone())?);
            }
            let c = psd_factors(p.c.as_ref(), &dims, &[0], p.c_max, "C", &mut rng)?;
            let cm = c.mats[0].clone();
            terms.push(ElementaryOp::new(vec![cm.clone(), cm])?);
            Some(AnalyticBounds {
                gamma: 2.0 * a.lo,
                big_gamma: 2.0 * a.hi + c.hi * c.hi,
                note: format!("2*gamma_A, 2*Gamma_A + Gamma_C^2 with Gamma_C={}", c.hi),
            })
        }
    };

    let op = KronSumOperator::new(dims, terms)?.declare_symmetric(p.seed ^ 0x9e37_79b9)?;
    Ok(match bounds {
        Some(b) => op.with_analytic_bounds(b),
        None => op,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kron::spectral_interval;
    use crate::tensor::Tensor;

    #[test]
    fn laplace_like_two_terms_with_flags() {
        let mut p = ModelParams::new(vec![2, 2]);
        p.diagonals = Some(vec![vec![1.0, 2.0]]);
        let op = build_model(ModelKind::LaplaceLike, &p).unwrap();
        assert_eq!(op.terms().len(), 2);
        for term in op.terms() {
            assert_eq!(term.identity_flags().iter().filter(|&&f| f).count(), 1);
        }
    }

    #[test]
    fn laplace_plus_nn_term_count() {
        let p = ModelParams::new(vec![2; 5]);
        let op = build_model(ModelKind::LaplacePlusNn, &p).unwrap();
        assert_eq!(op.terms().len(), 9);
    }

    #[test]
    fn analytic_bounds_contain_spectrum() {
        let mut p = ModelParams::new(vec![3, 2, 3]);
        p.seed = 17;
        let op = build_model(ModelKind::LaplacePlusNn, &p).unwrap();
        let b = op.analytic_bounds().unwrap();
        assert_eq!(b.gamma, 3.0);
        assert_eq!(b.big_gamma, 3.0 * 2.0 + 2.0);
        let s = spectral_interval(&op).unwrap();
        assert!(s.computed.0 >= b.gamma - 1e-12 && s.computed.1 <= b.big_gamma + 1e-12);
    }

    #[test]
    fn random_symmetric_hits_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_symmetric(5, 1.0, 3.0, &mut rng);
        let (lo, hi) = extremes(&m);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
        assert_eq!(random_symmetric(3, 2.0, 2.0, &mut rng), DMatrix::identity(3, 3) * 2.0);
    }

    #[test]
    fn non_symmetric_factor_rejected() {
        let mut p = ModelParams::new(vec![2, 2]);
        p.a = Some(vec![DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0])]);
        assert!(matches!(
            build_model(ModelKind::Lyapunov, &p),
            Err(Error::FactorNotSymmetric(_))
        ));
    }

    #[test]
    fn indefinite_interaction_rejected() {
        let mut p = ModelParams::new(vec![2, 2]);
        p.b = Some(vec![DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, -1.0]))]);
        assert!(matches!(
            build_model(ModelKind::LaplacePlusNn, &p),
            Err(Error::FactorNotPsd(_))
        ));
    }

    #[test]
    fn generalized_lyapunov_matches_matrix_equation() {
        let mut p = ModelParams::new(vec![3, 3]);
        p.seed = 9;
        let op = build_model(ModelKind::GeneralizedLyapunov, &p).unwrap();
        let a = op.terms()[0].factors()[0].clone();
        let c = op.terms()[2].factors()[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let u = Tensor::random(&[3, 3], &mut rng).unwrap();
        let um = DMatrix::from_row_slice(3, 3, u.data());
        let expect = &a * &um + &um * a.transpose() + &c * &um * c.transpose();
        let got = op.apply(&u).unwrap();
        let gm = DMatrix::from_row_slice(3, 3, got.data());
        assert!((gm - expect).norm() < 1e-12);
    }

    #[test]
    fn order_checks() {
        let p = ModelParams::new(vec![2, 2, 2]);
        assert!(build_model(ModelKind::Lyapunov, &p).is_err());
        let p = ModelParams::new(vec![3]);
        assert!(build_model(ModelKind::NnInteraction, &p).is_err());
    }

    #[test]
    fn csv_loading() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "1, 2\n2, 5\n").unwrap();
        let m = load_matrix_csv(&path).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]));
        std::fs::write(&path, "1,2,3\n4,5,6\n").unwrap();
        assert!(matches!(load_matrix_csv(&path), Err(Error::Csv { .. })));
    }
}
