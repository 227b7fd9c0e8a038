//! Experiment reports: measured decays, bound curves, verdicts, and their
//! JSON/CSV serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Mode;
use crate::eigen::TwoStepProbe;
use crate::error::{Error, Result};
use crate::kron::{ModelKind, SpectralSource};
use crate::tensor::Entropy;
use crate::trace::{fmt_real, IterationTrace};

/// Relative slack granted to every dominance comparison.
pub const DOMINANCE_TOL: f64 = 1e-9;

/// Column names of the per-curve CSV files, in order.
pub const CURVE_COLUMNS: [&str; 4] = ["bound_thm21_full", "bound_simplified", "bound_main", "bound_eq27"];

/// Outcome of comparing a measured sequence against a bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub pass: bool,
    /// Per entry; `None` where the bound is not defined.
    pub per_index: Vec<Option<bool>>,
    /// Smallest `bound − measured` over defined entries.
    pub worst_margin: Option<f64>,
    pub worst_index: Option<usize>,
}

/// PASS iff `measured[i] ≤ bound[i]·(1 + 1e-9)` wherever the bound is defined.
pub fn certify_dominance(measured: &[f64], bound: &[Option<f64>]) -> Result<Dominance> {
    if measured.len() != bound.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![measured.len()],
            found: vec![bound.len()],
        });
    }
    let mut per_index = Vec::with_capacity(measured.len());
    let mut worst_margin: Option<f64> = None;
    let mut worst_index = None;
    for (i, (&m, b)) in measured.iter().zip(bound).enumerate() {
        match *b {
            Some(b) => {
                per_index.push(Some(m <= b * (1.0 + DOMINANCE_TOL)));
                let margin = b - m;
                if worst_margin.is_none_or(|w| margin < w) {
                    worst_margin = Some(margin);
                    worst_index = Some(i);
                }
            }
            None => per_index.push(None),
        }
    }
    Ok(Dominance {
        pass: per_index.iter().all(|v| v.unwrap_or(true)),
        per_index,
        worst_margin,
        worst_index,
    })
}

/// Measured quantity a bound curve controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundTarget {
    /// `τ_r`.
    Tail,
    /// `σ_r²`.
    SigmaSquared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub name: String,
    pub target: BoundTarget,
    /// Entry `k` is the bound at `r = k + 1`.
    pub values: Vec<Option<f64>>,
    pub verdict: Dominance,
}

/// Measured decay of one tensor across one splitting plus its bound curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub splitting: String,
    pub chunk: Option<usize>,
    /// `D^(t)`.
    pub max_rank: usize,
    /// `r_A^(t)`.
    pub operator_rank: usize,
    pub identity_refined: bool,
    /// `R^(t)` used by the bounds.
    pub growth: usize,
    pub norm: f64,
    /// `σ_1 … σ_D`.
    pub sigma: Vec<f64>,
    /// `τ_1 … τ_D`.
    pub tau: Vec<f64>,
    pub entropy: Entropy,
    pub theta: f64,
    pub c: f64,
    pub pi1: f64,
    pub q: f64,
    pub bounds: Vec<BoundCurve>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl DecayCurve {
    pub fn sigma_squared(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s * s).collect()
    }

    pub fn bound(&self, name: &str) -> Option<&BoundCurve> {
        self.bounds.iter().find(|b| b.name == name)
    }

    /// Adds a bound curve and certifies it against the matching measurement.
    pub fn push_bound(&mut self, name: &str, target: BoundTarget, values: Vec<Option<f64>>) -> Result<()> {
        let measured = match target {
            BoundTarget::Tail => self.tau.clone(),
            BoundTarget::SigmaSquared => self.sigma_squared(),
        };
        let verdict = certify_dominance(&measured, &values)?;
        self.pass &= verdict.pass;
        self.bounds.push(BoundCurve {
            name: name.to_string(),
            target,
            values,
            verdict,
        });
        Ok(())
    }

    /// File-name fragment, e.g. `t1-2` or `t1-2_chunk2`.
    pub fn file_label(&self) -> String {
        let base = self.splitting.replace('=', "");
        match self.chunk {
            Some(k) => format!("{base}_chunk{k}"),
            None => base,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,measured");
        for col in CURVE_COLUMNS {
            out.push(',');
            out.push_str(col);
        }
        out.push_str(",verdict\n");
        for k in 0..self.tau.len() {
            let _ = write!(out, "{},{}", k + 1, fmt_real(self.tau[k]));
            for col in CURVE_COLUMNS {
                let cell = self
                    .bound(col)
                    .and_then(|b| b.values[k])
                    .map(fmt_real)
                    .unwrap_or_default();
                let _ = write!(out, ",{cell}");
            }
            let ok = self
                .bounds
                .iter()
                .all(|b| b.verdict.per_index[k].unwrap_or(true));
            let _ = writeln!(out, ",{}", if ok { "PASS" } else { "FAIL" });
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub gamma: f64,
    pub big_gamma: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub q: f64,
    pub source: SpectralSource,
    pub computed: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub lambda1: f64,
    pub lambda2: f64,
    pub big_gamma: f64,
    pub delta: f64,
    pub rel_gap: f64,
    pub beta: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub kappa: f64,
    pub q: f64,
    /// `(Γ_A + Γ_B Γ_C)/γ_A`.
    pub kappa_cap: f64,
    /// `|ln q / ln 5|`; `None` when `q = 0`.
    pub exponent_general: Option<f64>,
    /// `|ln q / ln 4|`; `None` when `q = 0`.
    pub exponent_refined: Option<f64>,
    pub max_operator_rank: usize,
    pub reshuffled_max_rank: Option<usize>,
    pub median_splitting: String,
    pub median_tau: Option<Vec<f64>>,
    pub median_dominance: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepSummary {
    pub instances: usize,
    pub samples: usize,
    pub n: usize,
    pub max_one_step: f64,
    pub max_two_step: f64,
    pub claimed_cap: usize,
    pub naive_cap: usize,
    pub per_instance: Vec<TwoStepProbe>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub name: String,
    pub prefix: String,
    pub mode: Mode,
    pub kind: Option<ModelKind>,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub n_steps: usize,
    pub eps_rank: f64,
    pub version: String,
    /// ISO-8601 creation time; the only field that varies between identical runs.
    pub timestamp: Option<String>,
    pub spectral: Option<SpectralSummary>,
    pub eigen: Option<EigenSummary>,
    pub curves: Vec<DecayCurve>,
    pub trace: Option<IterationTrace>,
    pub checks: Vec<Check>,
    pub sweep: Option<Vec<SweepRow>>,
    pub two_step: Option<TwoStepSummary>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl DecayReport {
    pub fn new(name: String, prefix: String, mode: Mode, dims: Vec<usize>, seed: u64) -> DecayReport {
        DecayReport {
            name,
            prefix,
            mode,
            kind: None,
            dims,
            seed,
            n_steps: 0,
            eps_rank: 0.0,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
            spectral: None,
            eigen: None,
            curves: Vec::new(),
            trace: None,
            checks: Vec::new(),
            sweep: None,
            two_step: None,
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, pass, detail));
    }

    /// Recomputes the overall verdict from checks and curves.
    pub fn finalize(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass) && self.curves.iter().all(|c| c.pass);
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.clone())
            .collect();
        for c in &self.curves {
            for b in &c.bounds {
                if !b.verdict.pass {
                    out.push(format!("{}:{}", c.file_label(), b.name));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("serializing report: {e}")))
    }

    pub fn sweep_csv(&self) -> Option<String> {
        let rows = self.sweep.as_ref()?;
        let mut out = String::from(
            "d,kappa,q,kappa_cap,exponent_general,exponent_refined,max_operator_rank,reshuffled_max_rank,median_dominance\n",
        );
        for r in rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.d,
                fmt_real(r.kappa),
                fmt_real(r.q),
                fmt_real(r.kappa_cap),
                r.exponent_general.map(fmt_real).unwrap_or_default(),
                r.exponent_refined.map(fmt_real).unwrap_or_default(),
                r.max_operator_rank,
                r.reshuffled_max_rank.map(|x| x.to_string()).unwrap_or_default(),
                r.median_dominance
                    .map(|p| if p { "PASS" } else { "FAIL" })
                    .unwrap_or_default(),
            );
        }
        Some(out)
    }

    /// Writes `<prefix>.json` plus one CSV per curve, the trace and the sweep
    /// table when present. Returns the written paths in order.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut files: Vec<(PathBuf, String)> = vec![(dir.join(format!("{}.json", self.prefix)), self.to_json()?)];
        for c in &self.curves {
            files.push((dir.join(format!("{}_{}.csv", self.prefix, c.file_label())), c.to_csv()));
        }
        if let Some(trace) = &self.trace {
            files.push((dir.join(format!("{}_trace.csv", self.prefix)), trace.to_csv()));
        }
        if let Some(table) = self.sweep_csv() {
            files.push((dir.join(format!("{}_sweep.csv", self.prefix)), table));
        }
        let mut written = Vec::with_capacity(files.len());
        for (path, text) in files {
            fs::write(&path, text).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_curves_pass_with_zero_margin() {
        let d = certify_dominance(&[1.0, 0.5], &[Some(1.0), Some(0.5)]).unwrap();
        assert!(d.pass);
        assert_eq!(d.worst_margin, Some(0.0));
    }

    #[test]
    fn small_excess_fails_at_that_index() {
        let d = certify_dominance(&[1.0, 0.5 * (1.0 + 1e-6)], &[Some(2.0), Some(0.5)]).unwrap();
        assert!(!d.pass);
        assert_eq!(d.per_index, vec![Some(true), Some(false)]);
        assert_eq!(d.worst_index, Some(1));
        // excess within the tolerance passes
        assert!(certify_dominance(&[1.0 + 1e-12], &[Some(1.0)]).unwrap().pass);
    }

    #[test]
    fn undefined_entries_are_skipped() {
        let d = certify_dominance(&[5.0, 1.0], &[None, Some(2.0)]).unwrap();
        assert!(d.pass);
        assert_eq!(d.per_index[0], None);
        assert!(certify_dominance(&[1.0], &[]).is_err());
    }

    fn curve() -> DecayCurve {
        DecayCurve {
            splitting: "t=1".into(),
            chunk: None,
            max_rank: 2,
            operator_rank: 2,
            identity_refined: true,
            growth: 3,
            norm: 1.0,
            sigma: vec![0.9, 0.1],
            tau: vec![0.1, 0.0],
            entropy: Entropy::from_normalized_squares([0.81, 0.01]),
            theta: 0.9,
            c: 1.0,
            pi1: 1.0,
            q: 0.5,
            bounds: vec![],
            notes: vec![],
            pass: true,
        }
    }

    #[test]
    fn curve_csv() {
        let mut c = curve();
        c.push_bound("bound_main", BoundTarget::Tail, vec![Some(0.2), Some(0.1)]).unwrap();
        c.push_bound("bound_eq27", BoundTarget::SigmaSquared, vec![None, Some(0.001)]).unwrap();
        assert!(!c.pass);
        assert_eq!(
            c.to_csv(),
            "r,measured,bound_thm21_full,bound_simplified,bound_main,bound_eq27,verdict\n\
             1,1e-1,,,2e-1,,PASS\n\
             2,0e0,,,1e-1,1e-3,FAIL\n"
        );
        assert_eq!(c.file_label(), "t1");
    }

    #[test]
    fn write_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = DecayReport::new("x".into(), "x".into(), Mode::Linear, vec![2, 2], 0);
        r.curves.push(curve());
        r.check("ok", true, "");
        r.finalize();
        let files = r.write(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let back: DecayReport = serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(back.curves[0].sigma, vec![0.9, 0.1]);
        assert!(back.pass);
    }
}
