use lowrank_core::lab::{run_experiment, run_spectrum, DecayReport, ExperimentConfig};
use lowrank_core::Error;

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

fn assert_pass(report: &DecayReport) {
    assert!(report.pass, "{} failed: {:#?}", report.name, report.failures());
}

const LYAPUNOV: &str = r#"{
    "name": "lyapunov",
    "mode": "linear",
    "problem": { "kind": "lyapunov", "dims": [4, 4], "diagonals": [[1, 2, 3, 4]] },
    "rhs": { "kind": "random_rank_one" },
    "seed": 7
}"#;

#[test]
fn lyapunov_fixture_passes() {
    let report = run_experiment(&config(LYAPUNOV)).unwrap();
    assert_pass(&report);
    let s = report.spectral.as_ref().unwrap();
    assert!((s.kappa - 4.0).abs() < 1e-12);
    assert!((s.q - 0.6).abs() < 1e-12);
    let curve = &report.curves[0];
    assert_eq!(curve.growth, 3);
    assert!(curve.bound("bound_main").is_some());
}

#[test]
fn identity_operator_converges_in_one_step() {
    let cfg = config(
        r#"{
        "mode": "linear",
        "problem": { "kind": "diagonal_test", "dims": [3, 3], "diagonals": [[0.5, 0.5, 0.5]] },
        "rhs": { "kind": "random_rank_one", "terms": 2 },
        "seed": 3
    }"#,
    );
    let report = run_experiment(&cfg).unwrap();
    assert_pass(&report);
    assert_eq!(report.spectral.as_ref().unwrap().q, 0.0);
    assert!(report.notes.iter().any(|n| n.contains("one step")));
    let trace = report.trace.as_ref().unwrap();
    assert!(trace.steps[1].error <= 1e-14 * trace.steps[0].error);
}

#[test]
fn laplace_plus_nn_all_tt_splittings_pass() {
    let cfg = config(
        r#"{
        "mode": "linear",
        "problem": { "kind": "laplace_plus_nn", "dims": [2, 2, 2, 2], "seed": 11 },
        "rhs": { "kind": "random_rank_one" },
        "seed": 5
    }"#,
    );
    let report = run_experiment(&cfg).unwrap();
    assert_pass(&report);
    let labels: Vec<&str> = report.curves.iter().map(|c| c.splitting.as_str()).collect();
    assert_eq!(labels, ["t=1", "t=1-2", "t=1-2-3"]);
}

#[test]
fn wide_rhs_needs_chunks() {
    let json = r#"{
        "mode": "linear",
        "problem": { "kind": "lyapunov", "dims": [4, 4], "diagonals": [[1, 2, 3, 4]] },
        "rhs": { "kind": "random_rank_one", "terms": 4 },
        "seed": 1
    }"#;
    assert!(matches!(run_experiment(&config(json)), Err(Error::Config(_))));
    let chunked = json.replace("\"terms\": 4", "\"terms\": 4, \"chunk\": 2");
    let report = run_experiment(&config(&chunked)).unwrap();
    assert_pass(&report);
    assert_eq!(report.curves.len(), 2);
    assert_eq!(report.curves[1].chunk, Some(2));
}

#[test]
fn commuting_runs_pass_on_d3_and_d4() {
    for dims in ["[2, 2, 2]", "[3, 3, 3, 3]"] {
        let cfg = config(&format!(
            r#"{{
            "mode": "commuting",
            "problem": {{ "kind": "laplace_like", "dims": {dims}, "seed": 2 }},
            "rhs": {{ "kind": "random_rank_one" }},
            "seed": 9
        }}"#
        ));
        let report = run_experiment(&cfg).unwrap();
        assert_pass(&report);
        assert!(report.checks.iter().any(|c| c.name.starts_with("geometric_decay")));
    }
}

#[test]
fn commuting_rejects_interaction() {
    let cfg = config(
        r#"{ "mode": "commuting", "problem": { "kind": "laplace_plus_nn", "dims": [2, 2, 2] } }"#,
    );
    assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
}

#[test]
fn eigen_diagonal_eigenvector_is_rank_one() {
    let cfg = config(
        r#"{
        "mode": "eigen",
        "problem": { "kind": "diagonal_test", "dims": [3, 3], "diagonals": [[1, 3, 5], [1, 4, 6]] },
        "seed": 4
    }"#,
    );
    let report = run_experiment(&cfg).unwrap();
    assert_pass(&report);
    assert!(report.curves[0].tau.iter().all(|&t| t == 0.0));
}

#[test]
fn eigen_weak_interaction_exercises_overlap_bound() {
    let cfg = config(
        r#"{
        "mode": "eigen",
        "problem": { "kind": "laplace_plus_nn", "dims": [2, 2, 2], "diagonals": [[1, 4]], "b_max": 0.05, "c_max": 0.05, "seed": 8 },
        "seed": 4
    }"#,
    );
    let report = run_experiment(&cfg).unwrap();
    assert_pass(&report);
    assert!(report.curves.iter().all(|c| c.bound("bound_overlap").is_some()), "{:#?}", report.curves.iter().map(|c| &c.notes).collect::<Vec<_>>());
}

#[test]
fn eigen_random_two_term_operator() {
    let cfg = config(
        r#"{
        "mode": "eigen",
        "problem": { "kind": "laplace_like", "dims": [4, 4], "seed": 21 },
        "seed": 6
    }"#,
    );
    assert_pass(&run_experiment(&cfg).unwrap());
}

#[test]
fn degenerate_eigenvalue_is_reported() {
    let cfg = config(
        r#"{ "mode": "eigen", "problem": { "kind": "diagonal_test", "dims": [2, 2], "diagonals": [[1, 1]] } }"#,
    );
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(err.reason(), "lambda1_degenerate");
}

#[test]
fn sweep_matches_condition_number_formula() {
    let cfg = config(
        r#"{
        "mode": "d_sweep",
        "problem": { "kind": "laplace_plus_nn", "dims": [2, 2], "a_interval": [1, 2], "b_max": 1, "c_max": 1 },
        "sweep": { "d_list": [2, 3, 4, 5, 6, 7, 8] },
        "seed": 1
    }"#,
    );
    let report = run_experiment(&cfg).unwrap();
    assert_pass(&report);
    for row in report.sweep.as_ref().unwrap() {
        let d = row.d as f64;
        assert!((row.kappa - (3.0 - 1.0 / d)).abs() < 1e-12, "d = {d}: {}", row.kappa);
        let q = row.q;
        let expected = (q.ln() / 5f64.ln()).abs();
        assert!((row.exponent_general.unwrap() - expected).abs() <= 1e-14 * expected);
    }
}

#[test]
fn sweep_scalar_blocks_have_unit_condition_number() {
    let cfg = config(
        r#"{
        "mode": "d_sweep",
        "problem": { "kind": "laplace_plus_nn", "dims": [2, 2], "a_interval": [1, 1], "b_max": 0, "c_max": 0 },
        "sweep": { "d_list": [2, 3, 4] }
    }"#,
    );
    let report = run_experiment(&cfg).unwrap();
    assert_pass(&report);
    assert!(report.sweep.as_ref().unwrap().iter().all(|r| r.kappa == 1.0));
}

#[test]
fn two_step_factors_stay_below_caps() {
    let cfg = config(
        r#"{ "mode": "two_step", "problem": { "kind": "generalized_lyapunov", "dims": [5, 5] }, "two_step": { "instances": 5 }, "seed": 12 }"#,
    );
    let report = run_experiment(&cfg).unwrap();
    assert_pass(&report);
    let s = report.two_step.as_ref().unwrap();
    assert!(s.max_two_step <= 6.0 && s.max_one_step <= 3.0);
}

#[test]
fn spectrum_only_has_no_bounds() {
    let report = run_spectrum(&config(LYAPUNOV)).unwrap();
    assert!(report.curves.iter().all(|c| c.bounds.is_empty()));
    let c = &report.curves[0];
    let sq: f64 = c.sigma.iter().map(|s| s * s).sum();
    assert!((sq.sqrt() - c.norm).abs() <= 1e-12 * c.norm);
}

#[test]
fn reports_are_reproducible() {
    let a = run_experiment(&config(LYAPUNOV)).unwrap().to_json().unwrap();
    let b = run_experiment(&config(LYAPUNOV)).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}
