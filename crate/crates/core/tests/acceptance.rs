//! End-to-end acceptance sweeps at contract scale. Each test prints one
//! pass/fail line for its criterion; tolerances and trial counts are the
//! pinned values from the verification suites.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use quow::report::Check;
use quow::suites;

struct SweepResult {
    checks: Vec<Check>,
    elapsed: Duration,
}

fn lift_sweep_result() -> &'static SweepResult {
    static RESULT: OnceLock<SweepResult> = OnceLock::new();
    RESULT.get_or_init(|| {
        let start = Instant::now();
        let checks = suites::lift_sweep(2024, 504).expect("lift sweep runs");
        SweepResult { checks, elapsed: start.elapsed() }
    })
}

fn named<'a>(checks: &'a [Check], names: &[&str]) -> Vec<&'a Check> {
    let picked: Vec<&Check> = checks.iter().filter(|c| names.contains(&c.name.as_str())).collect();
    assert_eq!(picked.len(), names.len(), "missing checks among {names:?}");
    picked
}

fn conclude(criterion: &str, picked: &[&Check], elapsed: Option<Duration>) {
    let pass = picked.iter().all(|c| c.pass);
    let worst = picked
        .iter()
        .map(|c| c.diff)
        .fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    let timing = match elapsed {
        Some(d) => format!(", {:.2} s", d.as_secs_f64()),
        None => String::new(),
    };
    println!(
        "criterion {criterion}: {} [worst diff {worst:.3e}{timing}]",
        if pass { "PASS" } else { "FAIL" }
    );
    for check in picked {
        assert!(
            check.pass,
            "{}: diff {:.6e} exceeds tolerance {:.3e} (lhs {:.17e}, rhs {:.17e})",
            check.name, check.diff, check.tolerance, check.lhs, check.rhs
        );
    }
}

#[test]
fn criterion_1_lift_isometry() {
    let sweep = lift_sweep_result();
    let picked = named(&sweep.checks, &["lift_isometry"]);
    conclude("1 (lift isometry, 504 instances)", &picked, Some(sweep.elapsed));
    assert!(
        sweep.elapsed < Duration::from_secs(60),
        "lift sweep took {:.1} s, budget is 60 s",
        sweep.elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_2_lifted_coupling_optimality() {
    let sweep = lift_sweep_result();
    let picked = named(&sweep.checks, &["lifted_coupling_cost", "lifted_coupling_support"]);
    conclude("2 (lifted coupling optimality and support)", &picked, None);
}

#[test]
fn criterion_3_transform_lift_commutation() {
    let sweep = lift_sweep_result();
    let picked = named(&sweep.checks, &["transform_lift_commutation"]);
    conclude("3 (transform/lift commutation, 1008 draws)", &picked, None);
}

#[test]
fn criterion_4_cd_comparison_transfer() {
    let start = Instant::now();
    let checks = suites::cd_sweep(2025, 200).expect("cd sweep runs");
    let picked = named(&checks, &["cd_rhs_equality", "entropy_lift_exact", "renyi_lift_exact"]);
    conclude("4 (curvature-dimension comparison transfer, 200 draws)", &picked, Some(start.elapsed()));
}

#[test]
fn criterion_5_coarse_curvature_preservation() {
    let start = Instant::now();
    let checks = suites::ollivier_sweep(2026, 504).expect("ollivier sweep runs");
    let picked = named(
        &checks,
        &[
            "ollivier_preservation",
            "identity_chain_curvature",
            "identity_quotient_curvature",
            "mixing_chain_curvature",
            "mixing_quotient_curvature",
        ],
    );
    conclude("5 (coarse curvature preservation, 504 chains)", &picked, Some(start.elapsed()));
}

#[test]
fn criterion_6_graph_calculus_identities() {
    let start = Instant::now();
    let mut checks = suites::graph_identity_sweep(2027, 1000).expect("identity sweep runs");
    checks.extend(suites::curvature_oracle_sweep(2028).expect("oracle sweep runs"));
    let picked = named(
        &checks,
        &[
            "product_rule_defect",
            "divergence_defect",
            "edge_curvature_closed_form",
            "sampling_oracle_agreement",
            "sampling_oracle_coverage",
        ],
    );
    conclude("6 (graph calculus identities and oracles, 1000 draws)", &picked, Some(start.elapsed()));
}

#[test]
fn criterion_7_graph_quotient_preservation() {
    let start = Instant::now();
    let checks = suites::graph_quotient_sweep(2029, 24).expect("graph quotient sweep runs");
    let picked = named(
        &checks,
        &[
            "operator_lift_commutation",
            "lp_norm_isometry",
            "sobolev_norm_isometry",
            "dirichlet_energy_isometry",
            "graph_cd_preservation",
        ],
    );
    conclude("7 (graph quotient commutation and preservation)", &picked, Some(start.elapsed()));
}

#[test]
fn criterion_8_flow_metric() {
    let start = Instant::now();
    let checks = suites::flow_sweep(2030, 1000).expect("flow sweep runs");
    let elapsed = start.elapsed();
    let picked = named(
        &checks,
        &[
            "log_mean_quadrature",
            "action_midpoint_convexity",
            "group_average_monotonicity",
            "flow_entropy_lift",
            "grid_refinement_monotone",
            "two_state_oracle_agreement",
            "flow_quotient_isometry",
            "flow_quotient_entropy_exact",
        ],
    );
    conclude("8 (discrete flow metric, 1000 draws)", &picked, Some(elapsed));
    assert!(
        elapsed < Duration::from_secs(300),
        "flow sweep took {:.1} s, budget is 300 s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_9_foliations() {
    let start = Instant::now();
    let checks = suites::foliation_sweep(2031, 60).expect("foliation sweep runs");
    let picked = named(
        &checks,
        &["submetry", "metric_foliation", "mm_foliation", "mm_foliation_rejects_perturbation"],
    );
    conclude("9 (submetries and foliations, 60 actions)", &picked, Some(start.elapsed()));
}
