//! Full-scale acceptance run. Each test exercises one guaranteed property at
//! its contractual instance count and tolerance, prints a single pass/fail
//! line (visible with `--nocapture`), and asserts the verdict. The reduced
//! `paba verify` command runs the same checks at CLI-friendly sizes.

use std::time::Instant;

use paba_core::config::RunConfig;
use paba_core::sim::{build_scenario, sample_channels};
use paba_core::solvers::joint_paba;
use paba_core::verify::{
    check_capacity_vs_oracle, check_dominance, check_gain_at_70mhz, check_group_equalization,
    check_joint_kkt, check_joint_vs_oracles, check_learning_equivalence, check_marginal_rates,
    check_model_size_monotonicity, check_sweep_determinism, check_sweep_trends,
    check_worker_equalization, PropertyReport,
};

const SEED: u64 = 20_260_815;

fn assert_report(r: &PropertyReport) {
    let status = if r.passed { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {status} {} ({:.2}s) {}", r.name, r.seconds, r.details);
    assert!(r.passed, "{}: {}", r.name, r.details);
}

fn assert_within(r: &PropertyReport, limit_s: f64) {
    assert_report(r);
    assert!(
        r.seconds < limit_s,
        "{} took {:.2}s, limit {limit_s}s",
        r.name,
        r.seconds
    );
}

#[test]
fn a01_group_latencies_equalize_within_1e6_under_5s() {
    assert_within(&check_group_equalization(100, SEED), 5.0);
}

#[test]
fn a02_worker_latencies_equalize_and_budget_binds() {
    assert_report(&check_worker_equalization(100, SEED));
}

#[test]
fn a03_joint_solution_satisfies_kkt_conditions() {
    assert_report(&check_joint_kkt(50, SEED));
}

#[test]
fn a04_model_capacity_strictly_increasing_in_budget() {
    assert_report(&check_model_size_monotonicity(20, 10, SEED));
}

#[test]
fn a05_joint_matches_grid_and_single_worker_oracles_under_2min() {
    assert_within(&check_joint_vs_oracles(25, SEED), 120.0);
}

#[test]
fn a06_capacity_solver_matches_rate_equalization_oracle() {
    assert_report(&check_capacity_vs_oracle(50, SEED));
}

#[test]
fn a07_scheme_dominance_holds_on_every_draw() {
    assert_report(&check_dominance(100, SEED));
}

#[test]
fn a08_joint_gain_at_70mhz_and_sweep_trends() {
    assert_report(&check_gain_at_70mhz(200, SEED));
    for r in check_sweep_trends(100, SEED) {
        assert_report(&r);
    }
}

#[test]
fn a09_distributed_learning_matches_centralized_under_30s() {
    assert_within(&check_learning_equivalence(50, SEED), 30.0);
}

#[test]
fn a10_marginal_rates_match_finite_differences() {
    assert_report(&check_marginal_rates(100, SEED));
}

#[test]
fn a11_default_cell_joint_solve_under_1s() {
    let cfg = RunConfig::default();
    assert_eq!(cfg.solver.bisect_tol_rel, 1e-6);
    let sc = build_scenario(&cfg, 0).unwrap();
    let ch = sample_channels(&sc, 0);
    let started = Instant::now();
    let alloc = joint_paba(&sc.topology, &ch, &sc.params, &cfg.solver).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let passed = elapsed < 1.0;
    let status = if passed { "PASS" } else { "FAIL" };
    println!(
        "ACCEPTANCE {status} default cell joint solve ({elapsed:.3}s) latency {:.4}s, \
         blocks {}",
        alloc.round_latency_s,
        alloc.total_block_len()
    );
    assert_eq!(alloc.total_block_len(), sc.params.total_params);
    assert!(passed, "joint solve took {elapsed:.3}s, limit 1s");
}

#[test]
fn a12_sweeps_are_byte_identical_across_runs() {
    assert_report(&check_sweep_determinism(SEED));
}
