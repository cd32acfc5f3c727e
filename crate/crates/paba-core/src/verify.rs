//! Verification suites: executable statements of the properties the solvers
//! are supposed to have, with the observed deviations reported back. The
//! `verify` subcommand runs them on freshly sampled instances; the
//! acceptance tests run them at full scale.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, Scheme};
use crate::error::Result;
use crate::learning::{
    centralized_step, default_step_size, distributed_round, objective, synthetic_dataset,
    LearningTask, LossKind, ModelState, RegKind,
};
use crate::model::{
    push_latency, worker_latency, ChannelState, GroupTopology, RateTable, SystemParams,
    WorkerProfile,
};
use crate::oracle::{finite_diff_rate, grid_search_joint, rate_equalization_p6, GridSpec};
use crate::sim;
use crate::sim::{build_scenario, sample_channels, solve_scheme, Axis};
use crate::solvers::rates::group_saturation_b;
use crate::solvers::{
    baseline_allocation, bw_aware_param_alloc, group_b_max, group_bw_rate, joint_paba,
    model_size_max, param_aware_bw_alloc, round_blocks, single_worker_special, CostModel,
    SolverOptions,
};

/// Outcome of one verified property.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

fn report(
    suite: &'static str,
    name: &'static str,
    started: Instant,
    outcome: Result<(bool, String)>,
) -> PropertyReport {
    let (passed, details) = match outcome {
        Ok((passed, details)) => (passed, details),
        Err(e) => (false, format!("failed to evaluate: {e}")),
    };
    PropertyReport { suite, name, passed, details, seconds: started.elapsed().as_secs_f64() }
}

/// A randomly generated allocation problem with moderate cost spreads:
/// per-parameter compute times span two decades and per-parameter upload
/// times span `0.05..5` seconds at full bandwidth, so every worker is alive
/// and no solver boundary case dominates by construction.
pub struct TestInstance {
    pub topology: GroupTopology,
    pub channels: ChannelState,
    pub params: SystemParams,
}

pub fn random_instance(
    seed: u64,
    groups: std::ops::RangeInclusive<usize>,
    workers_per_group: std::ops::RangeInclusive<usize>,
    total_params: std::ops::RangeInclusive<u64>,
) -> TestInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
    let k = rng.gen_range(groups);
    let params = SystemParams {
        bandwidth_hz: 1.0,
        ap_tx_power_w: 1.0,
        worker_tx_power_w: 1.0,
        noise_variance_w: 1.0,
        bits_per_param: 0.01,
        bits_per_gradient: 1.0,
        total_params: rng.gen_range(total_params),
        server_update_time_s: rng.gen_range(0.001..0.1),
        ops_per_param_sample: 1.0,
    };
    let mut topo = Vec::with_capacity(k);
    let mut down = Vec::with_capacity(k);
    let mut up = Vec::with_capacity(k);
    for _ in 0..k {
        let n = rng.gen_range(workers_per_group.clone());
        let mut workers = Vec::with_capacity(n);
        let mut d_row = Vec::with_capacity(n);
        let mut u_row = Vec::with_capacity(n);
        for _ in 0..n {
            // Seconds per parameter of compute, and of upload at full bandwidth.
            let compute = 10f64.powf(rng.gen_range(-2.0..0.0));
            let upload = 10f64.powf(rng.gen_range(-1.3..0.7));
            workers.push(WorkerProfile { cpu_freq_hz: 1.0 / compute, data_samples: 1 });
            // Uplink spectral efficiency 1/upload, via the Shannon inverse.
            u_row.push(2f64.powf(1.0 / upload) - 1.0);
            d_row.push(10f64.powf(rng.gen_range(0.0..3.0)));
        }
        topo.push(workers);
        down.push(d_row);
        up.push(u_row);
    }
    TestInstance {
        topology: GroupTopology::new(topo).expect("generated topology is valid"),
        channels: ChannelState { downlink_gain: down, uplink_gain: up },
        params,
    }
}

/// Feasible random bandwidth shares: positive everywhere, summing below one.
fn random_bw_ratios(rng: &mut impl Rng, topology: &GroupTopology) -> Vec<Vec<f64>> {
    let raw: Vec<Vec<f64>> = topology
        .groups
        .iter()
        .map(|g| (0..g.len()).map(|_| rng.gen_range(0.05..1.0)).collect())
        .collect();
    let total: f64 = raw.iter().flatten().sum();
    let scale = rng.gen_range(0.5..1.0) / total;
    raw.into_iter().map(|row| row.into_iter().map(|v| v * scale).collect()).collect()
}

fn random_block_lens(rng: &mut impl Rng, num_groups: usize, total: u64) -> Result<Vec<u64>> {
    let w: Vec<f64> = (0..num_groups).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    let relaxed: Vec<f64> = w.iter().map(|v| v / s * total as f64).collect();
    round_blocks(&relaxed, total)
}

/// With the bandwidth shares fixed, the optimal parameter split makes every
/// group finish at the same moment.
pub fn check_group_equalization(instances: u64, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0_f64;
        for i in 0..instances {
            let inst = random_instance(seed + i, 1..=20, 1..=20, 5_000..=50_000);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + i + 1000);
            let ratios = random_bw_ratios(&mut rng, &inst.topology);
            let opts = SolverOptions::default();
            let alloc = bw_aware_param_alloc(
                &inst.topology,
                &inst.channels,
                &inst.params,
                &ratios,
                &opts,
            )?;
            let rates = RateTable::from_channels(&inst.topology, &inst.channels, &inst.params)?;
            let push = push_latency(&inst.params, &rates)?;
            let mut lats = Vec::with_capacity(inst.topology.num_groups());
            for (k, group) in inst.topology.groups.iter().enumerate() {
                lats.push(crate::model::group_latency(
                    group,
                    alloc.diagnostics.relaxed_block_lens[k],
                    &ratios[k],
                    &rates.uplink_se[k],
                    push,
                    &inst.params,
                )?);
            }
            let hi = lats.iter().cloned().fold(f64::MIN, f64::max);
            let lo = lats.iter().cloned().fold(f64::MAX, f64::min);
            worst = worst.max((hi - lo) / hi);
        }
        Ok((
            worst <= 1e-6,
            format!("max relative group-latency spread {worst:.3e} over {instances} instances"),
        ))
    };
    report("equalization", "group latencies equalize under fixed bandwidth", t0, run())
}

/// With the parameter split fixed, the optimal bandwidth shares make every
/// worker in a group finish together and spend the whole uplink.
pub fn check_worker_equalization(instances: u64, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut worst_spread = 0.0_f64;
        let mut worst_budget = 0.0_f64;
        for i in 0..instances {
            let inst = random_instance(seed + i, 1..=20, 1..=20, 5_000..=50_000);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + i + 2000);
            let blocks =
                random_block_lens(&mut rng, inst.topology.num_groups(), inst.params.total_params)?;
            let opts = SolverOptions::default();
            let alloc = param_aware_bw_alloc(
                &inst.topology,
                &inst.channels,
                &inst.params,
                &blocks,
                &opts,
            )?;
            worst_budget = worst_budget.max((alloc.bw_ratio_sum() - 1.0).abs());
            let rates = RateTable::from_channels(&inst.topology, &inst.channels, &inst.params)?;
            let push = push_latency(&inst.params, &rates)?;
            for (k, group) in inst.topology.groups.iter().enumerate() {
                if blocks[k] == 0 {
                    continue;
                }
                let lats = group
                    .iter()
                    .enumerate()
                    .map(|(n, w)| {
                        worker_latency(
                            w,
                            blocks[k] as f64,
                            alloc.bw_ratios[k][n],
                            rates.uplink_se[k][n],
                            push,
                            &inst.params,
                        )
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let hi = lats.iter().cloned().fold(f64::MIN, f64::max);
                let lo = lats.iter().cloned().fold(f64::MAX, f64::min);
                worst_spread = worst_spread.max((hi - lo) / hi);
            }
        }
        Ok((
            worst_spread <= 1e-6 && worst_budget <= 1e-8,
            format!(
                "max relative worker-latency spread {worst_spread:.3e}, worst uplink budget \
                 gap {worst_budget:.3e} over {instances} instances"
            ),
        ))
    };
    report("equalization", "worker latencies equalize under fixed blocks", t0, run())
}

/// At the relaxed joint optimum, active groups share one marginal bandwidth
/// rate and the uplink budget binds.
pub fn check_joint_kkt(instances: u64, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut worst_spread = 0.0_f64;
        let mut worst_budget = 0.0_f64;
        for i in 0..instances {
            let inst = random_instance(seed + 13 * i, 2..=10, 1..=10, 5_000..=50_000);
            let opts = SolverOptions::default();
            let alloc = joint_paba(&inst.topology, &inst.channels, &inst.params, &opts)?;
            let cost = CostModel::build(&inst.topology, &inst.channels, &inst.params)?;
            let t = alloc.diagnostics.relaxed_latency_s;
            let b = &alloc.diagnostics.relaxed_block_lens;
            let rho = alloc
                .diagnostics
                .relaxed_bw_ratios
                .as_ref()
                .expect("joint solutions carry relaxed bandwidth shares");
            let budget: f64 = rho.iter().flatten().sum();
            worst_budget = worst_budget.max((budget - 1.0).abs());
            let active: Vec<f64> = cost
                .groups
                .iter()
                .zip(b)
                .filter(|(_, &bk)| bk > 1e-9 * inst.params.total_params as f64)
                .map(|(g, &bk)| group_bw_rate(bk, t, g, cost.overhead_s))
                .collect::<Result<_>>()?;
            if let (Some(hi), Some(lo)) = (
                active.iter().cloned().reduce(f64::max),
                active.iter().cloned().reduce(f64::min),
            ) {
                worst_spread = worst_spread.max((hi - lo) / hi);
            }
        }
        Ok((
            worst_spread <= 1e-4 && worst_budget <= 1e-6,
            format!(
                "max relative marginal-rate spread {worst_spread:.3e}, worst uplink budget \
                 gap {worst_budget:.3e} over {instances} instances"
            ),
        ))
    };
    report("kkt", "active groups equalize marginal bandwidth rates", t0, run())
}

/// A longer round budget always fits a strictly larger relaxed model.
pub fn check_model_size_monotonicity(instances: u64, grid: usize, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut min_gap = f64::MAX;
        let mut violations = 0u64;
        for i in 0..instances {
            let inst = random_instance(seed + 29 * i, 1..=10, 1..=10, 5_000..=50_000);
            let base = baseline_allocation(&inst.topology, &inst.channels, &inst.params)?;
            let cost = CostModel::build(&inst.topology, &inst.channels, &inst.params)?;
            let span = base.round_latency_s - cost.overhead_s;
            let opts = SolverOptions::default();
            let mut prev = None;
            for j in 0..grid {
                let t = cost.overhead_s + span * (0.05 + 1.95 * j as f64 / (grid - 1) as f64);
                let (n, _) = model_size_max(&inst.topology, &inst.channels, &inst.params, t, &opts)?;
                if let Some(p) = prev {
                    if n <= p {
                        violations += 1;
                    }
                    min_gap = min_gap.min(n - p);
                }
                prev = Some(n);
            }
        }
        Ok((
            violations == 0,
            format!(
                "{violations} monotonicity violations over {instances} instances x {grid} \
                 budgets (smallest increase {min_gap:.3e})"
            ),
        ))
    };
    report("monotonicity", "model capacity grows strictly with the budget", t0, run())
}

/// The joint solver agrees with a brute-force grid and with the closed-form
/// single-worker solver.
pub fn check_joint_vs_oracles(instances: u64, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut worst_grid = 0.0_f64;
        let mut worst_special = 0.0_f64;
        let results: Vec<Result<(f64, f64)>> = (0..instances)
            .into_par_iter()
            .map(|i| {
                let inst = random_instance(seed + 31 * i, 2..=3, 1..=1, 500..=3_000);
                let opts = SolverOptions::default();
                let joint = joint_paba(&inst.topology, &inst.channels, &inst.params, &opts)?;
                let grid = grid_search_joint(
                    &inst.topology,
                    &inst.channels,
                    &inst.params,
                    &GridSpec::default(),
                )?;
                let special =
                    single_worker_special(&inst.topology, &inst.channels, &inst.params, &opts)?;
                let grid_gap = (joint.round_latency_s - grid.round_latency_s).abs()
                    / grid.round_latency_s;
                let special_gap = (joint.round_latency_s - special.round_latency_s).abs()
                    / special.round_latency_s;
                Ok((grid_gap, special_gap))
            })
            .collect();
        for r in results {
            let (g, s) = r?;
            worst_grid = worst_grid.max(g);
            worst_special = worst_special.max(s);
        }
        Ok((
            worst_grid <= 0.01 && worst_special <= 1e-4,
            format!(
                "worst grid-oracle gap {worst_grid:.3e} (limit 1e-2), worst single-worker \
                 gap {worst_special:.3e} (limit 1e-4) over {instances} instances"
            ),
        ))
    };
    report("oracles", "joint solutions match grid and single-worker oracles", t0, run())
}

/// The primal-dual capacity solver agrees with the independent
/// rate-equalization oracle.
pub fn check_capacity_vs_oracle(instances: u64, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0_f64;
        for i in 0..instances {
            let inst = random_instance(seed + 37 * i, 1..=8, 1..=8, 5_000..=50_000);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + i + 4000);
            let base = baseline_allocation(&inst.topology, &inst.channels, &inst.params)?;
            let cost = CostModel::build(&inst.topology, &inst.channels, &inst.params)?;
            let t = cost.overhead_s
                + (base.round_latency_s - cost.overhead_s) * rng.gen_range(0.3..1.2);
            let opts = SolverOptions::default();
            let (n_pd, _) =
                model_size_max(&inst.topology, &inst.channels, &inst.params, t, &opts)?;
            let (n_eq, _) =
                rate_equalization_p6(&inst.topology, &inst.channels, &inst.params, t, &opts)?;
            worst = worst.max((n_pd - n_eq).abs() / n_eq.max(n_pd));
        }
        Ok((
            worst <= 1e-3,
            format!("worst relative capacity gap {worst:.3e} over {instances} instances"),
        ))
    };
    report("oracles", "capacity solver matches rate-equalization oracle", t0, run())
}

/// Joint never loses to either partial optimization, and neither partial
/// loses to the proportional baseline, draw by draw.
pub fn check_dominance(draws: u64, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let cfg = RunConfig { seed, ..RunConfig::default() };
        let worst: Vec<f64> = (0..draws)
            .into_par_iter()
            .map(|d| -> Result<f64> {
                let sc = build_scenario(&cfg, d)?;
                let ch = sample_channels(&sc, 0);
                let lat = |s: Scheme| -> Result<f64> {
                    Ok(solve_scheme(s, &sc.topology, &ch, &sc.params, &cfg.solver)?
                        .round_latency_s)
                };
                let base = lat(Scheme::Baseline)?;
                let pa = lat(Scheme::BwAwarePa)?;
                let ba = lat(Scheme::PaAwareBa)?;
                let joint = lat(Scheme::Joint)?;
                // Positive excess is a dominance violation, in seconds.
                let excess = (joint - pa.min(ba)).max(pa - base).max(ba - base);
                Ok(excess)
            })
            .collect::<Result<_>>()?;
        let worst = worst.into_iter().fold(f64::MIN, f64::max);
        Ok((
            worst <= 1e-6,
            format!("worst dominance excess {worst:.3e} s over {draws} draws"),
        ))
    };
    report("dominance", "joint <= partial <= baseline on every draw", t0, run())
}

/// Joint optimization beats the baseline on average in a bandwidth-starved
/// cell. The expected reduction for the default cell at 70 MHz is in the
/// 46-47% range.
pub fn check_gain_at_70mhz(draws: u64, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut cfg = RunConfig { seed, ..RunConfig::default() };
        cfg.system.bandwidth_hz = 7e7;
        let pairs: Vec<(f64, f64)> = (0..draws)
            .into_par_iter()
            .map(|d| -> Result<(f64, f64)> {
                let sc = build_scenario(&cfg, d)?;
                let ch = sample_channels(&sc, 0);
                let base =
                    solve_scheme(Scheme::Baseline, &sc.topology, &ch, &sc.params, &cfg.solver)?;
                let joint =
                    solve_scheme(Scheme::Joint, &sc.topology, &ch, &sc.params, &cfg.solver)?;
                Ok((base.round_latency_s, joint.round_latency_s))
            })
            .collect::<Result<_>>()?;
        let mean_base = pairs.iter().map(|p| p.0).sum::<f64>() / draws as f64;
        let mean_joint = pairs.iter().map(|p| p.1).sum::<f64>() / draws as f64;
        let reduction = 100.0 * (mean_base - mean_joint) / mean_base;
        Ok((
            reduction > 0.0,
            format!(
                "mean round-latency reduction {reduction:.2}% over {draws} draws at 70 MHz \
                 (reference figures: 46.73% at 70 MHz, 46.92% at 18 groups)"
            ),
        ))
    };
    report("trends", "joint cuts mean latency at 70 MHz", t0, run())
}

/// Mean latency must not increase with more bandwidth or more groups.
pub fn check_sweep_trends(draws: u64, seed: u64) -> Vec<PropertyReport> {
    let cases: [(&'static str, Axis, Vec<f64>); 2] = [
        (
            "mean latency non-increasing in bandwidth",
            Axis::Bandwidth,
            vec![2e7, 5e7, 8e7, 1.1e8],
        ),
        (
            "mean latency non-increasing in group count",
            Axis::GroupCount,
            vec![5.0, 10.0, 15.0, 18.0],
        ),
    ];
    cases
        .into_iter()
        .map(|(name, axis, values)| {
            let t0 = Instant::now();
            let run = || -> Result<(bool, String)> {
                let cfg = RunConfig { seed, ..RunConfig::default() };
                let result = sim::sweep(&cfg, axis, &values, draws)?;
                let mut worst = f64::MIN;
                for si in 0..result.schemes.len() {
                    for vi in 1..values.len() {
                        worst = worst.max(
                            result.mean_latency_s[vi][si] - result.mean_latency_s[vi - 1][si],
                        );
                    }
                }
                Ok((
                    worst <= 0.0,
                    format!(
                        "largest mean-latency increase along the axis {worst:.3e} s over \
                         {draws} draws"
                    ),
                ))
            };
            report("trends", name, t0, run())
        })
        .collect()
}

/// One distributed round equals one centralized proximal step, for several
/// partition layouts and both non-smooth and smooth regularizers.
pub fn check_learning_equivalence(rounds: u64, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let dim = 2_000;
        let dataset = synthetic_dataset(dim, 500, 12, seed);
        // Three random layouts: block boundaries drawn over the parameter
        // vector, worker counts per group, and shuffled data splits.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        type Layout = (Vec<std::ops::Range<usize>>, Vec<Vec<Vec<usize>>>);
        let layouts: Vec<Layout> = (0..3)
            .map(|_| {
                let groups = rng.gen_range(2..=12);
                let mut cuts: Vec<usize> =
                    (0..groups - 1).map(|_| rng.gen_range(1..dim)).collect();
                cuts.sort_unstable();
                cuts.dedup();
                let mut partition = Vec::new();
                let mut lo = 0;
                for &c in &cuts {
                    partition.push(lo..c);
                    lo = c;
                }
                partition.push(lo..dim);
                let splits = partition
                    .iter()
                    .map(|_| {
                        let workers = rng.gen_range(1..=5);
                        let mut order: Vec<usize> = (0..dataset.len()).collect();
                        order.shuffle(&mut rng);
                        sim::group_data_split(dataset.len(), workers)
                            .into_iter()
                            .map(|chunk| chunk.into_iter().map(|i| order[i]).collect())
                            .collect()
                    })
                    .collect();
                (partition, splits)
            })
            .collect();
        let mut worst = 0.0_f64;
        let mut objective_ok = true;
        for reg in [RegKind::L1, RegKind::L2] {
            let mut task = LearningTask {
                loss_kind: LossKind::Logistic,
                reg_kind: reg,
                reg_weight: 1e-3,
                step_size: 1.0,
            };
            task.step_size = default_step_size(&task, &dataset);
            for (partition, splits) in &layouts {
                let mut dist = ModelState::zeros(dim);
                let mut cent = ModelState::zeros(dim);
                let mut prev = objective(&task, &cent.theta, &dataset)?;
                for _ in 0..rounds {
                    dist = distributed_round(&task, &dist, &dataset, partition, splits)?;
                    cent = centralized_step(&task, &cent, &dataset)?;
                    for (d, c) in dist.theta.iter().zip(&cent.theta) {
                        worst = worst.max((d - c).abs());
                    }
                    let obj = objective(&task, &cent.theta, &dataset)?;
                    if obj > prev + 1e-12 {
                        objective_ok = false;
                    }
                    prev = obj;
                }
            }
        }
        Ok((
            worst <= 1e-10 && objective_ok,
            format!(
                "worst per-coordinate gap {worst:.3e} over {rounds} rounds x 3 random \
                 layouts x 2 regularizers; objective non-increasing: {objective_ok}"
            ),
        ))
    };
    report("learning", "distributed rounds equal centralized steps", t0, run())
}

/// The closed-form marginal bandwidth rate matches finite differences.
pub fn check_marginal_rates(points: u64, seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0_f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 5000);
        for i in 0..points {
            let inst = random_instance(seed + 41 * i, 1..=10, 1..=10, 5_000..=50_000);
            let base = baseline_allocation(&inst.topology, &inst.channels, &inst.params)?;
            let cost = CostModel::build(&inst.topology, &inst.channels, &inst.params)?;
            let t = cost.overhead_s
                + (base.round_latency_s - cost.overhead_s) * rng.gen_range(0.3..1.5);
            let k = rng.gen_range(0..cost.num_groups());
            let group = &cost.groups[k];
            let cap = group_saturation_b(t, group, cost.overhead_s)?
                .min(0.9 * group_b_max(t, group, cost.overhead_s)?);
            let b = cap * rng.gen_range(0.05..0.9);
            let h = 1e-5 * b;
            let analytic = group_bw_rate(b, t, group, cost.overhead_s)?;
            let numeric = finite_diff_rate(b, t, group, cost.overhead_s, h)?;
            worst = worst.max((analytic - numeric).abs() / analytic);
        }
        Ok((
            worst <= 1e-5,
            format!("worst relative derivative gap {worst:.3e} over {points} interior points"),
        ))
    };
    report("derivative", "marginal bandwidth rate matches finite differences", t0, run())
}

/// Identical configurations reproduce identical sweep tables.
pub fn check_sweep_determinism(seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut cfg = RunConfig { seed, ..RunConfig::default() };
        cfg.scenario.num_groups = 3;
        cfg.scenario.group_size = 3;
        cfg.system.total_params = 20_000;
        let values = [5e7, 1e8];
        let a = sim::sweep(&cfg, Axis::Bandwidth, &values, 5)?.to_csv();
        let b = sim::sweep(&cfg, Axis::Bandwidth, &values, 5)?.to_csv();
        Ok((a == b, format!("repeated sweep CSVs identical: {}", a == b)))
    };
    report("determinism", "sweeps are byte-for-byte reproducible", t0, run())
}

/// The joint solver converges on the default cell and returns a consistent
/// allocation.
pub fn check_joint_default(seed: u64) -> PropertyReport {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let cfg = RunConfig { seed, ..RunConfig::default() };
        let sc = build_scenario(&cfg, 0)?;
        let ch = sample_channels(&sc, 0);
        let started = Instant::now();
        let alloc = joint_paba(&sc.topology, &ch, &sc.params, &cfg.solver)?;
        let elapsed = started.elapsed().as_secs_f64();
        let blocks_ok = alloc.total_block_len() == sc.params.total_params;
        let budget_ok = alloc.bw_ratio_sum() <= 1.0 + 1e-9;
        let residual_ok = alloc.diagnostics.residual.abs() <= cfg.solver.kkt_tol;
        Ok((
            blocks_ok && budget_ok && residual_ok,
            format!(
                "default cell solved in {elapsed:.3}s: blocks {}, uplink budget {:.9}, \
                 relaxed residual {:.3e}",
                alloc.total_block_len(),
                alloc.bw_ratio_sum(),
                alloc.diagnostics.residual
            ),
        ))
    };
    report("kkt", "joint solver converges on the default cell", t0, run())
}

/// Runs every suite at a reduced scale suitable for the command line.
/// `filter` restricts to suites whose name matches exactly.
pub fn run_verification(filter: Option<&str>, seed: u64) -> Vec<PropertyReport> {
    let mut reports = Vec::new();
    let want = |s: &str| filter.is_none_or(|f| f == s);
    if want("equalization") {
        reports.push(check_group_equalization(20, seed));
        reports.push(check_worker_equalization(20, seed));
    }
    if want("kkt") {
        reports.push(check_joint_kkt(10, seed));
        reports.push(check_joint_default(seed));
    }
    if want("monotonicity") {
        reports.push(check_model_size_monotonicity(5, 8, seed));
    }
    if want("oracles") {
        reports.push(check_joint_vs_oracles(5, seed));
        reports.push(check_capacity_vs_oracle(10, seed));
    }
    if want("dominance") {
        reports.push(check_dominance(10, seed));
    }
    if want("trends") {
        reports.push(check_gain_at_70mhz(10, seed));
        reports.extend(check_sweep_trends(5, seed));
    }
    if want("learning") {
        reports.push(check_learning_equivalence(10, seed));
    }
    if want("derivative") {
        reports.push(check_marginal_rates(25, seed));
    }
    if want("determinism") {
        reports.push(check_sweep_determinism(seed));
    }
    reports
}

pub const SUITES: [&str; 9] = [
    "equalization",
    "kkt",
    "monotonicity",
    "oracles",
    "dominance",
    "trends",
    "learning",
    "derivative",
    "determinism",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_instances_are_solvable() {
        for seed in 0..5 {
            let inst = random_instance(seed, 1..=6, 1..=6, 2_000..=10_000);
            inst.params.validate().unwrap();
            let alloc =
                joint_paba(&inst.topology, &inst.channels, &inst.params, &Default::default())
                    .unwrap();
            assert_eq!(alloc.total_block_len(), inst.params.total_params);
        }
    }

    #[test]
    fn quick_suites_pass() {
        // A fast smoke covering one cheap property per family.
        let r = check_group_equalization(3, 11);
        assert!(r.passed, "{}: {}", r.name, r.details);
        let r = check_worker_equalization(3, 11);
        assert!(r.passed, "{}: {}", r.name, r.details);
        let r = check_marginal_rates(5, 11);
        assert!(r.passed, "{}: {}", r.name, r.details);
    }

    #[test]
    fn filter_selects_suites() {
        let all = run_verification(Some("determinism"), 3);
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].suite, "determinism");
        assert!(all[0].passed, "{}", all[0].details);
    }
}
