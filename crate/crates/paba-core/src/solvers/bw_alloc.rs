//! Parameter-aware bandwidth allocation: optimal uplink split when the block
//! lengths are given.
//!
//! The problem is convex and its optimum makes every loaded worker finish at
//! the same instant t*. Inverting each worker's latency gives its ratio as a
//! function of t, and t* is the unique root of the budget equation
//!
//! ```text
//! sum_{k,n} u_{k,n} * b_k / (t - done_{k,n}) = 1
//! ```
//!
//! where done_{k,n} is the time the worker finishes computing (overhead plus
//! compute). The left side decreases from +inf as t grows past the largest
//! done time, so the root is found by bisection.

use super::bisect::bisect_root;
use super::cost::prepare;
use super::{Allocation, Diagnostics, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{round_latency, ChannelState, GroupTopology, SystemParams};

pub fn param_aware_bw_alloc(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    given_block_lens: &[u64],
    opts: &SolverOptions,
) -> Result<Allocation> {
    opts.validate()?;
    let (cost, rates) = prepare(topology, channels, params)?;
    if given_block_lens.len() != topology.num_groups() {
        return Err(Error::invalid("given_block_lens length does not match group count"));
    }
    if given_block_lens.iter().sum::<u64>() != params.total_params {
        return Err(Error::invalid(format!(
            "given block lengths must sum to the model size {}",
            params.total_params
        )));
    }

    // Upload demand u*b and compute-done time per loaded worker.
    let mut demand = Vec::new(); // (group, worker, u*b, done)
    let mut done_max = f64::NEG_INFINITY;
    let mut demand_total = 0.0;
    for (k, group) in cost.groups.iter().enumerate() {
        let b = given_block_lens[k] as f64;
        if b == 0.0 {
            continue;
        }
        for (n, w) in group.iter().enumerate() {
            let load = w.upload_s_per_param * b;
            if !load.is_finite() {
                return Err(Error::SolverFailure {
                    message: format!(
                        "worker ({k},{n}) has no uplink but was assigned {b} parameters"
                    ),
                    residual: f64::INFINITY,
                });
            }
            let done = cost.overhead_s + w.compute_s_per_param * b;
            done_max = done_max.max(done);
            demand_total += load;
            demand.push((k, n, load, done));
        }
    }

    // Budget equation in s = t - done_max; its left side is at most
    // demand_total/s, so s = demand_total over-provisions and some halving
    // finds the +/- bracket.
    let budget = |s: f64| -> f64 {
        demand
            .iter()
            .map(|&(_, _, load, done)| load / (s + (done_max - done)))
            .sum::<f64>()
            - 1.0
    };
    let mut s_hi = demand_total;
    let mut grow = 0u64;
    while budget(s_hi) > 0.0 {
        s_hi *= 2.0;
        grow += 1;
        if grow > 80 {
            return Err(Error::SolverFailure {
                message: "bandwidth budget equation has no root above the compute horizon".into(),
                residual: budget(s_hi),
            });
        }
    }
    let mut s_lo = s_hi;
    let mut shrink = 0u64;
    while budget(s_lo) <= 0.0 {
        s_lo *= 0.5;
        shrink += 1;
        if shrink > 1100 {
            return Err(Error::SolverFailure {
                message: "bandwidth budget equation has no root above the compute horizon".into(),
                residual: budget(s_lo),
            });
        }
    }
    // Drive to machine precision: the ratios read directly off the root.
    let sol = bisect_root(budget, s_lo, s_hi, 1e-15, opts.max_iters.max(200))?;
    let t_star = done_max + sol.root;

    let mut bw_ratios: Vec<Vec<f64>> = cost.groups.iter().map(|g| vec![0.0; g.len()]).collect();
    for &(k, n, load, done) in &demand {
        bw_ratios[k][n] = load / (t_star - done);
    }
    let rho_total: f64 = bw_ratios.iter().flatten().sum();
    if (rho_total - 1.0).abs() > opts.kkt_tol {
        return Err(Error::SolverFailure {
            message: "bandwidth ratios failed to use the whole uplink".into(),
            residual: (rho_total - 1.0).abs(),
        });
    }

    let b_f: Vec<f64> = given_block_lens.iter().map(|&b| b as f64).collect();
    let latency = round_latency(topology, &rates, &b_f, &bw_ratios, params)?;
    Ok(Allocation {
        block_lens: given_block_lens.to_vec(),
        bw_ratios: bw_ratios.clone(),
        round_latency_s: latency,
        diagnostics: Diagnostics {
            iterations: sol.iterations + grow + shrink,
            residual: (rho_total - 1.0).abs(),
            relaxed_block_lens: b_f,
            relaxed_latency_s: t_star,
            relaxed_bw_ratios: Some(bw_ratios),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::instance_from_costs;
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_pair_splits_the_uplink() {
        // Unit upload costs, negligible compute, one parameter each:
        // 2/t = 1 so t = 2 and each worker takes half the uplink.
        let (topology, channels, params) =
            instance_from_costs(&[vec![1e-15], vec![1e-15]], &[vec![1.0], vec![1.0]], 2);
        let alloc =
            param_aware_bw_alloc(&topology, &channels, &params, &[1, 1], &Default::default())
                .unwrap();
        assert_relative_eq!(alloc.diagnostics.relaxed_latency_s, 2.0, max_relative = 1e-9);
        assert_relative_eq!(alloc.bw_ratios[0][0], 0.5, max_relative = 1e-9);
        assert_relative_eq!(alloc.bw_ratios[1][0], 0.5, max_relative = 1e-9);
        assert_relative_eq!(alloc.bw_ratio_sum(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn slower_computer_gets_more_bandwidth() {
        // Compute times {1, 0} at one parameter each: 1/(t-1) + 1/t = 1,
        // so t = (3 + sqrt 5)/2 and rho = {1/(t-1), 1/t}.
        let (topology, channels, params) =
            instance_from_costs(&[vec![1.0], vec![1e-15]], &[vec![1.0], vec![1.0]], 2);
        let alloc =
            param_aware_bw_alloc(&topology, &channels, &params, &[1, 1], &Default::default())
                .unwrap();
        let t = (3.0 + 5.0_f64.sqrt()) / 2.0;
        assert_relative_eq!(alloc.diagnostics.relaxed_latency_s, t, max_relative = 1e-9);
        assert_relative_eq!(alloc.bw_ratios[0][0], 1.0 / (t - 1.0), max_relative = 1e-8);
        assert_relative_eq!(alloc.bw_ratios[1][0], 1.0 / t, max_relative = 1e-8);
        assert!(alloc.bw_ratios[0][0] > alloc.bw_ratios[1][0]);
    }

    #[test]
    fn single_worker_takes_the_whole_uplink() {
        let (topology, channels, params) = instance_from_costs(&[vec![1.0]], &[vec![1.0]], 10);
        let alloc =
            param_aware_bw_alloc(&topology, &channels, &params, &[10], &Default::default())
                .unwrap();
        assert_relative_eq!(alloc.bw_ratios[0][0], 1.0, max_relative = 1e-9);
        // t = overhead + a*b + u*b at full bandwidth.
        assert_relative_eq!(alloc.round_latency_s, 20.0, max_relative = 1e-6);
    }

    #[test]
    fn equalizes_worker_latencies_within_groups_too() {
        let (topology, channels, params) = instance_from_costs(
            &[vec![0.5, 1.0], vec![0.25]],
            &[vec![0.5, 1.0], vec![0.5]],
            6,
        );
        let alloc =
            param_aware_bw_alloc(&topology, &channels, &params, &[4, 2], &Default::default())
                .unwrap();
        let t = alloc.diagnostics.relaxed_latency_s;
        let cost = super::super::cost::CostModel::build(&topology, &channels, &params).unwrap();
        for (k, group) in cost.groups.iter().enumerate() {
            let b = alloc.block_lens[k] as f64;
            for (n, w) in group.iter().enumerate() {
                let lat = cost.overhead_s
                    + w.compute_s_per_param * b
                    + w.upload_s_per_param * b / alloc.bw_ratios[k][n];
                assert_relative_eq!(lat, t, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn rejects_mismatched_totals() {
        let (topology, channels, params) =
            instance_from_costs(&[vec![1.0], vec![1.0]], &[vec![1.0], vec![1.0]], 10);
        let err =
            param_aware_bw_alloc(&topology, &channels, &params, &[4, 4], &Default::default());
        assert!(err.is_err());
    }
}
