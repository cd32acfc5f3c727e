//! Closed-form accelerated solvers for two structured topologies: groups of
//! one worker each, and groups whose members share a compute cost.
//!
//! In both, a group's bandwidth demand collapses to a single term with
//! compute cost a_k and pooled upload cost U_k, so matching every group's
//! marginal rate to a common value C solves in closed form:
//!
//! ```text
//! b_k = (T' - sqrt(T' * U_k / C)) / a_k   (clamped at zero)
//! ```
//!
//! Two scalars remain: C must place exactly N_p parameters, and the latency
//! budget T' must make the uplink demand exactly 1. Both relations are
//! monotone, giving a nested bisection.

use super::bisect::bisect_root;
use super::cost::{prepare, CostModel};
use super::joint::finalize_relaxed;
use super::model_size::P6Solution;
use super::{Allocation, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{ChannelState, GroupTopology, SystemParams};

/// Joint allocation when every group has exactly one worker.
pub fn single_worker_special(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    opts: &SolverOptions,
) -> Result<Allocation> {
    if topology.groups.iter().any(|g| g.len() != 1) {
        return Err(Error::invalid(
            "single-worker solver requires every group to have exactly one worker",
        ));
    }
    solve_reduced(topology, channels, params, opts)
}

/// Joint allocation when all workers within a group share one compute cost.
pub fn uniform_group_special(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    opts: &SolverOptions,
) -> Result<Allocation> {
    let cost = CostModel::build(topology, channels, params)?;
    for (k, group) in cost.groups.iter().enumerate() {
        let lo = group.iter().map(|w| w.compute_s_per_param).fold(f64::INFINITY, f64::min);
        let hi = group.iter().map(|w| w.compute_s_per_param).fold(0.0_f64, f64::max);
        if hi - lo > 1e-9 * hi {
            return Err(Error::invalid(format!(
                "uniform-group solver requires equal compute costs within group {k}"
            )));
        }
    }
    solve_reduced(topology, channels, params, opts)
}

struct ReducedGroup {
    compute: f64,
    upload_sum: f64,
    alive: bool,
}

fn solve_reduced(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    opts: &SolverOptions,
) -> Result<Allocation> {
    opts.validate()?;
    let (cost, _) = prepare(topology, channels, params)?;
    let np = params.total_params as f64;
    let groups: Vec<ReducedGroup> = cost
        .groups
        .iter()
        .map(|g| {
            let compute = g.iter().map(|w| w.compute_s_per_param).fold(0.0_f64, f64::max);
            let upload_sum: f64 = g.iter().map(|w| w.upload_s_per_param).sum();
            ReducedGroup { compute, upload_sum, alive: upload_sum.is_finite() }
        })
        .collect();
    if !groups.iter().any(|g| g.alive) {
        return Err(Error::InfeasibleProblem("no group has a usable uplink".into()));
    }

    let blocks_at = |budget: f64, c: f64| -> Vec<f64> {
        groups
            .iter()
            .map(|g| {
                if !g.alive {
                    return 0.0;
                }
                ((budget - (budget * g.upload_sum / c).sqrt()) / g.compute).max(0.0)
            })
            .collect()
    };
    // Uplink demand written to avoid the cancellation in T' - a*b.
    let rho_at = |budget: f64, c: f64, blocks: &[f64]| -> f64 {
        groups
            .iter()
            .zip(blocks)
            .map(|(g, &b)| {
                if b <= 0.0 {
                    0.0
                } else {
                    b * (g.upload_sum * c / budget).sqrt()
                }
            })
            .sum()
    };

    // Inner: the rate level placing exactly np parameters at this budget,
    // or None when even the compute poles cannot hold them.
    let evals = std::cell::Cell::new(0u64);
    let place = |budget: f64| -> Result<Option<f64>> {
        let b_pole: f64 = groups
            .iter()
            .filter(|g| g.alive)
            .map(|g| budget / g.compute)
            .sum();
        // Negated so a NaN pole bails out too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(b_pole > np * (1.0 + 1e-12)) {
            return Ok(None);
        }
        let sqrt_sum: f64 = groups
            .iter()
            .filter(|g| g.alive)
            .map(|g| (budget * g.upload_sum).sqrt() / g.compute)
            .sum();
        let c_hi = (sqrt_sum / (b_pole - np)).powi(2);
        let mut c_lo = c_hi;
        let placed = |c: f64| blocks_at(budget, c).iter().sum::<f64>() - np;
        // The bound construction guarantees placed(c_hi) >= 0; anything below
        // is roundoff at a nearly degenerate bracket, making c_hi the root.
        if placed(c_hi) <= 0.0 {
            evals.set(evals.get() + 1);
            return Ok(Some(c_hi));
        }
        let mut shrink = 0u64;
        while placed(c_lo) >= 0.0 {
            c_lo *= 0.5;
            shrink += 1;
            if shrink > 2000 {
                return Err(Error::SolverFailure {
                    message: "rate-level bracket search stalled".into(),
                    residual: placed(c_lo),
                });
            }
        }
        let sol = bisect_root(placed, c_lo, c_hi, 1e-13, 10_000)?;
        evals.set(evals.get() + sol.iterations + shrink);
        Ok(Some(sol.root))
    };
    // Outer: uplink demand at the placement overshoots 1 exactly while the
    // budget is below the optimum.
    let demand = |budget: f64| -> Result<f64> {
        Ok(match place(budget)? {
            None => f64::INFINITY,
            Some(c) => rho_at(budget, c, &blocks_at(budget, c)) - 1.0,
        })
    };

    let mut hi = cost.overhead_s;
    let mut iters = 0u64;
    while demand(hi)? > 0.0 {
        hi *= 2.0;
        iters += 1;
        if iters > 2000 {
            return Err(Error::InfeasibleProblem(format!(
                "model of {np} parameters cannot be updated within any budget up to {hi} s"
            )));
        }
    }
    let mut lo = hi;
    while demand(lo)? <= 0.0 {
        lo *= 0.5;
        iters += 1;
        if iters > 4000 {
            return Err(Error::SolverFailure {
                message: "latency bracket search stalled".into(),
                residual: demand(lo)?,
            });
        }
    }
    // Bisect keeping `hi` on the feasible (demand <= 0) side.
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iters += 1;
        if demand(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let budget = hi;
    let c = place(budget)?
        .ok_or_else(|| Error::InfeasibleProblem("budget bracket degenerate".into()))?;
    let blocks = blocks_at(budget, c);
    let rho_sum = rho_at(budget, c, &blocks);
    let relaxed = P6Solution {
        block_lens: blocks,
        lambda: 1.0 / c,
        iterations: evals.get() + iters,
        residual: (rho_sum - 1.0).abs(),
    };
    let iters = relaxed.iterations;
    finalize_relaxed(topology, channels, params, opts, relaxed, cost.overhead_s + budget, iters)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::instance_from_costs;
    use super::super::{joint_paba, SolverOptions};
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_groups_split_evenly() {
        let (topology, channels, params) =
            instance_from_costs(&[vec![1.0], vec![1.0]], &[vec![1.0], vec![1.0]], 100);
        let alloc =
            single_worker_special(&topology, &channels, &params, &Default::default()).unwrap();
        assert_eq!(alloc.block_lens, vec![50, 50]);
        assert_relative_eq!(alloc.round_latency_s, 150.0, max_relative = 1e-6);
    }

    #[test]
    fn better_uplink_attracts_parameters() {
        // Equal compute, upload costs {0.2, 1.0}: the cheap uplink takes more.
        let (topology, channels, params) =
            instance_from_costs(&[vec![1.0], vec![1.0]], &[vec![0.2], vec![1.0]], 100);
        let alloc =
            single_worker_special(&topology, &channels, &params, &Default::default()).unwrap();
        assert!(alloc.block_lens[0] > alloc.block_lens[1]);
    }

    #[test]
    fn matches_the_joint_solver() {
        let (topology, channels, params) = instance_from_costs(
            &[vec![0.7], vec![1.3], vec![0.4]],
            &[vec![0.6], vec![0.9], vec![0.2]],
            300,
        );
        let opts = SolverOptions::default();
        let fast = single_worker_special(&topology, &channels, &params, &opts).unwrap();
        let slow = joint_paba(&topology, &channels, &params, &opts).unwrap();
        assert_relative_eq!(
            fast.round_latency_s,
            slow.round_latency_s,
            max_relative = 1e-4
        );
    }

    #[test]
    fn uniform_group_variant_agrees() {
        let (topology, channels, params) = instance_from_costs(
            &[vec![0.5, 0.5], vec![1.5, 1.5, 1.5]],
            &[vec![0.3, 0.9], vec![0.4, 1.1, 0.7]],
            200,
        );
        let opts = SolverOptions::default();
        let fast = uniform_group_special(&topology, &channels, &params, &opts).unwrap();
        let slow = joint_paba(&topology, &channels, &params, &opts).unwrap();
        assert_relative_eq!(
            fast.round_latency_s,
            slow.round_latency_s,
            max_relative = 1e-4
        );
        assert_eq!(fast.total_block_len(), 200);
    }

    #[test]
    fn rejects_wrong_topologies() {
        let (topology, channels, params) =
            instance_from_costs(&[vec![1.0, 2.0]], &[vec![1.0, 1.0]], 10);
        assert!(single_worker_special(&topology, &channels, &params, &Default::default())
            .is_err());
        assert!(uniform_group_special(&topology, &channels, &params, &Default::default())
            .is_err());
    }
}
