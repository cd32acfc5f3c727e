//! Joint parameter-and-bandwidth allocation.
//!
//! The minimum feasible round latency is the smallest t whose latency-budget
//! model-size maximum reaches the actual model size. That maximum grows
//! monotonically with t, so an outer bisection on t around a doubling-grown
//! upper bracket pins the optimum. The final block lengths come from the
//! last feasible inner solve (rescaled and integerized) and the bandwidth
//! split is re-derived for them exactly.

use super::bw_alloc::param_aware_bw_alloc;
use super::cost::prepare;
use super::model_size::{solve_p6, P6Solution};
use super::rates::rho_of_b;
use super::{round_blocks, Allocation, Diagnostics, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{ChannelState, GroupTopology, SystemParams};

pub fn joint_paba(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    opts: &SolverOptions,
) -> Result<Allocation> {
    opts.validate()?;
    let (cost, _) = prepare(topology, channels, params)?;
    let np = params.total_params as f64;

    // The proportional baseline is feasible at its own latency, which makes
    // it a natural first upper bracket; fall back to the overhead scale when
    // the baseline itself cannot run.
    let mut t_hi = match super::baseline_allocation(topology, channels, params) {
        Ok(a) if a.round_latency_s.is_finite() => a.round_latency_s,
        _ => 2.0 * cost.overhead_s,
    };
    let mut iterations = 0u64;
    let mut sol_hi = solve_p6(&cost, t_hi, opts, None)?;
    iterations += sol_hi.iterations;
    let mut doublings = 0;
    while sol_hi.total_params() < np {
        doublings += 1;
        if doublings > 40 {
            return Err(Error::InfeasibleProblem(format!(
                "model of {np} parameters cannot be updated within any budget up to {t_hi} s"
            )));
        }
        t_hi *= 2.0;
        sol_hi = solve_p6(&cost, t_hi, opts, Some(&sol_hi))?;
        iterations += sol_hi.iterations;
    }

    // Bisect the feasibility boundary; keep the smallest feasible solve.
    let mut t_lo = cost.overhead_s;
    while t_hi - t_lo > opts.bisect_tol_rel * t_hi {
        iterations += 1;
        if iterations > opts.max_iters.saturating_mul(64) {
            return Err(Error::SolverFailure {
                message: "latency bisection exceeded its iteration budget".into(),
                residual: t_hi - t_lo,
            });
        }
        let mid = 0.5 * (t_lo + t_hi);
        if mid <= t_lo || mid >= t_hi {
            break;
        }
        let sol = solve_p6(&cost, mid, opts, Some(&sol_hi))?;
        iterations += sol.iterations;
        if sol.total_params() >= np {
            t_hi = mid;
            sol_hi = sol;
        } else {
            t_lo = mid;
        }
    }

    finalize_relaxed(topology, channels, params, opts, sol_hi, t_hi, iterations)
}

/// Turns a relaxed solution at latency `t` into a full allocation: rescale
/// block lengths onto the model size, integerize, and re-derive the optimal
/// bandwidth split for the integer blocks.
pub(crate) fn finalize_relaxed(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    opts: &SolverOptions,
    relaxed: P6Solution,
    t: f64,
    iterations: u64,
) -> Result<Allocation> {
    let cost = super::cost::CostModel::build(topology, channels, params)?;
    let np = params.total_params as f64;
    let relaxed_rho: Vec<Vec<f64>> = cost
        .groups
        .iter()
        .zip(&relaxed.block_lens)
        .map(|(g, &b)| {
            g.iter()
                .map(|w| rho_of_b(b, t, w, cost.overhead_s))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let scale = np / relaxed.total_params();
    let scaled: Vec<f64> = relaxed.block_lens.iter().map(|&b| b * scale).collect();
    let block_lens = round_blocks(&scaled, params.total_params)?;
    let polished = param_aware_bw_alloc(topology, channels, params, &block_lens, opts)?;
    Ok(Allocation {
        block_lens,
        bw_ratios: polished.bw_ratios,
        round_latency_s: polished.round_latency_s,
        diagnostics: Diagnostics {
            iterations: iterations + polished.diagnostics.iterations,
            residual: relaxed.residual,
            relaxed_block_lens: relaxed.block_lens,
            relaxed_latency_s: t,
            relaxed_bw_ratios: Some(relaxed_rho),
        },
    })
}
