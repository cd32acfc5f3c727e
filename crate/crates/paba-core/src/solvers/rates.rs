//! Bandwidth demand as a function of block length at a fixed latency budget.
//!
//! Inverting the worker latency at a round budget t gives the bandwidth
//! fraction a worker needs to finish a block of b parameters on time:
//!
//! ```text
//! rho(b) = u * b / (T' - a * b),   T' = t - overhead
//! ```
//!
//! rho is increasing and convex in b with a pole at b = T'/a. Its derivative
//! (the marginal bandwidth per extra parameter) drives the model-size and
//! joint solvers: at their optimum the marginal rate is uniform across
//! groups.

use super::bisect::bisect_root;
use super::cost::WorkerCost;
use crate::error::{Error, Result};

fn time_budget(t_round_s: f64, overhead_s: f64) -> Result<f64> {
    if !t_round_s.is_finite() || !overhead_s.is_finite() {
        return Err(Error::invalid("latency arguments must be finite"));
    }
    let budget = t_round_s - overhead_s;
    if budget <= 0.0 {
        return Err(Error::InfeasibleLatency(format!(
            "round budget {t_round_s} s does not exceed the fixed overhead {overhead_s} s"
        )));
    }
    Ok(budget)
}

fn check_block(block_len: f64) -> Result<()> {
    if !block_len.is_finite() || block_len < 0.0 {
        return Err(Error::invalid(format!(
            "block length must be finite and non-negative, got {block_len}"
        )));
    }
    Ok(())
}

/// Bandwidth fraction worker needs to finish `block_len` parameters within
/// the round budget.
pub fn rho_of_b(
    block_len: f64,
    t_round_s: f64,
    worker: &WorkerCost,
    overhead_s: f64,
) -> Result<f64> {
    check_block(block_len)?;
    let budget = time_budget(t_round_s, overhead_s)?;
    if block_len == 0.0 {
        return Ok(0.0);
    }
    let slack = budget - worker.compute_s_per_param * block_len;
    if slack <= 0.0 {
        return Err(Error::InfeasibleLatency(format!(
            "block of {block_len} parameters cannot be computed within the budget"
        )));
    }
    Ok(worker.upload_s_per_param * block_len / slack)
}

/// Total bandwidth fraction a group needs for a common block length.
pub fn group_rho_sum(
    block_len: f64,
    t_round_s: f64,
    group: &[WorkerCost],
    overhead_s: f64,
) -> Result<f64> {
    group
        .iter()
        .map(|w| rho_of_b(block_len, t_round_s, w, overhead_s))
        .sum()
}

/// Marginal bandwidth per extra parameter for one worker: d(rho)/db.
pub fn worker_bw_rate(
    block_len: f64,
    t_round_s: f64,
    worker: &WorkerCost,
    overhead_s: f64,
) -> Result<f64> {
    check_block(block_len)?;
    let budget = time_budget(t_round_s, overhead_s)?;
    let slack = budget - worker.compute_s_per_param * block_len;
    if slack <= 0.0 {
        return Err(Error::InfeasibleLatency(format!(
            "block of {block_len} parameters cannot be computed within the budget"
        )));
    }
    Ok(worker.upload_s_per_param * budget / (slack * slack))
}

/// Marginal bandwidth per extra parameter for a whole group.
pub fn group_bw_rate(
    block_len: f64,
    t_round_s: f64,
    group: &[WorkerCost],
    overhead_s: f64,
) -> Result<f64> {
    group
        .iter()
        .map(|w| worker_bw_rate(block_len, t_round_s, w, overhead_s))
        .sum()
}

/// Largest block length the group can compute within the budget (the pole of
/// `rho_of_b` for its slowest member). Infinite when computation is free.
pub fn group_b_max(t_round_s: f64, group: &[WorkerCost], overhead_s: f64) -> Result<f64> {
    let budget = time_budget(t_round_s, overhead_s)?;
    let a_max = group
        .iter()
        .map(|w| w.compute_s_per_param)
        .fold(0.0_f64, f64::max);
    if a_max == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(budget / a_max)
}

/// Block length at which the group alone would consume the whole uplink
/// (group rho sum = 1). No allocation can ever assign more than this.
pub(crate) fn group_saturation_b(
    t_round_s: f64,
    group: &[WorkerCost],
    overhead_s: f64,
) -> Result<f64> {
    let budget = time_budget(t_round_s, overhead_s)?;
    if group.iter().any(|w| !w.upload_s_per_param.is_finite()) {
        return Ok(0.0); // a dead uplink saturates immediately
    }
    let u_sum: f64 = group.iter().map(|w| w.upload_s_per_param).sum();
    let a_max = group
        .iter()
        .map(|w| w.compute_s_per_param)
        .fold(0.0_f64, f64::max);
    if a_max == 0.0 {
        return Ok(budget / u_sum);
    }
    let hi = (budget / a_max) * (1.0 - 1e-12);
    if group_rho_sum(hi, t_round_s, group, overhead_s)? < 1.0 {
        return Ok(hi); // upload so cheap the pole is reached first
    }
    let f = |b: f64| group_rho_sum(b, t_round_s, group, overhead_s).unwrap_or(f64::INFINITY) - 1.0;
    let sol = bisect_root(f, 0.0, hi, 1e-14, 10_000)?;
    Ok(sol.root)
}
