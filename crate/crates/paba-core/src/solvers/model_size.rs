//! Latency-budgeted model-size maximization.
//!
//! Given a round budget t, the largest updatable model maximizes the total
//! block length subject to the uplink budget sum_k rho_k(b_k) <= 1. The
//! problem is convex; a dual multiplier lambda prices bandwidth, and at the
//! inner optimum every loaded group's marginal bandwidth rate equals
//! 1/lambda. The dual variable follows a diminishing-step multiplicative
//! update on the constraint violation, safeguarded by the bracket that the
//! violation's monotonicity in lambda implies. Inner minimizations use
//! damped Newton steps safeguarded by their own sign bracket.

use super::cost::{prepare, CostModel, WorkerCost};
use super::rates::{group_b_max, group_bw_rate, group_rho_sum, group_saturation_b};
use super::SolverOptions;
use crate::error::{Error, Result};
use crate::model::{ChannelState, GroupTopology, SystemParams};

#[derive(Debug, Clone)]
pub(crate) struct P6Solution {
    pub block_lens: Vec<f64>,
    pub lambda: f64,
    pub iterations: u64,
    pub residual: f64,
}

impl P6Solution {
    pub fn total_params(&self) -> f64 {
        self.block_lens.iter().sum()
    }
}

/// Largest relaxed model size updatable within the round budget, with the
/// block lengths attaining it.
pub fn model_size_max(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    t_round_s: f64,
    opts: &SolverOptions,
) -> Result<(f64, Vec<f64>)> {
    opts.validate()?;
    let (cost, _) = prepare(topology, channels, params)?;
    let sol = solve_p6(&cost, t_round_s, opts, None)?;
    Ok((sol.total_params(), sol.block_lens))
}

pub(crate) fn solve_p6(
    cost: &CostModel,
    t: f64,
    opts: &SolverOptions,
    warm: Option<&P6Solution>,
) -> Result<P6Solution> {
    let overhead = cost.overhead_s;
    // Never let a group past the point where it would hog the whole uplink
    // (or within 0.1% of its compute pole, whichever is tighter).
    let caps: Vec<f64> = cost
        .groups
        .iter()
        .map(|g| {
            let b_max = group_b_max(t, g, overhead)?;
            let b_sat = group_saturation_b(t, g, overhead)?;
            Ok(b_sat.min(0.999 * b_max))
        })
        .collect::<Result<Vec<f64>>>()?;

    // Bandwidth may not bind at all; then the caps are the answer.
    let rho_at = |b: &[f64]| -> Result<f64> {
        cost.groups
            .iter()
            .zip(b)
            .map(|(g, &bk)| group_rho_sum(bk, t, g, overhead))
            .sum()
    };
    let sat_rho = rho_at(&caps)?;
    if sat_rho <= 1.0 + opts.kkt_tol {
        return Ok(P6Solution { block_lens: caps, lambda: 0.0, iterations: 0, residual: 0.0 });
    }

    // All block lengths are zero once lambda exceeds the inverse of the
    // smallest zero-load rate, so that bounds the dual search from above.
    let min_zero_rate = cost
        .groups
        .iter()
        .map(|g| group_bw_rate(0.0, t, g, overhead))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .filter(|r| r.is_finite())
        .fold(f64::INFINITY, f64::min);
    let lam_cap = 1.0 / min_zero_rate;
    let mut lam = warm
        .map(|w| w.lambda)
        .filter(|l| l.is_finite() && *l > 0.0)
        .unwrap_or(0.1 * lam_cap)
        .clamp(1e-12 * lam_cap, 0.99 * lam_cap);
    let mut lam_lo = 0.0_f64;
    let mut lam_hi = lam_cap;

    let mut b: Vec<f64> = match warm {
        Some(w) if w.block_lens.len() == caps.len() => w
            .block_lens
            .iter()
            .zip(&caps)
            .map(|(&bk, &cap)| bk.clamp(0.0, cap))
            .collect(),
        _ => vec![0.0; caps.len()],
    };

    let mut residual = f64::INFINITY;
    for l in 1..=opts.max_iters {
        for (k, group) in cost.groups.iter().enumerate() {
            b[k] = inner_block(group, t, overhead, caps[k], lam, b[k], opts.pd_step_b)?;
        }
        let rho_sum = rho_at(&b)?;
        let g = rho_sum - 1.0;
        residual = g.abs();
        if residual <= opts.kkt_tol {
            return Ok(P6Solution { block_lens: b, lambda: lam, iterations: l, residual });
        }
        // The violation decreases in lambda, so every sign observation
        // tightens a bracket the multiplicative update must stay inside.
        if g > 0.0 {
            lam_lo = lam_lo.max(lam);
        } else {
            lam_hi = lam_hi.min(lam);
        }
        if lam_hi - lam_lo <= f64::EPSILON * lam_hi {
            return Err(Error::SolverFailure {
                message: "dual bracket collapsed before the uplink constraint was met".into(),
                residual,
            });
        }
        let eta = opts.pd_step_lambda / (l as f64).sqrt();
        let proposal = lam * (1.0 + eta * g.clamp(-1.0, 10.0));
        lam = if lam_lo > 0.0 && lam_hi < lam_cap {
            // Both bracket ends observed: bisect in log space, which keeps
            // converging geometrically after the diminishing step has
            // decayed below useful sizes.
            (lam_lo * lam_hi).sqrt()
        } else if proposal > lam_lo
            && proposal < lam_hi
            && (proposal - lam).abs() >= 1e-3 * lam
        {
            proposal
        } else if g > 0.0 {
            // Progress stalled without an upper bracket end; the violation
            // can sit on a plateau (every group pinned at its cap), so jump
            // geometrically toward the cap until the sign flips.
            (lam * lam_hi).sqrt()
        } else if lam_lo > 0.0 {
            (lam_lo * lam).sqrt()
        } else {
            lam / 64.0
        };
    }
    Err(Error::SolverFailure {
        message: format!("dual iteration did not converge within {} steps", opts.max_iters),
        residual,
    })
}

/// Block length minimizing -b + lambda * rho_k(b) over [0, cap]: matches the
/// group's marginal rate to 1/lambda, or sits on the boundary whose rate
/// already over/undershoots.
fn inner_block(
    group: &[WorkerCost],
    t: f64,
    overhead: f64,
    cap: f64,
    lam: f64,
    start: f64,
    damping: f64,
) -> Result<f64> {
    if cap <= 0.0 {
        return Ok(0.0);
    }
    let target = 1.0 / lam;
    if group_bw_rate(0.0, t, group, overhead)? >= target {
        return Ok(0.0);
    }
    if group_bw_rate(cap, t, group, overhead)? <= target {
        return Ok(cap);
    }
    let budget = t - overhead;
    let mut lo = 0.0;
    let mut hi = cap;
    let mut b = start.clamp(0.0, cap);
    for _ in 0..200 {
        let mut f = -target;
        let mut fp = 0.0;
        for w in group {
            let slack = budget - w.compute_s_per_param * b;
            f += w.upload_s_per_param * budget / (slack * slack);
            fp += 2.0 * w.compute_s_per_param * w.upload_s_per_param * budget
                / (slack * slack * slack);
        }
        if f > 0.0 {
            hi = b;
        } else if f < 0.0 {
            lo = b;
        } else {
            return Ok(b);
        }
        if f.abs() <= 1e-12 * target {
            return Ok(b);
        }
        let mut next = b - damping * f / fp;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - b).abs() <= 1e-14 * cap {
            return Ok(next);
        }
        b = next;
    }
    Ok(b)
}
