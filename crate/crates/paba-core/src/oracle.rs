//! Independent reference solvers. These trade speed for obviousness and
//! exist purely to cross-check the real solvers: a simplex grid search for
//! the joint problem, a doubly-bisected rate-equalization solver for the
//! model-size problem, and finite differences for the marginal-rate
//! derivative.

use crate::error::{Error, Result};
use crate::model::{ChannelState, GroupTopology, SystemParams};
use crate::solvers::bisect::bisect_root;
use crate::solvers::cost::CostModel;
use crate::solvers::{
    group_b_max, group_rho_sum, param_aware_bw_alloc, Allocation, SolverOptions, WorkerCost,
};
use rayon::prelude::*;

/// Search resolution for [`grid_search_joint`]. Bounds default to the whole
/// simplex of block lengths.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub grid_points_per_dim: usize,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { grid_points_per_dim: 61, bounds: None }
    }
}

/// Exhaustive search over integer block-length vectors summing to the model
/// size, with the bandwidth split solved optimally at every point. A second
/// pass re-searches around the coarse optimum at ten-fold resolution.
pub fn grid_search_joint(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    grid: &GridSpec,
) -> Result<Allocation> {
    let k = topology.num_groups();
    if k > 4 {
        return Err(Error::invalid("grid search is limited to at most 4 groups"));
    }
    if grid.grid_points_per_dim < 3 {
        return Err(Error::invalid("grid search needs at least 3 points per dimension"));
    }
    let np = params.total_params;
    let full = vec![(0.0, np as f64); k];
    let bounds = grid.bounds.as_ref().unwrap_or(&full);
    if bounds.len() != k {
        return Err(Error::invalid("grid bounds length does not match group count"));
    }

    let coarse = search_pass(topology, channels, params, bounds, grid.grid_points_per_dim)?;
    // Refine around the coarse optimum, one coarse step each way.
    let steps: Vec<f64> = bounds
        .iter()
        .map(|&(lo, hi)| (hi - lo) / (grid.grid_points_per_dim - 1) as f64)
        .collect();
    let refined_bounds: Vec<(f64, f64)> = coarse
        .block_lens
        .iter()
        .zip(&steps)
        .map(|(&b, &h)| ((b as f64 - h).max(0.0), (b as f64 + h).min(np as f64)))
        .collect();
    let refined =
        search_pass(topology, channels, params, &refined_bounds, grid.grid_points_per_dim)?;
    Ok(if refined.round_latency_s <= coarse.round_latency_s { refined } else { coarse })
}

fn search_pass(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    bounds: &[(f64, f64)],
    points: usize,
) -> Result<Allocation> {
    let k = topology.num_groups();
    let np = params.total_params;
    let axes: Vec<Vec<u64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let mut vals: Vec<u64> = (0..points)
                .map(|i| {
                    let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
                    (x.round().max(0.0) as u64).min(np)
                })
                .collect();
            vals.dedup();
            vals
        })
        .collect();

    // Enumerate the first k-1 axes; the last group takes the remainder.
    let mut candidates: Vec<Vec<u64>> = Vec::new();
    let mut stack = vec![0u64; k];
    enumerate(&axes, 0, np, &mut stack, &mut candidates);
    if candidates.is_empty() {
        return Err(Error::InfeasibleProblem(
            "grid bounds admit no block vector matching the model size".into(),
        ));
    }

    let best = candidates
        .par_iter()
        .filter_map(|b| {
            param_aware_bw_alloc(topology, channels, params, b, &SolverOptions::default())
                .ok()
                .map(|alloc| (alloc, b.clone()))
        })
        .min_by(|(a, ba), (b, bb)| {
            a.round_latency_s
                .partial_cmp(&b.round_latency_s)
                .unwrap()
                .then_with(|| ba.cmp(bb))
        });
    best.map(|(alloc, _)| alloc).ok_or_else(|| {
        Error::InfeasibleProblem("no grid point admits a feasible bandwidth split".into())
    })
}

fn enumerate(
    axes: &[Vec<u64>],
    dim: usize,
    remaining: u64,
    stack: &mut Vec<u64>,
    out: &mut Vec<Vec<u64>>,
) {
    let k = axes.len();
    if dim == k - 1 {
        // Remainder must land inside the final axis's range.
        let (lo, hi) = (*axes[k - 1].first().unwrap(), *axes[k - 1].last().unwrap());
        if remaining >= lo && remaining <= hi {
            stack[k - 1] = remaining;
            out.push(stack.clone());
        }
        return;
    }
    for &v in &axes[dim] {
        if v > remaining {
            break;
        }
        stack[dim] = v;
        enumerate(axes, dim + 1, remaining - v, stack, out);
    }
}

/// Model-size maximization solved the blunt way: bisect the common marginal
/// rate; inside, find each group's block length matching that rate by
/// another bisection; stop when the uplink is exactly consumed.
pub fn rate_equalization_p6(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    t_round_s: f64,
    opts: &SolverOptions,
) -> Result<(f64, Vec<f64>)> {
    opts.validate()?;
    let cost = CostModel::build(topology, channels, params)?;
    let overhead = cost.overhead_s;
    let zero_rates: Vec<f64> = cost
        .groups
        .iter()
        .map(|g| crate::solvers::group_bw_rate(0.0, t_round_s, g, overhead))
        .collect::<Result<_>>()?;

    let blocks_at = |rate: f64| -> Result<Vec<f64>> {
        cost.groups
            .iter()
            .zip(&zero_rates)
            .map(|(g, &zr)| {
                if zr >= rate {
                    return Ok(0.0);
                }
                let hi = group_b_max(t_round_s, g, overhead)? * (1.0 - 1e-12);
                let f = |b: f64| {
                    crate::solvers::group_bw_rate(b, t_round_s, g, overhead)
                        .unwrap_or(f64::INFINITY)
                        - rate
                };
                Ok(bisect_root(f, 0.0, hi, 1e-14, 10_000)?.root)
            })
            .collect()
    };
    let used_at = |blocks: &[f64]| -> Result<f64> {
        cost.groups
            .iter()
            .zip(blocks)
            .map(|(g, &b)| group_rho_sum(b, t_round_s, g, overhead))
            .sum()
    };

    let finite_min = zero_rates.iter().cloned().filter(|r| r.is_finite()).fold(f64::INFINITY, f64::min);
    if !finite_min.is_finite() {
        return Err(Error::InfeasibleProblem("no group has a usable uplink".into()));
    }
    let mut hi = 2.0 * finite_min;
    let mut guard = 0;
    while used_at(&blocks_at(hi)?)? < 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 500 {
            return Err(Error::SolverFailure {
                message: "rate bracket search stalled".into(),
                residual: used_at(&blocks_at(hi)?)?,
            });
        }
    }
    let mut lo = hi;
    while used_at(&blocks_at(lo)?)? >= 1.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 1000 {
            return Err(Error::SolverFailure {
                message: "rate bracket search stalled".into(),
                residual: used_at(&blocks_at(lo)?)?,
            });
        }
    }
    let sol = bisect_root(
        |rate| match blocks_at(rate).and_then(|b| used_at(&b)) {
            Ok(u) => u - 1.0,
            Err(_) => f64::INFINITY,
        },
        lo,
        hi,
        1e-12,
        opts.max_iters.max(10_000),
    )?;
    let blocks = blocks_at(sol.root)?;
    Ok((blocks.iter().sum(), blocks))
}

/// Central finite difference of the group's bandwidth demand, for checking
/// the analytic marginal rate.
pub fn finite_diff_rate(
    block_len: f64,
    t_round_s: f64,
    group: &[WorkerCost],
    overhead_s: f64,
    h: f64,
) -> Result<f64> {
    // Negated so a NaN step is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(h > 0.0) || block_len - h < 0.0 {
        return Err(Error::invalid("finite-difference step leaves the domain"));
    }
    let b_max = group_b_max(t_round_s, group, overhead_s)?;
    if block_len + h >= b_max {
        return Err(Error::invalid("finite-difference step leaves the domain"));
    }
    let up = group_rho_sum(block_len + h, t_round_s, group, overhead_s)?;
    let down = group_rho_sum(block_len - h, t_round_s, group, overhead_s)?;
    Ok((up - down) / (2.0 * h))
}
