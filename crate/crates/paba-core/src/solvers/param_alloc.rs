//! Bandwidth-aware parameter allocation: optimal block lengths when the
//! bandwidth split is given.
//!
//! With ratios fixed, a group's latency is affine in its block length with
//! slope c_k, the largest per-parameter cost (compute plus upload at the
//! worker's ratio) among its members. The min-max optimum equalizes all
//! group latencies, so the common latency solves
//!
//! ```text
//! sum_k (t - overhead) / c_k = N_p
//! ```
//!
//! and each block length follows in closed form from its own cost.

use super::bisect::bisect_root;
use super::cost::prepare;
use super::{round_blocks, Allocation, Diagnostics, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{round_latency, ChannelState, GroupTopology, SystemParams};

pub fn bw_aware_param_alloc(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
    given_bw_ratios: &[Vec<f64>],
    opts: &SolverOptions,
) -> Result<Allocation> {
    opts.validate()?;
    let (cost, rates) = prepare(topology, channels, params)?;
    topology.check_shape(given_bw_ratios, "given_bw_ratios")?;
    let mut rho_total = 0.0;
    for row in given_bw_ratios {
        for &rho in row {
            if !rho.is_finite() || rho <= 0.0 {
                return Err(Error::invalid(format!(
                    "given bandwidth ratios must be strictly positive, got {rho}"
                )));
            }
            rho_total += rho;
        }
    }
    if rho_total > 1.0 + 1e-9 {
        return Err(Error::invalid(format!(
            "given bandwidth ratios sum to {rho_total}, exceeding the uplink"
        )));
    }

    // Per-parameter latency slope of each group at the given ratios.
    let slopes: Vec<f64> = cost
        .groups
        .iter()
        .zip(given_bw_ratios)
        .map(|(group, rhos)| {
            group
                .iter()
                .zip(rhos)
                .map(|(w, &rho)| w.compute_s_per_param + w.upload_s_per_param / rho)
                .fold(0.0_f64, f64::max)
        })
        .collect();
    let inv_slope_sum: f64 = slopes.iter().map(|c| 1.0 / c).sum();
    if !(inv_slope_sum.is_finite() && inv_slope_sum > 0.0) {
        return Err(Error::InfeasibleProblem(
            "no group can take on parameters under the given bandwidth split".into(),
        ));
    }

    // Equalized latency above overhead; bisect the (linear, increasing) load
    // balance on a bracket that encloses its root.
    let np = params.total_params as f64;
    let sol = bisect_root(
        |x| x * inv_slope_sum - np,
        0.0,
        2.0 * np / inv_slope_sum,
        opts.bisect_tol_rel,
        opts.max_iters,
    )?;
    let t_star = cost.overhead_s + sol.root;
    let relaxed: Vec<f64> = slopes.iter().map(|c| sol.root / c).collect();

    let block_lens = round_blocks(&relaxed, params.total_params)?;
    let b_f: Vec<f64> = block_lens.iter().map(|&b| b as f64).collect();
    let latency = round_latency(topology, &rates, &b_f, given_bw_ratios, params)?;
    Ok(Allocation {
        block_lens,
        bw_ratios: given_bw_ratios.to_vec(),
        round_latency_s: latency,
        diagnostics: Diagnostics {
            iterations: sol.iterations,
            residual: sol.residual / np,
            relaxed_block_lens: relaxed,
            relaxed_latency_s: t_star,
            relaxed_bw_ratios: Some(given_bw_ratios.to_vec()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{equal_ratios, instance_from_costs};
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_groups_equalize_by_hand() {
        // Per-parameter slopes {1, 3} (compute + upload at rho = 1/2 each):
        // 3000 and 1000 parameters meet at the same latency.
        let (topology, channels, params) =
            instance_from_costs(&[vec![0.5], vec![1.5]], &[vec![0.25], vec![0.75]], 4000);
        let ratios = equal_ratios(&topology);
        let alloc =
            bw_aware_param_alloc(&topology, &channels, &params, &ratios, &Default::default())
                .unwrap();
        let d = &alloc.diagnostics;
        assert_relative_eq!(d.relaxed_block_lens[0], 3000.0, max_relative = 1e-5);
        assert_relative_eq!(d.relaxed_block_lens[1], 1000.0, max_relative = 1e-5);
        assert_relative_eq!(d.relaxed_latency_s, 3000.0, max_relative = 1e-5);
        assert_eq!(alloc.total_block_len(), 4000);
    }

    #[test]
    fn identical_groups_split_evenly() {
        let (topology, channels, params) = instance_from_costs(
            &vec![vec![1.0]; 4],
            &vec![vec![1.0]; 4],
            4000,
        );
        let ratios = equal_ratios(&topology);
        let alloc =
            bw_aware_param_alloc(&topology, &channels, &params, &ratios, &Default::default())
                .unwrap();
        assert_eq!(alloc.block_lens, vec![1000; 4]);
    }

    #[test]
    fn single_group_gets_all_parameters() {
        let (topology, channels, params) =
            instance_from_costs(&[vec![1.0]], &[vec![1.0]], 500);
        let ratios = equal_ratios(&topology);
        let alloc =
            bw_aware_param_alloc(&topology, &channels, &params, &ratios, &Default::default())
                .unwrap();
        assert_eq!(alloc.block_lens, vec![500]);
        // cost/param = 1 + 1 (upload at rho = 1), so t = 500 * 2 + overhead.
        assert_relative_eq!(alloc.round_latency_s, 1000.0, max_relative = 1e-6);
    }

    #[test]
    fn rejects_invalid_ratios() {
        let (topology, channels, params) =
            instance_from_costs(&[vec![1.0], vec![1.0]], &[vec![1.0], vec![1.0]], 100);
        let opts = SolverOptions::default();
        let bad = vec![vec![0.0], vec![0.5]];
        assert!(bw_aware_param_alloc(&topology, &channels, &params, &bad, &opts).is_err());
        let bad = vec![vec![0.8], vec![0.8]];
        assert!(bw_aware_param_alloc(&topology, &channels, &params, &bad, &opts).is_err());
    }
}
