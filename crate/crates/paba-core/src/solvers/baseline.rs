//! Reference scheme: blocks proportional to group compute capability, the
//! uplink split equally among all workers. Both optimized schemes are
//! measured against this.

use super::cost::prepare;
use super::{round_blocks, Allocation, Diagnostics};
use crate::error::{Error, Result};
use crate::model::{round_latency, ChannelState, GroupTopology, SystemParams};

/// A group is as capable as its slowest member: capability is the inverse of
/// the largest per-parameter compute time in the group.
pub fn baseline_allocation(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
) -> Result<Allocation> {
    let (cost, rates) = prepare(topology, channels, params)?;
    let capability: Vec<f64> = cost
        .groups
        .iter()
        .map(|g| {
            let a_max = g
                .iter()
                .map(|w| w.compute_s_per_param)
                .fold(0.0_f64, f64::max);
            1.0 / a_max
        })
        .collect();
    let total: f64 = capability.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::invalid(
            "group capabilities must be positive and finite for the proportional baseline",
        ));
    }
    let np = params.total_params as f64;
    let relaxed: Vec<f64> = capability.iter().map(|c| np * c / total).collect();
    let block_lens = round_blocks(&relaxed, params.total_params)?;

    let workers = topology.num_workers() as f64;
    let bw_ratios: Vec<Vec<f64>> = topology
        .groups
        .iter()
        .map(|g| vec![1.0 / workers; g.len()])
        .collect();

    let b_f: Vec<f64> = block_lens.iter().map(|&b| b as f64).collect();
    let latency = round_latency(topology, &rates, &b_f, &bw_ratios, params)?;
    Ok(Allocation {
        block_lens,
        bw_ratios: bw_ratios.clone(),
        round_latency_s: latency,
        diagnostics: Diagnostics {
            iterations: 0,
            residual: 0.0,
            relaxed_block_lens: relaxed,
            relaxed_latency_s: latency,
            relaxed_bw_ratios: Some(bw_ratios),
        },
    })
}
