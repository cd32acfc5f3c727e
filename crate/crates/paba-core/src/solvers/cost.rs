//! Per-parameter cost abstraction.
//!
//! With channels fixed for the round, worker (k, n) assigned a block of b
//! parameters and a bandwidth fraction rho finishes at
//!
//! ```text
//! t = overhead + a * b + u * b / rho
//! ```
//!
//! where `a` is its compute time per parameter, `u` its upload time per
//! parameter at full bandwidth, and `overhead` the broadcast plus server
//! update time common to everyone. Every solver works on these three numbers.

use crate::error::Result;
use crate::model::{push_latency, ChannelState, GroupTopology, RateTable, SystemParams};

/// One worker's cost coefficients.
#[derive(Debug, Clone, Copy)]
pub struct WorkerCost {
    /// Seconds of computation per assigned parameter (a).
    pub compute_s_per_param: f64,
    /// Seconds of upload per assigned parameter at full bandwidth (u).
    /// Infinite for a worker whose uplink rate is zero.
    pub upload_s_per_param: f64,
}

/// Cost coefficients for a whole topology under one channel realization.
#[derive(Debug, Clone)]
pub struct CostModel {
    /// Broadcast plus server-update time, identical for all workers.
    pub overhead_s: f64,
    pub groups: Vec<Vec<WorkerCost>>,
}

impl CostModel {
    pub fn build(
        topology: &GroupTopology,
        channels: &ChannelState,
        params: &SystemParams,
    ) -> Result<CostModel> {
        prepare(topology, channels, params).map(|(cost, _)| cost)
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }
}

/// Builds the cost model together with the rate table it was derived from,
/// so solvers can evaluate final allocations through the physical model.
pub(crate) fn prepare(
    topology: &GroupTopology,
    channels: &ChannelState,
    params: &SystemParams,
) -> Result<(CostModel, RateTable)> {
    params.validate()?;
    topology.validate()?;
    let rates = RateTable::from_channels(topology, channels, params)?;
    let push_s = push_latency(params, &rates)?;
    let groups = topology
        .groups
        .iter()
        .zip(&rates.uplink_se)
        .map(|(group, se_row)| {
            group
                .iter()
                .zip(se_row)
                .map(|(w, &se)| WorkerCost {
                    compute_s_per_param: w.data_samples as f64 * params.ops_per_param_sample
                        / w.cpu_freq_hz,
                    upload_s_per_param: params.bits_per_gradient / (params.bandwidth_hz * se),
                })
                .collect()
        })
        .collect();
    Ok((
        CostModel {
            overhead_s: push_s + params.server_update_time_s,
            groups,
        },
        rates,
    ))
}
