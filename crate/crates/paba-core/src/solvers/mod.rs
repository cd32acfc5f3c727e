//! Allocation solvers: the proportional baseline, the two one-sided optimal
//! schemes (parameter-only and bandwidth-only), the latency-budgeted model
//! size maximizer, the joint solver built on top of it, and two structured
//! special cases. All of them reduce the physical model to per-parameter
//! costs (see [`cost`]) and work with real-valued block lengths, integerized
//! only at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod baseline;
pub mod bisect;
pub mod bw_alloc;
pub mod cost;
pub mod joint;
pub mod model_size;
pub mod param_alloc;
pub mod rates;
pub mod special;

pub use baseline::baseline_allocation;
pub use bw_alloc::param_aware_bw_alloc;
pub use cost::{CostModel, WorkerCost};
pub use joint::joint_paba;
pub use model_size::model_size_max;
pub use param_alloc::bw_aware_param_alloc;
pub use rates::{group_b_max, group_bw_rate, group_rho_sum, rho_of_b, worker_bw_rate};
pub use special::{single_worker_special, uniform_group_special};

/// Numerical controls shared by every solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative bracket width at which bisections stop.
    pub bisect_tol_rel: f64,
    /// Base step size of the dual (multiplier) update; decays as 1/sqrt(iter).
    pub pd_step_lambda: f64,
    /// Damping factor on the primal block-length updates.
    pub pd_step_b: f64,
    /// Iteration budget per solver loop.
    pub max_iters: u64,
    /// Tolerance on stationarity residuals (constraint activity, rate spread).
    pub kkt_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            bisect_tol_rel: 1e-6,
            pd_step_lambda: 0.2,
            pd_step_b: 1.0,
            max_iters: 20_000,
            kkt_tol: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("bisect_tol_rel", self.bisect_tol_rel), ("kkt_tol", self.kkt_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        for (name, v) in [("pd_step_lambda", self.pd_step_lambda), ("pd_step_b", self.pd_step_b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        Ok(())
    }
}

/// Convergence bookkeeping plus the pre-rounding (relaxed) solution, kept so
/// optimality conditions can be checked where they actually hold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: u64,
    pub residual: f64,
    pub relaxed_block_lens: Vec<f64>,
    pub relaxed_latency_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxed_bw_ratios: Option<Vec<Vec<f64>>>,
}

/// A complete per-round decision: integer block lengths per group, bandwidth
/// fractions per worker, and the latency the decision achieves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Allocation {
    pub block_lens: Vec<u64>,
    pub bw_ratios: Vec<Vec<f64>>,
    pub round_latency_s: f64,
    pub diagnostics: Diagnostics,
}

impl Allocation {
    pub fn total_block_len(&self) -> u64 {
        self.block_lens.iter().sum()
    }

    pub fn bw_ratio_sum(&self) -> f64 {
        self.bw_ratios.iter().flatten().sum()
    }
}

/// Integerizes relaxed block lengths: the first K-1 groups round to nearest,
/// the last group absorbs the remainder. A negative remainder is repaid by
/// decrementing the groups that were rounded up the most.
pub fn round_blocks(relaxed: &[f64], total: u64) -> Result<Vec<u64>> {
    if relaxed.is_empty() {
        return Err(Error::invalid("cannot round an empty block vector"));
    }
    if relaxed.iter().any(|&b| !b.is_finite() || b < 0.0) {
        return Err(Error::invalid("relaxed block lengths must be finite and non-negative"));
    }
    let k = relaxed.len();
    let mut rounded: Vec<i64> = relaxed[..k - 1].iter().map(|&b| b.round() as i64).collect();
    let mut rem = total as i64 - rounded.iter().sum::<i64>();
    if rem >= 0 {
        rounded.push(rem);
    } else {
        rounded.push(0);
        while rem < 0 {
            let target = rounded[..k - 1]
                .iter()
                .enumerate()
                .filter(|&(_, &r)| r > 0)
                .max_by(|&(i, &a), &(j, &b)| {
                    let ga = a as f64 - relaxed[i];
                    let gb = b as f64 - relaxed[j];
                    ga.partial_cmp(&gb).unwrap().then(j.cmp(&i))
                })
                .map(|(i, _)| i)
                .ok_or_else(|| {
                    Error::invalid("rounding remainder exceeds the total block length")
                })?;
            rounded[target] -= 1;
            rem += 1;
        }
    }
    debug_assert_eq!(rounded.iter().sum::<i64>(), total as i64);
    Ok(rounded.into_iter().map(|r| r as u64).collect())
}

/// Builds physical instances whose cost coefficients are chosen exactly, so
/// solver tests can be written against hand-solved numbers.
#[cfg(test)]
pub(crate) mod testutil {
    use crate::model::{ChannelState, GroupTopology, SystemParams, WorkerProfile};

    /// Instance with prescribed per-worker compute costs `a` (s/param) and
    /// upload costs `u` (s/param at full bandwidth), negligible overheads.
    /// Requires a > 0 and u in [0.02, 50] so channel gains stay in range.
    pub fn instance_from_costs(
        a: &[Vec<f64>],
        u: &[Vec<f64>],
        total_params: u64,
    ) -> (GroupTopology, ChannelState, SystemParams) {
        let params = SystemParams {
            bandwidth_hz: 1.0,
            ap_tx_power_w: 1.0,
            worker_tx_power_w: 1.0,
            noise_variance_w: 1.0,
            bits_per_param: 1e-12,
            bits_per_gradient: 1.0,
            total_params,
            server_update_time_s: 1e-12,
            ops_per_param_sample: 1.0,
        };
        let topology = GroupTopology::new(
            a.iter()
                .map(|row| {
                    row.iter()
                        .map(|&a| WorkerProfile { cpu_freq_hz: 1.0 / a, data_samples: 1 })
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let channels = ChannelState {
            downlink_gain: a.iter().map(|row| vec![2f64.powi(40) - 1.0; row.len()]).collect(),
            uplink_gain: u
                .iter()
                .map(|row| row.iter().map(|&u| 2f64.powf(1.0 / u) - 1.0).collect())
                .collect(),
        };
        (topology, channels, params)
    }

    /// Equal bandwidth split over every worker.
    pub fn equal_ratios(topology: &GroupTopology) -> Vec<Vec<f64>> {
        let n = topology.num_workers() as f64;
        topology.groups.iter().map(|g| vec![1.0 / n; g.len()]).collect()
    }
}
