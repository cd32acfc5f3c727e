//! Physical quantities and the per-round latency model.
//!
//! One communication round has three steps: the server broadcasts the full
//! parameter vector (push), every worker computes the gradient of its group's
//! parametric block over its local data subset (computation), and all workers
//! upload their block gradients over allocated uplink sub-bands before the
//! server updates the model (pull). Everything downstream — the allocation
//! solvers, the oracles, and the simulator — consumes only the types and
//! latency functions defined here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global system constants shared by all workers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemParams {
    /// Total system bandwidth in Hz, shared by downlink broadcast and uplink sub-bands.
    pub bandwidth_hz: f64,
    /// Access-point (server) transmit power in watts.
    pub ap_tx_power_w: f64,
    /// Worker transmit power in watts.
    pub worker_tx_power_w: f64,
    /// Channel noise variance in watts, fixed for all links.
    pub noise_variance_w: f64,
    /// Bits used to encode one model parameter on the downlink.
    pub bits_per_param: f64,
    /// Bits used to encode one gradient element on the uplink.
    pub bits_per_gradient: f64,
    /// Total number of model parameters to update each round.
    pub total_params: u64,
    /// Server-side model update time in seconds, identical for all workers.
    pub server_update_time_s: f64,
    /// CPU operations to compute one gradient element over one data sample.
    pub ops_per_param_sample: f64,
}

impl SystemParams {
    /// Checks that every constant is strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("ap_tx_power_w", self.ap_tx_power_w),
            ("worker_tx_power_w", self.worker_tx_power_w),
            ("noise_variance_w", self.noise_variance_w),
            ("bits_per_param", self.bits_per_param),
            ("bits_per_gradient", self.bits_per_gradient),
            ("server_update_time_s", self.server_update_time_s),
            ("ops_per_param_sample", self.ops_per_param_sample),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        if self.total_params == 0 {
            return Err(Error::invalid("total_params must be positive"));
        }
        Ok(())
    }
}

/// Compute capacity and data load of one worker.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WorkerProfile {
    /// CPU frequency in cycles per second.
    pub cpu_freq_hz: f64,
    /// Number of data samples loaded by this worker.
    pub data_samples: u64,
}

impl WorkerProfile {
    pub fn validate(&self) -> Result<()> {
        if !self.cpu_freq_hz.is_finite() || self.cpu_freq_hz <= 0.0 {
            return Err(Error::invalid(format!(
                "cpu_freq_hz must be strictly positive, got {}",
                self.cpu_freq_hz
            )));
        }
        if self.data_samples == 0 {
            return Err(Error::invalid("data_samples must be positive"));
        }
        Ok(())
    }
}

/// Workers organized into groups; group `k` jointly updates one parametric
/// block and its members together hold the whole dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupTopology {
    pub groups: Vec<Vec<WorkerProfile>>,
}

impl GroupTopology {
    pub fn new(groups: Vec<Vec<WorkerProfile>>) -> Result<Self> {
        let t = GroupTopology { groups };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::invalid("topology needs at least one group"));
        }
        for (k, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::invalid(format!("group {k} is empty")));
            }
            for w in g {
                w.validate()?;
            }
        }
        Ok(())
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_workers(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Iterates workers as `(group, index_in_group, profile)` in fixed order.
    pub fn workers(&self) -> impl Iterator<Item = (usize, usize, &WorkerProfile)> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(k, g)| g.iter().enumerate().map(move |(n, w)| (k, n, w)))
    }

    /// Checks that a per-worker table has the same group/worker shape.
    pub fn check_shape<T>(&self, per_worker: &[Vec<T>], what: &str) -> Result<()> {
        if per_worker.len() != self.groups.len()
            || self
                .groups
                .iter()
                .zip(per_worker)
                .any(|(g, row)| g.len() != row.len())
        {
            return Err(Error::invalid(format!("{what} shape does not match topology")));
        }
        Ok(())
    }
}

/// Per-worker downlink/uplink power gains for one round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelState {
    pub downlink_gain: Vec<Vec<f64>>,
    pub uplink_gain: Vec<Vec<f64>>,
}

impl ChannelState {
    pub fn validate(&self, topology: &GroupTopology) -> Result<()> {
        topology.check_shape(&self.downlink_gain, "downlink_gain")?;
        topology.check_shape(&self.uplink_gain, "uplink_gain")?;
        for row in self.downlink_gain.iter().chain(self.uplink_gain.iter()) {
            for &g in row {
                if !g.is_finite() || g < 0.0 {
                    return Err(Error::invalid(format!("channel gain must be >= 0, got {g}")));
                }
            }
        }
        Ok(())
    }
}

/// Spectral efficiencies (bits/s/Hz) derived from a channel state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateTable {
    pub downlink_se: Vec<Vec<f64>>,
    pub uplink_se: Vec<Vec<f64>>,
}

impl RateTable {
    /// Derives per-worker spectral efficiencies from gains and powers.
    pub fn from_channels(
        topology: &GroupTopology,
        channels: &ChannelState,
        params: &SystemParams,
    ) -> Result<Self> {
        params.validate()?;
        channels.validate(topology)?;
        let map = |gains: &Vec<Vec<f64>>, power: f64| -> Result<Vec<Vec<f64>>> {
            gains
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&g| spectral_efficiency(power, g, params.noise_variance_w))
                        .collect()
                })
                .collect()
        };
        Ok(RateTable {
            downlink_se: map(&channels.downlink_gain, params.ap_tx_power_w)?,
            uplink_se: map(&channels.uplink_gain, params.worker_tx_power_w)?,
        })
    }
}

/// Shannon spectral efficiency `log2(1 + P*H/N0)` in bits/s/Hz.
pub fn spectral_efficiency(tx_power: f64, gain: f64, noise: f64) -> Result<f64> {
    for (name, v) in [("tx_power", tx_power), ("gain", gain), ("noise", noise)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if noise == 0.0 {
        return Err(Error::invalid("noise must be strictly positive"));
    }
    Ok((1.0 + tx_power * gain / noise).log2())
}

/// Time for the server to broadcast the whole parameter vector to all
/// workers. The broadcast must reach the weakest downlink, so this is the
/// same constant for every worker in the round.
pub fn push_latency(params: &SystemParams, rates: &RateTable) -> Result<f64> {
    let bits = params.bits_per_param * params.total_params as f64;
    let mut worst = 0.0_f64;
    for row in &rates.downlink_se {
        for &se in row {
            if se <= 0.0 {
                return Err(Error::InfeasibleChannel(
                    "worker with zero downlink spectral efficiency cannot receive the model".into(),
                ));
            }
            worst = worst.max(bits / (params.bandwidth_hz * se));
        }
    }
    if rates.downlink_se.iter().all(|r| r.is_empty()) {
        return Err(Error::invalid("rate table has no workers"));
    }
    Ok(worst)
}

/// Time for one worker to compute the gradient of a `block_len`-parameter
/// block over its data subset. Linear in the block length.
pub fn computation_latency(worker: &WorkerProfile, block_len: f64, params: &SystemParams) -> f64 {
    block_len * worker.data_samples as f64 * params.ops_per_param_sample / worker.cpu_freq_hz
}

/// Time for one worker to upload `block_len` gradient elements over its
/// allocated fraction `bw_ratio` of the uplink bandwidth.
pub fn upload_latency(
    block_len: f64,
    bw_ratio: f64,
    uplink_se: f64,
    params: &SystemParams,
) -> Result<f64> {
    if block_len == 0.0 {
        return Ok(0.0);
    }
    if bw_ratio <= 0.0 {
        return Err(Error::InfeasibleAllocation(format!(
            "block of {block_len} gradients assigned with bandwidth ratio {bw_ratio}"
        )));
    }
    if uplink_se <= 0.0 {
        return Err(Error::InfeasibleChannel(
            "worker with zero uplink spectral efficiency cannot upload gradients".into(),
        ));
    }
    Ok(params.bits_per_gradient * block_len / (bw_ratio * params.bandwidth_hz * uplink_se))
}

/// One worker's full round latency: push + computation + upload + server update.
pub fn worker_latency(
    worker: &WorkerProfile,
    block_len: f64,
    bw_ratio: f64,
    uplink_se: f64,
    push_s: f64,
    params: &SystemParams,
) -> Result<f64> {
    Ok(push_s
        + computation_latency(worker, block_len, params)
        + upload_latency(block_len, bw_ratio, uplink_se, params)?
        + params.server_update_time_s)
}

/// A group finishes when its slowest member does.
pub fn group_latency(
    group: &[WorkerProfile],
    block_len: f64,
    bw_ratios: &[f64],
    uplink_se: &[f64],
    push_s: f64,
    params: &SystemParams,
) -> Result<f64> {
    let mut worst = push_s + params.server_update_time_s;
    for ((w, &rho), &se) in group.iter().zip(bw_ratios).zip(uplink_se) {
        let t = worker_latency(w, block_len, rho, se, push_s, params)?;
        if t > worst {
            worst = t;
        }
    }
    Ok(worst)
}

/// Synchronized updates make the round as slow as its slowest group.
/// Always at least push latency plus server update time.
pub fn round_latency(
    topology: &GroupTopology,
    rates: &RateTable,
    block_lens: &[f64],
    bw_ratios: &[Vec<f64>],
    params: &SystemParams,
) -> Result<f64> {
    if block_lens.len() != topology.num_groups() {
        return Err(Error::invalid("block_lens length does not match group count"));
    }
    topology.check_shape(bw_ratios, "bw_ratios")?;
    let push_s = push_latency(params, rates)?;
    let mut worst = push_s + params.server_update_time_s;
    for (k, group) in topology.groups.iter().enumerate() {
        let t = group_latency(
            group,
            block_lens[k],
            &bw_ratios[k],
            &rates.uplink_se[k],
            push_s,
            params,
        )?;
        if t > worst {
            worst = t;
        }
    }
    Ok(worst)
}

/// Total learning latency: the sum of per-round latencies.
pub fn learning_latency(per_round: &[f64]) -> Result<f64> {
    if per_round.is_empty() {
        return Err(Error::invalid("learning latency needs at least one round"));
    }
    Ok(per_round.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn test_params() -> SystemParams {
        SystemParams {
            bandwidth_hz: 1.0,
            ap_tx_power_w: 1.0,
            worker_tx_power_w: 1.0,
            noise_variance_w: 1.0,
            bits_per_param: 1.0,
            bits_per_gradient: 1.0,
            total_params: 1,
            server_update_time_s: 1.0,
            ops_per_param_sample: 1.0,
        }
    }

    #[test]
    fn spectral_efficiency_anchors() {
        assert_relative_eq!(spectral_efficiency(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(spectral_efficiency(3.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(spectral_efficiency(1.0, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn spectral_efficiency_rejects_bad_inputs() {
        assert!(spectral_efficiency(-1.0, 1.0, 1.0).is_err());
        assert!(spectral_efficiency(1.0, f64::NAN, 1.0).is_err());
        assert!(spectral_efficiency(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn push_latency_follows_slowest_downlink() {
        let mut params = test_params();
        params.bits_per_param = 32.0;
        params.total_params = 1_000_000;
        params.bandwidth_hz = 1e8;
        let rates = RateTable {
            downlink_se: vec![vec![2.0, 4.0]],
            uplink_se: vec![vec![1.0, 1.0]],
        };
        assert_relative_eq!(push_latency(&params, &rates).unwrap(), 0.16);

        let mut params = test_params();
        params.total_params = 1;
        let rates = RateTable {
            downlink_se: vec![vec![1.0]],
            uplink_se: vec![vec![1.0]],
        };
        assert_relative_eq!(push_latency(&params, &rates).unwrap(), 1.0);

        let rates = RateTable {
            downlink_se: vec![vec![1.0], vec![2.0]],
            uplink_se: vec![vec![1.0], vec![1.0]],
        };
        assert_relative_eq!(push_latency(&params, &rates).unwrap(), 1.0);
    }

    #[test]
    fn push_latency_zero_rate_is_infeasible() {
        let params = test_params();
        let rates = RateTable {
            downlink_se: vec![vec![0.0]],
            uplink_se: vec![vec![1.0]],
        };
        assert!(matches!(
            push_latency(&params, &rates),
            Err(Error::InfeasibleChannel(_))
        ));
    }

    #[test]
    fn computation_latency_is_linear() {
        let mut params = test_params();
        params.ops_per_param_sample = 10.0;
        let w = WorkerProfile {
            cpu_freq_hz: 1e9,
            data_samples: 100,
        };
        assert_relative_eq!(computation_latency(&w, 1000.0, &params), 1e-3);
        assert_eq!(computation_latency(&w, 0.0, &params), 0.0);
        assert_relative_eq!(
            computation_latency(&w, 2000.0, &params),
            2.0 * computation_latency(&w, 1000.0, &params)
        );
    }

    #[test]
    fn upload_latency_examples() {
        let mut params = test_params();
        params.bits_per_gradient = 32.0;
        params.bandwidth_hz = 1e8;
        assert_relative_eq!(upload_latency(1000.0, 0.1, 2.0, &params).unwrap(), 1.6e-3);
        assert_eq!(upload_latency(0.0, 0.5, 2.0, &params).unwrap(), 0.0);
        assert_relative_eq!(
            upload_latency(1000.0, 0.05, 2.0, &params).unwrap(),
            2.0 * upload_latency(1000.0, 0.1, 2.0, &params).unwrap()
        );
        assert!(matches!(
            upload_latency(10.0, 0.0, 2.0, &params),
            Err(Error::InfeasibleAllocation(_))
        ));
    }

    #[test]
    fn round_latency_sums_and_maxes() {
        // One worker: push=1, compute=2, upload=3, server=4 -> 10.
        let params = SystemParams {
            bandwidth_hz: 1.0,
            ap_tx_power_w: 1.0,
            worker_tx_power_w: 1.0,
            noise_variance_w: 1.0,
            bits_per_param: 1.0,
            bits_per_gradient: 3.0,
            total_params: 1,
            server_update_time_s: 4.0,
            ops_per_param_sample: 2.0,
        };
        let topology = GroupTopology::new(vec![vec![WorkerProfile {
            cpu_freq_hz: 1.0,
            data_samples: 1,
        }]])
        .unwrap();
        let rates = RateTable {
            downlink_se: vec![vec![1.0]],
            uplink_se: vec![vec![1.0]],
        };
        let t = round_latency(&topology, &rates, &[1.0], &[vec![1.0]], &params).unwrap();
        assert_relative_eq!(t, 10.0);
    }

    #[test]
    fn round_latency_is_slowest_group() {
        // Two single-worker groups with different compute speeds.
        let params = SystemParams {
            server_update_time_s: 1.0,
            ..test_params()
        };
        let topology = GroupTopology::new(vec![
            vec![WorkerProfile { cpu_freq_hz: 1.0, data_samples: 1 }],
            vec![WorkerProfile { cpu_freq_hz: 0.5, data_samples: 1 }],
        ])
        .unwrap();
        let rates = RateTable {
            downlink_se: vec![vec![1.0], vec![1.0]],
            uplink_se: vec![vec![1.0], vec![1.0]],
        };
        let t = round_latency(&topology, &rates, &[1.0, 1.0], &[vec![1.0], vec![0.0]], &params);
        // Second group has load but zero bandwidth.
        assert!(t.is_err());
        let t = round_latency(&topology, &rates, &[1.0, 1.0], &[vec![0.5], vec![0.5]], &params)
            .unwrap();
        // Group 1: 1 + 1 + 2 + 1 = 5; group 2: 1 + 2 + 2 + 1 = 6.
        assert_relative_eq!(t, 6.0);
    }

    #[test]
    fn zero_load_round_is_overheads_only() {
        let params = test_params();
        let topology = GroupTopology::new(vec![vec![WorkerProfile {
            cpu_freq_hz: 1.0,
            data_samples: 1,
        }]])
        .unwrap();
        let rates = RateTable {
            downlink_se: vec![vec![1.0]],
            uplink_se: vec![vec![1.0]],
        };
        let t = round_latency(&topology, &rates, &[0.0], &[vec![1.0]], &params).unwrap();
        assert_relative_eq!(t, 1.0 + 1.0); // push + server update
    }

    #[test]
    fn learning_latency_sums_rounds() {
        assert_relative_eq!(learning_latency(&[1.0, 2.0, 3.0]).unwrap(), 6.0);
        assert_relative_eq!(learning_latency(&[0.7]).unwrap(), 0.7);
        assert_relative_eq!(learning_latency(&vec![0.25; 100]).unwrap(), 25.0);
        assert!(learning_latency(&[]).is_err());
    }
}
