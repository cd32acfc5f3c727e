//! Run configuration: JSON file plus dotted-path overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::learning::{LossKind, RegKind};
use crate::model::SystemParams;
use crate::solvers::SolverOptions;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Allocation scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Proportional parameter split, even bandwidth split.
    Baseline,
    /// Optimal parameters under the baseline bandwidth split.
    BwAwarePa,
    /// Optimal bandwidth under the baseline parameter split.
    PaAwareBa,
    /// Joint optimization of both.
    Joint,
    /// Closed-form joint solution for single-worker groups.
    SingleWorkerSpecial,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Baseline => "baseline",
            Scheme::BwAwarePa => "bw_aware_pa",
            Scheme::PaAwareBa => "pa_aware_ba",
            Scheme::Joint => "joint",
            Scheme::SingleWorkerSpecial => "single_worker_special",
        }
    }

    /// The schemes compared in sweeps, in reporting order.
    pub fn compared() -> [Scheme; 4] {
        [Scheme::Baseline, Scheme::BwAwarePa, Scheme::PaAwareBa, Scheme::Joint]
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Scheme::Baseline),
            "bw_aware_pa" => Ok(Scheme::BwAwarePa),
            "pa_aware_ba" => Ok(Scheme::PaAwareBa),
            "joint" => Ok(Scheme::Joint),
            "single_worker_special" => Ok(Scheme::SingleWorkerSpecial),
            other => Err(Error::Config(format!(
                "unknown scheme {other:?}; expected one of baseline, bw_aware_pa, \
                 pa_aware_ba, joint, single_worker_special"
            ))),
        }
    }
}

/// Radio and model-size parameters, in the units people quote them in.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub bandwidth_hz: f64,
    pub ap_tx_power_dbm: f64,
    pub worker_tx_power_dbm: f64,
    /// Noise power spectral density; the noise variance scales with the
    /// full system bandwidth.
    pub noise_density_dbm_hz: f64,
    pub bits_per_param: f64,
    pub bits_per_gradient: f64,
    pub total_params: u64,
    pub server_update_time_s: f64,
    pub ops_per_param_sample: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            bandwidth_hz: 1e8,
            ap_tx_power_dbm: 46.0,
            worker_tx_power_dbm: 24.0,
            noise_density_dbm_hz: -174.0,
            bits_per_param: 32.0,
            bits_per_gradient: 32.0,
            total_params: 1_241_220,
            server_update_time_s: 0.01,
            ops_per_param_sample: 10.0,
        }
    }
}

impl SystemConfig {
    pub fn to_params(&self) -> Result<SystemParams> {
        let params = SystemParams {
            bandwidth_hz: self.bandwidth_hz,
            ap_tx_power_w: dbm_to_watts(self.ap_tx_power_dbm),
            worker_tx_power_w: dbm_to_watts(self.worker_tx_power_dbm),
            noise_variance_w: dbm_to_watts(self.noise_density_dbm_hz) * self.bandwidth_hz,
            bits_per_param: self.bits_per_param,
            bits_per_gradient: self.bits_per_gradient,
            total_params: self.total_params,
            server_update_time_s: self.server_update_time_s,
            ops_per_param_sample: self.ops_per_param_sample,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Cell geometry and worker population for the simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_groups: usize,
    pub group_size: usize,
    pub cell_radius_km: f64,
    pub min_distance_km: f64,
    /// CPU capacities sampled uniformly per worker, in GHz.
    pub capacities_ghz: Vec<f64>,
    /// Dataset size each group holds collectively.
    pub total_samples: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_groups: 15,
            group_size: 15,
            cell_radius_km: 0.15,
            min_distance_km: 0.001,
            capacities_ghz: (1..=10).map(|c| c as f64 / 10.0).collect(),
            total_samples: 15_936,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_groups == 0 || self.group_size == 0 {
            return Err(Error::Config("num_groups and group_size must be positive".into()));
        }
        if !(self.cell_radius_km > 0.0 && self.cell_radius_km.is_finite()) {
            return Err(Error::Config("cell_radius_km must be finite and positive".into()));
        }
        if !(self.min_distance_km > 0.0 && self.min_distance_km <= self.cell_radius_km) {
            return Err(Error::Config(
                "min_distance_km must be positive and at most cell_radius_km".into(),
            ));
        }
        if self.capacities_ghz.is_empty()
            || self.capacities_ghz.iter().any(|&c| !(c > 0.0 && c.is_finite()))
        {
            return Err(Error::Config("capacities_ghz must be positive and non-empty".into()));
        }
        if self.total_samples == 0 {
            return Err(Error::Config("total_samples must be positive".into()));
        }
        Ok(())
    }
}

/// Optional learning coupling for simulated rounds. When present, rounds run
/// block-coordinate descent on a synthetic task sized by these fields, and
/// `total_params` here replaces the latency-only model size.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    pub total_params: u64,
    pub total_samples: usize,
    pub nnz_per_sample: usize,
    pub loss_kind: LossKind,
    pub reg_kind: RegKind,
    pub reg_weight: f64,
    /// Constant step size; when absent a curvature-based default is used.
    pub step_size: Option<f64>,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            total_params: 2_000,
            total_samples: 500,
            nnz_per_sample: 10,
            loss_kind: LossKind::Logistic,
            reg_kind: RegKind::L2,
            reg_weight: 1e-3,
            step_size: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub scenario: ScenarioConfig,
    pub solver: SolverOptions,
    pub learning: Option<LearningConfig>,
    pub scheme: Scheme,
    pub seed: u64,
    pub rounds: u64,
    pub draws: u64,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemConfig::default(),
            scenario: ScenarioConfig::default(),
            solver: SolverOptions::default(),
            learning: None,
            scheme: Scheme::Joint,
            seed: 42,
            rounds: 10,
            draws: 100,
            out_dir: "out".into(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.to_params()?;
        self.scenario.validate()?;
        self.solver.validate()?;
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be positive".into()));
        }
        if self.draws == 0 {
            return Err(Error::Config("draws must be positive".into()));
        }
        if let Some(l) = &self.learning {
            if l.total_params == 0 || l.total_samples == 0 || l.nnz_per_sample == 0 {
                return Err(Error::Config(
                    "learning sizes (total_params, total_samples, nnz_per_sample) \
                     must be positive"
                        .into(),
                ));
            }
        }
        Ok(())
    }
}

/// Sets `value` at a dotted path like `system.bandwidth_hz`, creating
/// intermediate objects as needed.
fn set_path(root: &mut Value, path: &str, new: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override path {path:?} has an empty segment")));
    }
    for part in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(Error::Config(format!(
                "override path {path:?} descends into non-object at {part:?}"
            )));
        }
        node = node
            .as_object_mut()
            .unwrap()
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(map) => {
            map.insert(parts[parts.len() - 1].to_string(), new);
            Ok(())
        }
        None => Err(Error::Config(format!(
            "override path {path:?} descends into a non-object value"
        ))),
    }
}

/// Loads configuration from an optional JSON file and applies `key=value`
/// overrides. Values parse as JSON when possible and as strings otherwise;
/// unknown fields are rejected with the offending name.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut root: Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !root.is_object() {
        return Err(Error::Config("configuration root must be a JSON object".into()));
    }
    for item in overrides {
        let (key, raw) = item.split_once('=').ok_or_else(|| {
            Error::Config(format!("override {item:?} must have the form path=value"))
        })?;
        let parsed =
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(&mut root, key, parsed)?;
    }
    let config: RunConfig = serde_json::from_value(root)
        .map_err(|e| Error::Config(format!("configuration: {e}")))?;
    config.validate()?;
    Ok(config)
}
