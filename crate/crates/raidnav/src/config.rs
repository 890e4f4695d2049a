//! Run configuration: JSON schema, cross-field validation, config hashing.

use crate::kinematics::RobotGeometry;
use crate::plant::{PlantParams, SlipEvent};
use crate::raid::{ActuatorLimits, FeedforwardMode, PerformanceFunnel, PumpModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config invalid: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("path file: {0}")]
    PathFile(#[from] crate::pursuit::PursuitError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathConfig {
    /// Waypoint CSV, resolved relative to the config file's directory.
    #[serde(default)]
    pub file: Option<String>,
    /// Inline waypoints as an alternative to `file`.
    #[serde(default)]
    pub waypoints: Option<Vec<(f64, f64)>>,
    pub lookahead_m: f64,
    pub cruise_speed_mps: f64,
    #[serde(default = "default_arrival_tolerance")]
    pub arrival_tolerance_m: f64,
}

fn default_arrival_tolerance() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub beta: f64,
    pub kappa: f64,
    pub funnel: PerformanceFunnel,
    pub limits: ActuatorLimits,
    #[serde(default)]
    pub feedforward_mode: FeedforwardMode,
    #[serde(default = "default_phi_hat_init")]
    pub phi_hat_init: f64,
    #[serde(default = "default_phi_hat_max")]
    pub phi_hat_max: f64,
    /// Stop guard as a fraction of the steady-state funnel bound:
    /// the guard on `o^2 - e^2` is `(scale * steady_bound)^2`.
    #[serde(default = "default_guard_scale")]
    pub epsilon_guard_scale: f64,
    /// Slew rate applied to the side velocity references so runs start and
    /// transition inside the funnel; `null` disables shaping.
    #[serde(default = "default_slew")]
    pub reference_slew_mps2: Option<f64>,
    #[serde(default = "default_filter_tau")]
    pub derivative_filter_tau_s: f64,
}

fn default_phi_hat_init() -> f64 {
    0.1
}
fn default_phi_hat_max() -> f64 {
    100.0
}
fn default_guard_scale() -> f64 {
    0.02
}
fn default_slew() -> Option<f64> {
    Some(0.4)
}
fn default_filter_tau() -> f64 {
    0.05
}

impl ControllerConfig {
    pub fn epsilon_guard(&self) -> f64 {
        let margin = self.epsilon_guard_scale * self.funnel.steady_bound;
        margin * margin
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbfnConfig {
    pub neurons: usize,
    pub width: f64,
    /// Seed for the center draw; defaults to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PumpConfig {
    pub displacement_pump_m3_rev: f64,
    pub displacement_motor_m3_rev: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PidGainsConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantConfig {
    /// Nominal control gain, (m/s^2) per RPM.
    pub g_nominal_per_rpm: f64,
    pub tau_s: f64,
    #[serde(default)]
    pub quad_drag: f64,
    #[serde(default)]
    pub g_ripple_amplitude: f64,
    #[serde(default = "default_ripple_period")]
    pub g_ripple_period_s: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub delta_cap_mps2: f64,
}

fn default_ripple_period() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsConfig {
    /// Settling band as a fraction of the reference.
    #[serde(default = "default_band")]
    pub settling_band: f64,
    /// How long the error must stay in band to count as settled.
    #[serde(default = "default_hold")]
    pub settled_hold_s: f64,
    /// Reference steps smaller than this do not restart the settling clock.
    #[serde(default = "default_step_threshold")]
    pub reference_step_threshold_mps: f64,
}

fn default_band() -> f64 {
    0.05
}
fn default_hold() -> f64 {
    2.0
}
fn default_step_threshold() -> f64 {
    0.02
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            settling_band: default_band(),
            settled_hold_s: default_hold(),
            reference_step_threshold_mps: default_step_threshold(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Full scenario description, loaded from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_control_dt")]
    pub control_dt_s: f64,
    #[serde(default = "default_planner_dt")]
    pub planner_dt_s: f64,
    #[serde(default)]
    pub start_pose: StartPose,
    pub robot: RobotGeometry,
    pub path: PathConfig,
    pub controller: ControllerConfig,
    pub rbfn: RbfnConfig,
    pub pump: PumpConfig,
    pub plant: PlantConfig,
    #[serde(default)]
    pub slip_events: Vec<SlipEvent>,
    pub pid: PidGainsConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

fn default_control_dt() -> f64 {
    0.001
}
fn default_planner_dt() -> f64 {
    0.01
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));

        if self.duration_s < 0.0 {
            return fail("duration_s must be >= 0".into());
        }
        if !(self.control_dt_s > 0.0) {
            return fail("control_dt_s must be positive".into());
        }
        let ratio = self.planner_dt_s / self.control_dt_s;
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return fail("planner_dt_s must be an integer multiple of control_dt_s".into());
        }

        self.robot.validate().or_else(|e| fail(format!("robot: {e}")))?;
        self.controller.funnel.validate().or_else(|e| fail(format!("controller.funnel: {e}")))?;
        self.controller.limits.validate().or_else(|e| fail(format!("controller.limits: {e}")))?;
        if !(self.controller.beta > 0.0 && self.controller.kappa > 0.0) {
            return fail("controller gains beta and kappa must be positive".into());
        }
        // explicit-Euler stability of the adaptive decay
        if self.control_dt_s * self.controller.kappa / 2.0 >= 1.0 {
            return fail(format!(
                "control_dt_s * kappa / 2 = {} must be < 1",
                self.control_dt_s * self.controller.kappa / 2.0
            ));
        }
        if !(self.controller.phi_hat_init >= 0.0 && self.controller.phi_hat_init <= self.controller.phi_hat_max) {
            return fail("phi_hat_init must lie in [0, phi_hat_max]".into());
        }
        if !(self.controller.epsilon_guard_scale > 0.0 && self.controller.epsilon_guard_scale < 1.0) {
            return fail("epsilon_guard_scale must be in (0, 1)".into());
        }
        if let Some(slew) = self.controller.reference_slew_mps2 {
            if !(slew > 0.0) {
                return fail("reference_slew_mps2 must be positive when set".into());
            }
        }
        if self.controller.derivative_filter_tau_s < 0.0 {
            return fail("derivative_filter_tau_s must be >= 0".into());
        }

        if self.rbfn.neurons == 0 {
            return fail("rbfn.neurons must be >= 1".into());
        }
        if !(self.rbfn.width > 0.0) {
            return fail("rbfn.width must be positive".into());
        }

        self.pump_model().validate().or_else(|e| fail(format!("pump: {e}")))?;
        self.plant_params().validate().or_else(|e| fail(format!("plant: {e}")))?;

        if self.path.file.is_none() && self.path.waypoints.as_ref().map_or(true, |w| w.is_empty()) {
            return fail("path requires either a file or inline waypoints".into());
        }
        if !(self.path.lookahead_m > 0.0 && self.path.cruise_speed_mps > 0.0) {
            return fail("path lookahead and cruise speed must be positive".into());
        }
        if !(self.path.arrival_tolerance_m > 0.0) {
            return fail("path arrival_tolerance_m must be positive".into());
        }

        if self.pid.kp < 0.0 || self.pid.ki < 0.0 || self.pid.kd < 0.0 {
            return fail("pid gains must be >= 0".into());
        }
        if !(self.metrics.settling_band > 0.0 && self.metrics.settling_band < 1.0) {
            return fail("metrics.settling_band must be in (0, 1)".into());
        }
        Ok(())
    }

    pub fn pump_model(&self) -> PumpModel {
        PumpModel {
            displacement_pump: self.pump.displacement_pump_m3_rev,
            displacement_motor: self.pump.displacement_motor_m3_rev,
            gear_ratio: self.robot.gear_ratio,
            wheel_radius: self.robot.wheel_radius,
        }
    }

    pub fn plant_params(&self) -> PlantParams {
        PlantParams {
            g_nominal: self.plant.g_nominal_per_rpm,
            tau: self.plant.tau_s,
            quad_drag: self.plant.quad_drag,
            g_ripple_amplitude: self.plant.g_ripple_amplitude,
            g_ripple_period: self.plant.g_ripple_period_s,
            g_min: self.plant.g_min,
            g_max: self.plant.g_max,
            delta_cap: self.plant.delta_cap_mps2,
            slip_events: self.slip_events.clone(),
        }
    }

    pub fn rbfn_seed(&self) -> u64 {
        self.rbfn.seed.unwrap_or(self.seed)
    }

    /// Hash of the canonical serialized form (whitespace-insensitive).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            use std::fmt::Write as _;
            let _ = write!(out, "{byte:02x}");
        }
        out
    }

    /// Resolve the waypoint path, reading the CSV relative to `base_dir`
    /// when a file is configured.
    pub fn load_path(&self, base_dir: &Path) -> Result<crate::pursuit::WaypointPath, ConfigError> {
        let mut path = if let Some(file) = &self.path.file {
            crate::pursuit::read_path_csv(
                &base_dir.join(file),
                self.path.lookahead_m,
                self.path.cruise_speed_mps,
            )?
        } else {
            crate::pursuit::WaypointPath::new(
                self.path.waypoints.clone().unwrap_or_default(),
                self.path.lookahead_m,
                self.path.cruise_speed_mps,
            )?
        };
        path.arrival_tolerance = self.path.arrival_tolerance_m;
        Ok(path)
    }
}

#[cfg(test)]
pub(crate) fn nominal_test_config() -> RunConfig {
    // straight-line scenario with the experiment's controller settings
    serde_json::from_value(serde_json::json!({
        "seed": 42,
        "duration_s": 60.0,
        "start_pose": { "x": 0.0, "y": 0.0, "theta": 0.0 },
        "robot": {
            "wheelbase_width": 2.0,
            "v_max": 0.97,
            "wheel_radius": 0.4,
            "gear_ratio": 2400.0
        },
        "path": {
            "waypoints": [[3.0,0.0],[6.0,0.0],[9.0,0.0],[12.0,0.0],[15.0,0.0],
                          [18.0,0.0],[21.0,0.0],[24.0,0.0],[27.0,0.0],[30.0,0.0]],
            "lookahead_m": 1.0,
            "cruise_speed_mps": 0.38
        },
        "controller": {
            "beta": 1.2,
            "kappa": 5.2,
            "funnel": { "transient_bound": 0.30, "steady_bound": 0.11, "decay_rate": 9e-5 },
            "limits": { "lower": -1250.0, "upper": 1250.0 },
            "feedforward_mode": "retain"
        },
        "rbfn": { "neurons": 9, "width": 0.13 },
        "pump": {
            "displacement_pump_m3_rev": 1.8e-5,
            "displacement_motor_m3_rev": 5.654866776461628e-5
        },
        "plant": {
            "g_nominal_per_rpm": 0.0006666666666666666,
            "tau_s": 0.5,
            "g_min": 1e-5,
            "g_max": 1e-2,
            "delta_cap_mps2": 0.1
        },
        "slip_events": [
            { "t_start": 10.0, "t_end": 20.0, "side": "both", "g_scale": 0.6, "delta_add": -0.05 },
            { "t_start": 48.0, "t_end": 52.0, "side": "both", "g_scale": 0.6, "delta_add": -0.05 }
        ],
        "pid": { "kp": 2000.0, "ki": 60.0, "kd": 0.0 }
    }))
    .expect("test config is valid JSON")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_config_validates() {
        let config = nominal_test_config();
        assert!(config.validate().is_ok());
        assert_eq!(config.rbfn_seed(), 42);
        let pump = config.pump_model();
        approx::assert_relative_eq!(pump.feedforward_gain(), 3000.0, max_relative = 1e-9);
    }

    #[test]
    fn bad_funnel_rejected() {
        let mut config = nominal_test_config();
        config.controller.funnel.steady_bound = 0.0;
        assert!(matches!(config.validate(), Err(ConfigError::Invalid(_))));
        let mut config = nominal_test_config();
        config.controller.funnel.steady_bound = 0.4; // above transient bound
        assert!(config.validate().is_err());
    }

    #[test]
    fn adaptive_rate_stability_bound_enforced() {
        let mut config = nominal_test_config();
        config.control_dt_s = 0.5; // dt * kappa / 2 = 1.3
        assert!(config.validate().is_err());
    }

    #[test]
    fn limits_and_planner_ratio_checks() {
        let mut config = nominal_test_config();
        config.controller.limits.lower = 1250.0;
        assert!(config.validate().is_err());

        let mut config = nominal_test_config();
        config.planner_dt_s = 0.0035;
        assert!(config.validate().is_err());
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = nominal_test_config();
        let b = nominal_test_config();
        assert_eq!(a.hash(), b.hash());
        let mut c = nominal_test_config();
        c.seed = 43;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn json_round_trip() {
        let config = nominal_test_config();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(config.hash(), back.hash());
    }
}
