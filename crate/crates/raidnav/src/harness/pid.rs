//! PID baseline sharing the scenario, plant, and saturation path with the
//! barrier controller.

use crate::raid::{saturate, ActuatorLimits};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

/// Textbook PID on `e' = v_bar - v` with integral clamping against the
/// shared actuator limits.
#[derive(Debug, Clone)]
pub struct PidController {
    pub gains: PidGains,
    pub limits: ActuatorLimits,
    integral: f64,
    prev_error: Option<f64>,
}

impl PidController {
    pub fn new(gains: PidGains, limits: ActuatorLimits) -> Self {
        Self {
            gains,
            limits,
            integral: 0.0,
            prev_error: None,
        }
    }

    /// Raw (pre-saturation) command in RPM.
    pub fn step(&mut self, error: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        self.integral += error * dt;
        // anti-windup: the integral contribution alone never asks for more
        // than the actuator can deliver
        if self.gains.ki > 0.0 {
            let bound_hi = self.limits.upper / self.gains.ki;
            let bound_lo = self.limits.lower / self.gains.ki;
            self.integral = self.integral.clamp(bound_lo, bound_hi);
        }
        let derivative = match self.prev_error {
            Some(prev) => (error - prev) / dt,
            None => 0.0,
        };
        self.prev_error = Some(error);
        self.gains.kp * error + self.gains.ki * self.integral + self.gains.kd * derivative
    }

    /// Full step: raw command plus the shared saturation governor.
    pub fn step_saturated(&mut self, error: f64, dt: f64) -> crate::raid::Saturation {
        let u_raw = self.step(error, dt);
        saturate(&self.limits, u_raw)
    }
}
