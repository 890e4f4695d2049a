//! Funnel-constrained adaptive barrier control for the per-side wheel
//! velocity loops, with hard actuator saturation and latched emergency
//! stop.
//!
//! Each side runs one [`ControllerState`]. The tracking error must stay
//! inside a shrinking performance funnel; the control effort grows without
//! bound as the error approaches the funnel wall, and a guard trips a
//! latched stop just before the barrier would blow up numerically. A
//! scalar adaptive parameter scales the RBF-based uncertainty compensation,
//! and the saturation governor realizes hard clamping as the algebraic
//! identity `u_safe = lambda * u_raw + lambda_bar`.

use crate::rbfn::{RbfNetwork, RbfOutput};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum RaidError {
    #[error("tracking error reached the funnel guard (e = {e:.4}, o = {o:.4})")]
    FunnelBreach { e: f64, o: f64 },
}

/// Time-varying tracking error bound: starts at `transient_bound`, decays
/// exponentially at `decay_rate`, and settles at `steady_bound`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PerformanceFunnel {
    /// Bound on the transient response, m/s.
    pub transient_bound: f64,
    /// Asymptotic bound, m/s.
    pub steady_bound: f64,
    /// Convergence rate of the bound, 1/s.
    pub decay_rate: f64,
}

impl PerformanceFunnel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.steady_bound > 0.0 && self.transient_bound >= self.steady_bound) {
            return Err("funnel requires transient_bound >= steady_bound > 0".into());
        }
        if self.decay_rate < 0.0 {
            return Err("funnel decay_rate must be >= 0".into());
        }
        Ok(())
    }

    /// Bound and its derivative at time `t`.
    pub fn value(&self, t: f64) -> (f64, f64) {
        debug_assert!(t >= 0.0);
        let gap = self.transient_bound - self.steady_bound;
        let decay = (-self.decay_rate * t).exp();
        let o = gap * decay + self.steady_bound;
        let o_dot = -self.decay_rate * gap * decay;
        (o, o_dot)
    }
}

/// Hard actuator bounds in RPM.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ActuatorLimits {
    pub lower: f64,
    pub upper: f64,
}

impl ActuatorLimits {
    pub fn validate(&self) -> Result<(), String> {
        if self.lower < self.upper {
            Ok(())
        } else {
            Err("actuator limits require lower < upper".into())
        }
    }
}

/// Output of the saturation governor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturation {
    pub lambda: f64,
    pub lambda_bar: f64,
    pub u_safe: f64,
}

/// Saturation as a smooth-composable identity: `u_safe = lambda * u_raw +
/// lambda_bar`, which equals the hard clamp of `u_raw` to the limits (the
/// sum is additionally clamped to swallow the last-ulp rounding of the
/// composition).
pub fn saturate(limits: &ActuatorLimits, u_raw: f64) -> Saturation {
    let (lambda, lambda_bar) = if u_raw > limits.upper {
        let lambda = 1.0 / (u_raw.abs() + 1.0);
        (lambda, limits.upper - lambda * u_raw)
    } else if u_raw < limits.lower {
        let lambda = 1.0 / (u_raw.abs() + 1.0);
        (lambda, limits.lower - lambda * u_raw)
    } else {
        (1.0, 0.0)
    };
    let u_safe = (lambda * u_raw + lambda_bar).clamp(limits.lower, limits.upper);
    Saturation {
        lambda,
        lambda_bar,
        u_safe,
    }
}

/// Hydraulic drivetrain inversion: pump speed per unit wheel velocity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PumpModel {
    /// Pump displacement, m^3 per revolution.
    pub displacement_pump: f64,
    /// Motor displacement, m^3 per revolution.
    pub displacement_motor: f64,
    /// Wheel-to-motor gear ratio (absorbs the rev/min conversion).
    pub gear_ratio: f64,
    /// Wheel radius, meters.
    pub wheel_radius: f64,
}

impl PumpModel {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.displacement_pump > 0.0
            && self.displacement_motor > 0.0
            && self.gear_ratio > 0.0
            && self.wheel_radius > 0.0;
        if ok {
            Ok(())
        } else {
            Err("all pump model fields must be positive".into())
        }
    }

    /// RPM commanded per m/s of wheel velocity reference.
    pub fn feedforward_gain(&self) -> f64 {
        self.gear_ratio * self.displacement_motor
            / (2.0 * std::f64::consts::PI * self.wheel_radius * self.displacement_pump)
    }
}

/// Model-based feedforward: pump RPM inverting the drivetrain at `v_bar`.
pub fn feedforward(pump: &PumpModel, v_bar: f64) -> f64 {
    pump.feedforward_gain() * v_bar
}

/// Whether the barrier law subtracts the feedforward it will be summed
/// with. `Cancel` nets the feedforward out of the plant input, leaving
/// barrier terms only; `Retain` keeps the model inversion active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeedforwardMode {
    Cancel,
    #[default]
    Retain,
}

/// Per-side controller state. Owned and mutated by exactly one control
/// loop; snapshots go out as immutable [`ControlOutput`] values.
#[derive(Debug, Clone)]
pub struct ControllerState {
    pub phi_hat: f64,
    pub beta: f64,
    pub kappa: f64,
    pub funnel: PerformanceFunnel,
    pub limits: ActuatorLimits,
    pub pump: PumpModel,
    pub net: RbfNetwork,
    /// Stop margin on `o^2 - e^2`, (m/s)^2.
    pub epsilon_guard: f64,
    pub estopped: bool,
    pub feedforward_mode: FeedforwardMode,
    /// Anti-escape bound on the adaptive parameter.
    pub phi_hat_max: f64,
    /// Times the adaptive parameter had to be clamped; stays zero in
    /// healthy runs.
    pub clamp_events: u64,
}

/// One control step's quantities, for logging and metrics.
#[derive(Debug, Clone, Copy)]
pub struct ControlOutput {
    /// Barrier law output, RPM.
    pub u: f64,
    /// Pre-saturation command `u + feedforward`, RPM.
    pub u_raw: f64,
    /// Saturated command actually applied, RPM.
    pub u_safe: f64,
    pub lambda: f64,
    pub lambda_bar: f64,
    /// Tracking error, m/s.
    pub e: f64,
    /// Funnel bound at this step, m/s.
    pub o: f64,
    pub phi_hat: f64,
    pub estop: bool,
}

/// Barrier control law. `f` is the feedforward that `u` will be summed
/// with downstream; in `Cancel` mode the law subtracts it here.
///
/// Errors with `FunnelBreach` when the squared funnel margin is inside the
/// guard, where the barrier fractions lose meaning.
pub fn barrier_control(
    state: &ControllerState,
    e: f64,
    o: f64,
    o_dot: f64,
    phi: &RbfOutput,
    v_bar_dot: f64,
    f: f64,
) -> Result<f64, RaidError> {
    let margin = o * o - e * e;
    if margin <= state.epsilon_guard {
        return Err(RaidError::FunnelBreach { e, o });
    }
    let ff = match state.feedforward_mode {
        FeedforwardMode::Cancel => f,
        FeedforwardMode::Retain => 0.0,
    };
    let phi4 = state.phi_hat.powi(4);
    let barrier_gain = phi4 * phi.norm + phi.norm_sq + v_bar_dot * v_bar_dot + 1.0;
    Ok(-ff
        - 0.5 * state.beta * e
        - (o_dot * o_dot * e.powi(3)) / (o * o * margin)
        - (e / margin) * barrier_gain)
}

/// Adaptive parameter update (explicit Euler): self-decay plus a cubic
/// growth term driven by the squared barrier fraction. The result is
/// clamped to `[0, phi_hat_max]`; clamps are counted on the state.
pub fn adapt(state: &mut ControllerState, e: f64, o: f64, phi: &RbfOutput, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    let margin = o * o - e * e;
    let fraction = e / margin;
    let phi_hat = state.phi_hat;
    let rate = -0.5 * state.kappa * phi_hat + fraction * fraction * phi_hat.powi(3) * phi.norm;
    let mut next = phi_hat + dt * rate;
    if next < 0.0 || next > state.phi_hat_max {
        state.clamp_events += 1;
        next = next.clamp(0.0, state.phi_hat_max);
    }
    state.phi_hat = next;
    next
}

/// Latched stop check: trips when the squared funnel margin falls to the
/// guard. Once tripped the state stays stopped.
pub fn estop_check(state: &mut ControllerState, e: f64, o: f64) -> bool {
    if o * o - e * e <= state.epsilon_guard {
        state.estopped = true;
    }
    state.estopped
}

/// One full control step for a side: error, stop check, RBF activation,
/// barrier law, adaptation, saturation. After a latch the output is held
/// at zero RPM.
pub fn control_step(
    state: &mut ControllerState,
    v_measured: f64,
    v_bar: f64,
    v_bar_dot: f64,
    t: f64,
    dt: f64,
) -> ControlOutput {
    let e = v_measured - v_bar;
    let (o, o_dot) = state.funnel.value(t);

    if estop_check(state, e, o) {
        return ControlOutput {
            u: 0.0,
            u_raw: 0.0,
            u_safe: 0.0,
            lambda: 1.0,
            lambda_bar: 0.0,
            e,
            o,
            phi_hat: state.phi_hat,
            estop: true,
        };
    }

    let phi = state.net.activate(v_measured);
    let f = feedforward(&state.pump, v_bar);
    let u = barrier_control(state, e, o, o_dot, &phi, v_bar_dot, f)
        .expect("guard checked by estop_check");
    let u_raw = u + f;
    let sat = saturate(&state.limits, u_raw);
    let phi_hat = adapt(state, e, o, &phi, dt);

    ControlOutput {
        u,
        u_raw,
        u_safe: sat.u_safe,
        lambda: sat.lambda,
        lambda_bar: sat.lambda_bar,
        e,
        o,
        phi_hat,
        estop: false,
    }
}
