//! Deterministic simulated drivetrain: per-side velocity dynamics with
//! configurable gain, drag, and slip injection, plus planar body
//! integration.
//!
//! Side dynamics integrate with RK4; the pose uses plain Euler (pose
//! accuracy is not under test, the controller-facing dynamics are).

use crate::geometry::{wrap_angle, Pose2D};
use crate::kinematics::RobotGeometry;
use serde::{Deserialize, Serialize};

/// Which side a slip event acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlipSide {
    Right,
    Left,
    Both,
}

/// Traction loss window: multiplicative gain scaling plus an additive
/// acceleration disturbance, active on `[t_start, t_end)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SlipEvent {
    pub t_start: f64,
    pub t_end: f64,
    pub side: SlipSide,
    pub g_scale: f64,
    pub delta_add: f64,
}

impl SlipEvent {
    pub fn validate(&self) -> Result<(), String> {
        if self.t_start >= self.t_end {
            return Err("slip event requires t_start < t_end".into());
        }
        if !(self.g_scale > 0.0) {
            return Err("slip g_scale must be positive".into());
        }
        Ok(())
    }
}

/// Plant description. The nominal velocity dynamics per side are
/// `v_dot = g(v,t) * u + d(v) + delta(t)` with `g` the (positive) control
/// gain, `d` first-order drag plus an optional quadratic term, and `delta`
/// the scheduled additive disturbance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantParams {
    /// Nominal control gain, (m/s^2) per RPM.
    pub g_nominal: f64,
    /// Drag time constant, seconds (infinite disables drag).
    pub tau: f64,
    /// Optional smooth nonlinearity: `-quad_drag * v * |v|`.
    #[serde(default)]
    pub quad_drag: f64,
    /// Multiplicative gain ripple amplitude (0 disables).
    #[serde(default)]
    pub g_ripple_amplitude: f64,
    /// Ripple period, seconds.
    #[serde(default = "default_ripple_period")]
    pub g_ripple_period: f64,
    /// Declared lower bound on the effective gain; must stay positive.
    pub g_min: f64,
    /// Declared upper bound on the effective gain.
    pub g_max: f64,
    /// Declared cap on the additive disturbance magnitude, m/s^2.
    pub delta_cap: f64,
    #[serde(default)]
    pub slip_events: Vec<SlipEvent>,
}

fn default_ripple_period() -> f64 {
    1.0
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.g_nominal > 0.0) {
            return Err("g_nominal must be positive".into());
        }
        if !(self.tau > 0.0) {
            return Err("tau must be positive".into());
        }
        if !(0.0..1.0).contains(&self.g_ripple_amplitude) {
            return Err("g_ripple_amplitude must be in [0, 1)".into());
        }
        if self.g_ripple_amplitude > 0.0 && !(self.g_ripple_period > 0.0) {
            return Err("g_ripple_period must be positive".into());
        }
        if !(self.g_min > 0.0) {
            return Err("g_min must be positive".into());
        }
        if self.g_max < self.g_min {
            return Err("g_max must be >= g_min".into());
        }
        if self.delta_cap < 0.0 {
            return Err("delta_cap must be >= 0".into());
        }
        let mut worst_scale: f64 = 1.0;
        for ev in &self.slip_events {
            ev.validate()?;
            worst_scale = worst_scale.min(ev.g_scale);
        }
        // conservative bound check: slowest gain and wildest overlap of deltas
        let g_low = self.g_nominal * (1.0 - self.g_ripple_amplitude) * worst_scale;
        let g_high = self.g_nominal * (1.0 + self.g_ripple_amplitude);
        if g_low < self.g_min || g_high > self.g_max {
            return Err(format!(
                "effective gain range [{g_low:.3e}, {g_high:.3e}] escapes declared [{:.3e}, {:.3e}]",
                self.g_min, self.g_max
            ));
        }
        for side in [SlipSide::Right, SlipSide::Left] {
            let total: f64 = self
                .slip_events
                .iter()
                .filter(|e| e.side == SlipSide::Both || e.side == side)
                .map(|e| e.delta_add.abs())
                .sum();
            if total > self.delta_cap {
                return Err(format!(
                    "slip deltas can reach {total:.3} m/s^2, above the declared cap {:.3}",
                    self.delta_cap
                ));
            }
        }
        Ok(())
    }
}

/// Simulated plant state: side velocities, pose, and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub v_right: f64,
    pub v_left: f64,
    pub pose: Pose2D,
    pub t: f64,
}

impl PlantState {
    pub fn at_rest(pose: Pose2D) -> Self {
        Self {
            v_right: 0.0,
            v_left: 0.0,
            pose,
            t: 0.0,
        }
    }
}

/// Effective slip multipliers at time `t` for one side: overlapping events
/// compose multiplicatively on the gain and additively on the disturbance.
pub fn schedule_slip(events: &[SlipEvent], t: f64, side: SlipSide) -> (f64, f64) {
    debug_assert!(side != SlipSide::Both, "query one side at a time");
    let mut g_scale = 1.0;
    let mut delta = 0.0;
    for ev in events {
        let applies = ev.side == SlipSide::Both || ev.side == side;
        if applies && t >= ev.t_start && t < ev.t_end {
            g_scale *= ev.g_scale;
            delta += ev.delta_add;
        }
    }
    (g_scale, delta)
}

fn side_rate(params: &PlantParams, side: SlipSide, v: f64, t: f64, u_safe: f64) -> f64 {
    let (g_scale, delta) = schedule_slip(&params.slip_events, t, side);
    assert!(
        delta.abs() <= params.delta_cap + 1e-12,
        "disturbance {delta} exceeds declared cap {}",
        params.delta_cap
    );
    let ripple = if params.g_ripple_amplitude > 0.0 {
        1.0 + params.g_ripple_amplitude
            * (2.0 * std::f64::consts::PI * t / params.g_ripple_period).sin()
    } else {
        1.0
    };
    let g = params.g_nominal * ripple * g_scale;
    let drag = -v / params.tau - params.quad_drag * v * v.abs();
    g * u_safe + drag + delta
}

fn rk4_side(params: &PlantParams, side: SlipSide, v: f64, t: f64, u_safe: f64, dt: f64) -> f64 {
    let k1 = side_rate(params, side, v, t, u_safe);
    let k2 = side_rate(params, side, v + 0.5 * dt * k1, t + 0.5 * dt, u_safe);
    let k3 = side_rate(params, side, v + 0.5 * dt * k2, t + 0.5 * dt, u_safe);
    let k4 = side_rate(params, side, v + dt * k3, t + dt, u_safe);
    v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Advance the side velocities by one step (zero-order-hold commands) and
/// move time forward. The pose is left untouched; see [`body_step`].
pub fn plant_step(
    state: &PlantState,
    params: &PlantParams,
    u_safe_right: f64,
    u_safe_left: f64,
    dt: f64,
) -> PlantState {
    debug_assert!(dt > 0.0);
    PlantState {
        v_right: rk4_side(params, SlipSide::Right, state.v_right, state.t, u_safe_right, dt),
        v_left: rk4_side(params, SlipSide::Left, state.v_left, state.t, u_safe_left, dt),
        pose: state.pose,
        t: state.t + dt,
    }
}

/// Integrate the unicycle pose from the current side velocities
/// (forward kinematics: `v = (v_r + v_l)/2`, `omega = (v_r - v_l)/width`).
/// Time is not advanced here.
pub fn body_step(state: &PlantState, geom: &RobotGeometry, dt: f64) -> PlantState {
    debug_assert!(dt > 0.0);
    let v = 0.5 * (state.v_right + state.v_left);
    let omega = (state.v_right - state.v_left) / geom.wheelbase_width;
    let pose = Pose2D::new(
        state.pose.x + v * state.pose.theta.cos() * dt,
        state.pose.y + v * state.pose.theta.sin() * dt,
        wrap_angle(state.pose.theta + omega * dt),
    );
    PlantState { pose, ..*state }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nominal() -> PlantParams {
        PlantParams {
            g_nominal: 1.0 / 1500.0,
            tau: 0.5,
            quad_drag: 0.0,
            g_ripple_amplitude: 0.0,
            g_ripple_period: 1.0,
            g_min: 1e-5,
            g_max: 1e-2,
            delta_cap: 0.1,
            slip_events: vec![],
        }
    }

    fn geom() -> RobotGeometry {
        RobotGeometry {
            wheelbase_width: 2.0,
            v_max: 0.97,
            wheel_radius: 0.4,
            gear_ratio: 2400.0,
        }
    }

    #[test]
    fn rest_stays_at_rest() {
        let s0 = PlantState::at_rest(Pose2D::origin());
        let s1 = plant_step(&s0, &nominal(), 0.0, 0.0, 1e-3);
        assert_eq!(s1.v_right, 0.0);
        assert_eq!(s1.v_left, 0.0);
        assert_relative_eq!(s1.t, 1e-3);
    }

    #[test]
    fn constant_input_matches_euler_without_drag() {
        let mut params = nominal();
        params.tau = f64::INFINITY;
        let s0 = PlantState::at_rest(Pose2D::origin());
        let s1 = plant_step(&s0, &params, 1140.0, 1140.0, 1e-3);
        // rate is constant in v and t, so RK4 equals the Euler value exactly
        assert!((s1.v_right - 0.00076).abs() < 1e-9, "v = {}", s1.v_right);
        assert!((s1.v_left - 0.00076).abs() < 1e-9);
    }

    #[test]
    fn steady_state_calibration() {
        // v_ss = g * u * tau = 1140 * 0.5 / 1500 = 0.38
        let params = nominal();
        let mut s = PlantState::at_rest(Pose2D::origin());
        for _ in 0..10_000 {
            s = plant_step(&s, &params, 1140.0, 1140.0, 1e-3);
        }
        assert_relative_eq!(s.v_right, 0.38, max_relative = 1e-8);
        assert_relative_eq!(s.v_left, 0.38, max_relative = 1e-8);
    }

    #[test]
    fn positive_command_moves_forward_from_rest() {
        let mut params = nominal();
        params.tau = f64::INFINITY; // no drag, no disturbance
        let s1 = plant_step(&PlantState::at_rest(Pose2D::origin()), &params, 50.0, 50.0, 1e-3);
        assert!(s1.v_right > 0.0 && s1.v_left > 0.0);
    }

    #[test]
    fn body_step_straight_and_point_turn() {
        let g = geom();
        let mut s = PlantState::at_rest(Pose2D::origin());
        s.v_right = 0.38;
        s.v_left = 0.38;
        let out = body_step(&s, &g, 1.0);
        assert_relative_eq!(out.pose.x, 0.38);
        assert_eq!(out.pose.y, 0.0);
        assert_eq!(out.pose.theta, 0.0);

        s.v_right = 0.2;
        s.v_left = -0.2;
        let out = body_step(&s, &g, 0.5);
        assert_eq!(out.pose.x, 0.0);
        assert_eq!(out.pose.y, 0.0);
        assert_relative_eq!(out.pose.theta, 0.1);
    }

    #[test]
    fn body_step_traces_circle() {
        let g = geom();
        let v = 0.38;
        let omega = 0.1;
        let radius = v / omega;
        let dt = 1e-3;
        let period = 2.0 * std::f64::consts::PI / omega;
        let mut s = PlantState::at_rest(Pose2D::origin());
        s.v_right = v + omega * g.wheelbase_width / 2.0;
        s.v_left = v - omega * g.wheelbase_width / 2.0;
        let steps = (period / dt).round() as usize;
        let mut max_radius_err: f64 = 0.0;
        for _ in 0..steps {
            s = body_step(&s, &g, dt);
            let r = ((s.pose.x).powi(2) + (s.pose.y - radius).powi(2)).sqrt();
            max_radius_err = max_radius_err.max((r - radius).abs());
        }
        // Euler pose drift over one full turn stays small at this rate
        assert!(max_radius_err < 5e-3, "radius error {max_radius_err}");
        assert!(s.pose.distance_to(0.0, 0.0) < 5e-3);
    }

    #[test]
    fn slip_schedule_membership_and_composition() {
        let events = vec![
            SlipEvent {
                t_start: 10.0,
                t_end: 20.0,
                side: SlipSide::Both,
                g_scale: 0.5,
                delta_add: -0.03,
            },
            SlipEvent {
                t_start: 15.0,
                t_end: 25.0,
                side: SlipSide::Right,
                g_scale: 0.8,
                delta_add: -0.02,
            },
        ];
        assert_eq!(schedule_slip(&events, 5.0, SlipSide::Right), (1.0, 0.0));
        let (g, d) = schedule_slip(&events, 12.0, SlipSide::Right);
        assert_relative_eq!(g, 0.5);
        assert_relative_eq!(d, -0.03);
        // overlap composes multiplicatively / additively
        let (g, d) = schedule_slip(&events, 17.0, SlipSide::Right);
        assert_relative_eq!(g, 0.4);
        assert_relative_eq!(d, -0.05);
        // left side only sees the "both" event
        let (g, d) = schedule_slip(&events, 17.0, SlipSide::Left);
        assert_relative_eq!(g, 0.5);
        assert_relative_eq!(d, -0.03);
        // half-open window: the end instant is outside
        assert_eq!(schedule_slip(&events, 25.0, SlipSide::Right), (1.0, 0.0));
    }

    #[test]
    fn trajectories_are_bit_identical() {
        let mut params = nominal();
        params.slip_events.push(SlipEvent {
            t_start: 0.5,
            t_end: 1.5,
            side: SlipSide::Both,
            g_scale: 0.6,
            delta_add: -0.05,
        });
        let run = || {
            let mut s = PlantState::at_rest(Pose2D::origin());
            let mut trace = Vec::new();
            for i in 0..3000 {
                let u = if i % 7 == 0 { 900.0 } else { 1140.0 };
                s = body_step(&s, &geom(), 1e-3);
                s = plant_step(&s, &params, u, 0.9 * u, 1e-3);
                trace.push((s.v_right.to_bits(), s.v_left.to_bits(), s.pose.x.to_bits()));
            }
            trace
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn validation_catches_bad_configs() {
        let mut p = nominal();
        p.g_min = 1e-3; // nominal/slip gain dips below this
        p.slip_events.push(SlipEvent {
            t_start: 0.0,
            t_end: 1.0,
            side: SlipSide::Both,
            g_scale: 0.5,
            delta_add: 0.0,
        });
        assert!(p.validate().is_err());

        let mut p = nominal();
        p.slip_events.push(SlipEvent {
            t_start: 0.0,
            t_end: 1.0,
            side: SlipSide::Both,
            g_scale: 0.6,
            delta_add: -0.2, // above delta_cap = 0.1
        });
        assert!(p.validate().is_err());

        let mut p = nominal();
        p.tau = 0.0;
        assert!(p.validate().is_err());

        assert!(nominal().validate().is_ok());
    }
}
