//! Skid-steer inverse kinematics and the turn-aware speed cap, plus the
//! filtered derivative used for reference accelerations.

use serde::{Deserialize, Serialize};

/// Physical drivetrain description. All fields must be positive.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RobotGeometry {
    /// Track width between the side wheel centerlines, meters.
    pub wheelbase_width: f64,
    /// Hard velocity limit of the machine, m/s.
    pub v_max: f64,
    /// Wheel radius, meters.
    pub wheel_radius: f64,
    /// Wheel-to-motor gear ratio.
    pub gear_ratio: f64,
}

impl RobotGeometry {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.wheelbase_width > 0.0
            && self.v_max > 0.0
            && self.wheel_radius > 0.0
            && self.gear_ratio > 0.0;
        if ok {
            Ok(())
        } else {
            Err("all robot geometry fields must be positive".into())
        }
    }
}

/// Per-side wheel velocity references with their time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideVelocityRefs {
    pub right: f64,
    pub left: f64,
    pub right_dot: f64,
    pub left_dot: f64,
}

/// Split a body command (v, omega) into side velocities:
/// right = v + omega*width/2, left = v - omega*width/2.
pub fn wheel_speeds(v: f64, omega: f64, geom: &RobotGeometry) -> SideVelocityRefs {
    let half = omega * geom.wheelbase_width / 2.0;
    SideVelocityRefs {
        right: v + half,
        left: v - half,
        right_dot: 0.0,
        left_dot: 0.0,
    }
}

/// Turn-aware speed cap: v is limited to
/// `v_max / (2 (1 + |tan(delta)| * width / distance))`, so the faster side
/// never exceeds the machine limit. The magnitude of the tangent keeps the
/// bound symmetric for left and right turns.
pub fn cap_speed(v_desired: f64, delta: f64, distance: f64, geom: &RobotGeometry) -> f64 {
    debug_assert!(distance > 0.0);
    debug_assert!(delta.abs() < std::f64::consts::FRAC_PI_2);
    let cap = geom.v_max / (2.0 * (1.0 + delta.tan().abs() * geom.wheelbase_width / distance));
    v_desired.min(cap)
}

/// Backward-difference derivative with a first-order low-pass.
/// Owned by a single control loop; not shared.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeFilter {
    tau: f64,
    last_input: Option<f64>,
    state: f64,
}

impl DerivativeFilter {
    /// `tau` is the low-pass time constant in seconds (0 disables smoothing).
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            last_input: None,
            state: 0.0,
        }
    }

    pub fn update(&mut self, input: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        let raw = match self.last_input {
            Some(prev) => (input - prev) / dt,
            None => 0.0,
        };
        self.last_input = Some(input);
        let alpha = if self.tau > 0.0 { dt / (self.tau + dt) } else { 1.0 };
        self.state += alpha * (raw - self.state);
        self.state
    }

    pub fn value(&self) -> f64 {
        self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom() -> RobotGeometry {
        RobotGeometry {
            wheelbase_width: 2.0,
            v_max: 0.97,
            wheel_radius: 0.4,
            gear_ratio: 2400.0,
        }
    }

    #[test]
    fn wheel_speed_examples() {
        let g = geom();
        let s = wheel_speeds(0.38, 0.0, &g);
        assert_eq!((s.right, s.left), (0.38, 0.38));
        let s = wheel_speeds(0.0, 0.2, &g);
        assert_relative_eq!(s.right, 0.2);
        assert_relative_eq!(s.left, -0.2);
        let s = wheel_speeds(0.38, 0.1, &g);
        assert_relative_eq!(s.right, 0.48);
        assert_relative_eq!(s.left, 0.28);
    }

    #[test]
    fn cap_examples() {
        let g = geom();
        // zero steering: cap = v_max / 2
        assert_relative_eq!(cap_speed(10.0, 0.0, 3.0, &g), 0.485);
        assert_relative_eq!(cap_speed(0.38, 0.0, 3.0, &g), 0.38);
        assert_eq!(cap_speed(0.0, 0.3, 2.0, &g), 0.0);
        // 45 degree steering, width 2, distance 2 -> v_max / 4
        let c = cap_speed(10.0, std::f64::consts::FRAC_PI_4, 2.0, &g);
        assert_relative_eq!(c, 0.2425, max_relative = 1e-12);
    }

    #[test]
    fn forward_kinematics_inversion_identity() {
        use rand::{Rng, SeedableRng};
        let g = geom();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let v = rng.gen_range(-1.0..1.0);
            let w = rng.gen_range(-1.0..1.0);
            let s = wheel_speeds(v, w, &g);
            assert_relative_eq!(s.right + s.left, 2.0 * v, max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(s.right - s.left, w * g.wheelbase_width, max_relative = 1e-12, epsilon = 1e-12);
            // linearity in (v, w)
            let k = 2.5;
            let sk = wheel_speeds(k * v, k * w, &g);
            assert_relative_eq!(sk.right, k * s.right, max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(sk.left, k * s.left, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn cap_never_exceeds_request_or_half_vmax() {
        use rand::{Rng, SeedableRng};
        let g = geom();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let v = rng.gen_range(0.0..2.0);
            let d = rng.gen_range(-1.5..1.5);
            let dist = rng.gen_range(0.2..8.0);
            let c = cap_speed(v, d, dist, &g);
            assert!(c <= v + 1e-15);
            assert!(c <= g.v_max / 2.0 + 1e-15);
            if v > 0.0 {
                assert!(c > 0.0);
            }
        }
    }

    #[test]
    fn derivative_filter_tracks_ramp() {
        let mut f = DerivativeFilter::new(0.05);
        let dt = 0.001;
        let mut t = 0.0;
        let mut last = 0.0;
        for _ in 0..1000 {
            t += dt;
            last = f.update(0.4 * t, dt);
        }
        // after 1 s (20 time constants) the filtered slope is the ramp rate
        assert_relative_eq!(last, 0.4, max_relative = 1e-3);
    }

    #[test]
    fn derivative_filter_first_sample_is_zero() {
        let mut f = DerivativeFilter::new(0.05);
        assert_eq!(f.update(5.0, 0.001), 0.0);
    }
}
