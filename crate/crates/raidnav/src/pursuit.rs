//! Pure pursuit path following: picks a lookahead target on the waypoint
//! path and converts it into body velocity commands (v, omega).

use crate::geometry::{wrap_angle, Pose2D};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum PursuitError {
    #[error("waypoint path must contain at least one waypoint")]
    EmptyPath,
    #[error("lookahead and cruise speed must be positive")]
    BadParams,
    #[error("path CSV: {0}")]
    PathCsv(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Waypoints plus the pursuit tuning that travels with them.
#[derive(Debug, Clone)]
pub struct WaypointPath {
    pub waypoints: Vec<(f64, f64)>,
    pub lookahead: f64,
    pub cruise_speed: f64,
    /// Distance to the final waypoint below which the path counts as done.
    pub arrival_tolerance: f64,
}

impl WaypointPath {
    pub fn new(waypoints: Vec<(f64, f64)>, lookahead: f64, cruise_speed: f64) -> Result<Self, PursuitError> {
        if waypoints.is_empty() {
            return Err(PursuitError::EmptyPath);
        }
        if lookahead <= 0.0 || cruise_speed <= 0.0 {
            return Err(PursuitError::BadParams);
        }
        Ok(Self {
            waypoints,
            lookahead,
            cruise_speed,
            arrival_tolerance: 0.25,
        })
    }

    pub fn last(&self) -> (f64, f64) {
        *self.waypoints.last().expect("non-empty by construction")
    }
}

/// Progress along the path. The target index never decreases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PursuitState {
    pub current_target_index: usize,
    pub finished: bool,
}

/// Commanded body velocities. Finished paths command exact zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyCommand {
    pub v: f64,
    pub omega: f64,
}

/// The chosen target waypoint and its distance from the robot.
#[derive(Debug, Clone, Copy)]
pub struct Target {
    pub point: (f64, f64),
    pub distance: f64,
}

/// Select the first waypoint at index >= the current target whose distance
/// is at least the lookahead; if none remains, the last waypoint is used.
/// Arrival within tolerance of the final waypoint finishes the path.
pub fn select_target(
    pose: &Pose2D,
    path: &WaypointPath,
    state: &PursuitState,
) -> (Option<Target>, PursuitState) {
    if state.finished {
        return (None, *state);
    }
    let last_idx = path.waypoints.len() - 1;
    let (lx, ly) = path.last();
    if pose.distance_to(lx, ly) <= path.arrival_tolerance {
        return (
            None,
            PursuitState {
                current_target_index: last_idx,
                finished: true,
            },
        );
    }
    let mut idx = state.current_target_index.min(last_idx);
    while idx < last_idx {
        let (x, y) = path.waypoints[idx];
        if pose.distance_to(x, y) >= path.lookahead {
            break;
        }
        idx += 1;
    }
    let (x, y) = path.waypoints[idx];
    (
        Some(Target {
            point: (x, y),
            distance: pose.distance_to(x, y),
        }),
        PursuitState {
            current_target_index: idx,
            finished: false,
        },
    )
}

/// Steering angle toward the target. The bearing is taken relative to the
/// robot heading, and the result always lies in (-pi/2, pi/2).
pub fn steering_angle(pose: &Pose2D, target: (f64, f64), distance: f64, lookahead: f64) -> f64 {
    debug_assert!(distance > 0.0);
    let alpha = wrap_angle((target.1 - pose.y).atan2(target.0 - pose.x) - pose.theta);
    (2.0 * lookahead * alpha.sin() / distance).atan()
}

/// Body yaw rate for speed `v` and steering angle `delta`; exactly zero at
/// zero steering so straight-line motion carries no turn command.
pub fn angular_velocity(v: f64, delta: f64, distance: f64) -> f64 {
    debug_assert!(distance > 0.0);
    if delta == 0.0 {
        return 0.0;
    }
    2.0 * v * delta.tan() / distance
}

/// One planner tick: target selection, steering, speed capping via the
/// caller-provided `cap` (see `kinematics::cap_speed`), and the finished
/// latch that zeroes all commands.
pub fn step(
    pose: &Pose2D,
    path: &WaypointPath,
    state: &PursuitState,
    cap: impl Fn(f64, f64, f64) -> f64,
) -> (BodyCommand, PursuitState) {
    let (target, next) = select_target(pose, path, state);
    let Some(target) = target else {
        return (BodyCommand { v: 0.0, omega: 0.0 }, next);
    };
    let delta = steering_angle(pose, target.point, target.distance, path.lookahead);
    let v = cap(path.cruise_speed, delta, target.distance);
    let omega = angular_velocity(v, delta, target.distance);
    (BodyCommand { v, omega }, next)
}

/// Load waypoints from CSV (`x,y` per row; an alphabetic first line is
/// treated as a header).
pub fn path_from_csv(text: &str, lookahead: f64, cruise_speed: f64) -> Result<WaypointPath, PursuitError> {
    let mut waypoints = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.starts_with(|c: char| c.is_alphabetic()) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(PursuitError::PathCsv(format!(
                "line {}: expected 2 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let x = fields[0].trim().parse::<f64>().map_err(|e| PursuitError::PathCsv(format!("line {}: {e}", lineno + 1)))?;
        let y = fields[1].trim().parse::<f64>().map_err(|e| PursuitError::PathCsv(format!("line {}: {e}", lineno + 1)))?;
        waypoints.push((x, y));
    }
    WaypointPath::new(waypoints, lookahead, cruise_speed)
}

pub fn read_path_csv(path: &Path, lookahead: f64, cruise_speed: f64) -> Result<WaypointPath, PursuitError> {
    path_from_csv(&std::fs::read_to_string(path)?, lookahead, cruise_speed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

    fn no_cap(v: f64, _d: f64, _dist: f64) -> f64 {
        v
    }

    #[test]
    fn single_waypoint_is_target() {
        let path = WaypointPath::new(vec![(5.0, 0.0)], 1.0, 0.38).unwrap();
        let (t, s) = select_target(&Pose2D::origin(), &path, &PursuitState::default());
        let t = t.unwrap();
        assert_eq!(t.point, (5.0, 0.0));
        assert_relative_eq!(t.distance, 5.0);
        assert!(!s.finished);
    }

    #[test]
    fn waypoints_inside_lookahead_are_skipped() {
        let path = WaypointPath::new(vec![(0.5, 0.0), (2.0, 0.0)], 1.0, 0.38).unwrap();
        let (t, s) = select_target(&Pose2D::origin(), &path, &PursuitState::default());
        let t = t.unwrap();
        assert_eq!(t.point, (2.0, 0.0));
        assert_relative_eq!(t.distance, 2.0);
        assert_eq!(s.current_target_index, 1);
    }

    #[test]
    fn arrival_finishes_and_latches() {
        let path = WaypointPath::new(vec![(1.0, 0.0)], 1.0, 0.38).unwrap();
        let near = Pose2D::new(0.9, 0.0, 0.0);
        let (t, s) = select_target(&near, &path, &PursuitState::default());
        assert!(t.is_none());
        assert!(s.finished);
        // all subsequent commands are exact zeros
        let (cmd, s2) = step(&near, &path, &s, no_cap);
        assert_eq!(cmd, BodyCommand { v: 0.0, omega: 0.0 });
        assert!(s2.finished);
    }

    #[test]
    fn steering_examples() {
        // dead ahead
        assert_eq!(steering_angle(&Pose2D::origin(), (3.0, 0.0), 3.0, 1.0), 0.0);
        // diagonal target: alpha = pi/4, D = sqrt(2), L = 1 -> delta = pi/4
        let d = steering_angle(&Pose2D::origin(), (1.0, 1.0), SQRT_2, 1.0);
        assert_relative_eq!(d, FRAC_PI_4, max_relative = 1e-12);
        // behind-left target: alpha = 3pi/4, D = 2, L = 1
        let alpha = 3.0 * PI / 4.0;
        let target = (2.0 * alpha.cos(), 2.0 * alpha.sin());
        let d = steering_angle(&Pose2D::origin(), target, 2.0, 1.0);
        assert_relative_eq!(d, (alpha.sin()).atan(), max_relative = 1e-12);
        assert_relative_eq!(d, 0.6154797086703874, max_relative = 1e-10);
    }

    #[test]
    fn angular_velocity_examples() {
        assert_eq!(angular_velocity(0.38, 0.0, 2.0), 0.0);
        assert_eq!(angular_velocity(0.0, 0.3, 2.0), 0.0);
        let w = angular_velocity(0.38, FRAC_PI_4, SQRT_2);
        assert_relative_eq!(w, 2.0 * 0.38 / SQRT_2, max_relative = 1e-12);
        assert_relative_eq!(w, 0.5374011537017761, max_relative = 1e-10);
    }

    #[test]
    fn straight_path_commands_no_turn() {
        let path = WaypointPath::new(vec![(5.0, 0.0), (10.0, 0.0)], 1.0, 0.38).unwrap();
        let (cmd, _) = step(&Pose2D::origin(), &path, &PursuitState::default(), no_cap);
        assert_eq!(cmd.omega, 0.0);
        assert_relative_eq!(cmd.v, 0.38);
    }

    #[test]
    fn steering_bounded_below_right_angle() {
        for i in 0..500 {
            let ang = -PI + 2.0 * PI * (i as f64) / 500.0;
            let target = (3.0 * ang.cos(), 3.0 * ang.sin());
            let d = steering_angle(&Pose2D::origin(), target, 3.0, 2.0);
            assert!(d.abs() < std::f64::consts::FRAC_PI_2);
            assert!(angular_velocity(0.38, d, 3.0).is_finite());
        }
    }

    #[test]
    fn mirror_symmetry_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let pose = Pose2D::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-PI..PI),
            );
            let r = rng.gen_range(0.5..8.0);
            let bearing = rng.gen_range(-PI..PI);
            // target and its reflection across the heading axis
            let t1 = (
                pose.x + r * (pose.theta + bearing).cos(),
                pose.y + r * (pose.theta + bearing).sin(),
            );
            let t2 = (
                pose.x + r * (pose.theta - bearing).cos(),
                pose.y + r * (pose.theta - bearing).sin(),
            );
            let d1 = steering_angle(&pose, t1, r, 1.3);
            let d2 = steering_angle(&pose, t2, r, 1.3);
            assert!((d1 + d2).abs() < 1e-12, "d1={d1} d2={d2}");
            let w1 = angular_velocity(0.38, d1, r);
            let w2 = angular_velocity(0.38, d2, r);
            assert!((w1 + w2).abs() < 1e-12);
        }
    }

    #[test]
    fn target_index_is_monotone() {
        let path = WaypointPath::new(vec![(2.0, 0.0), (4.0, 0.0), (6.0, 0.0)], 1.0, 0.38).unwrap();
        let mut state = PursuitState::default();
        let mut last = 0;
        for i in 0..60 {
            let pose = Pose2D::new(0.1 * i as f64, 0.0, 0.0);
            let (_, next) = select_target(&pose, &path, &state);
            if next.finished {
                break;
            }
            assert!(next.current_target_index >= last);
            last = next.current_target_index;
            state = next;
        }
    }

    #[test]
    fn csv_parsing() {
        let path = path_from_csv("x,y\n1.0,2.0\n3.5,-1.25\n", 1.0, 0.4).unwrap();
        assert_eq!(path.waypoints, vec![(1.0, 2.0), (3.5, -1.25)]);
        assert!(path_from_csv("1.0\n", 1.0, 0.4).is_err());
        assert!(path_from_csv("", 1.0, 0.4).is_err());
    }
}
