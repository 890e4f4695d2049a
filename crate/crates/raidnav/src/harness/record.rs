//! Per-step run records and their CSV serializations.

use crate::geometry::Pose2D;
use crate::raid::ControlOutput;
use std::fmt::Write as _;

/// Everything logged at one control tick.
#[derive(Debug, Clone, Copy)]
pub struct StepRow {
    pub t: f64,
    pub pose: Pose2D,
    pub v_right: f64,
    pub v_left: f64,
    /// Shaped (slew-limited) references the controllers track.
    pub v_bar_right: f64,
    pub v_bar_left: f64,
    /// Raw planner outputs before shaping.
    pub v_bar_target_right: f64,
    pub v_bar_target_left: f64,
    pub right: ControlOutput,
    pub left: ControlOutput,
}

/// A completed (or breach-terminated) scenario run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario_id: String,
    pub law: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub control_dt: f64,
    pub epsilon_guard: f64,
    pub limit_lower: f64,
    pub limit_upper: f64,
    pub rows: Vec<StepRow>,
    pub estopped: bool,
    pub clamp_events: u64,
    pub finished_path: bool,
    pub rbf_centers_right: Vec<f64>,
    pub rbf_centers_left: Vec<f64>,
}

impl RunRecord {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.rows.last().map(|r| r.t + self.control_dt).unwrap_or(0.0)
    }

    fn artifact_header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }

    /// Trajectory CSV: `t,x,y,theta,v_R,v_L,v_bar_R,v_bar_L`.
    pub fn trajectory_csv(&self) -> String {
        let mut out = self.artifact_header();
        out.push_str("t,x,y,theta,v_R,v_L,v_bar_R,v_bar_L\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.6},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}",
                r.t, r.pose.x, r.pose.y, r.pose.theta, r.v_right, r.v_left, r.v_bar_right, r.v_bar_left
            );
        }
        out
    }

    /// Controller CSV, one row per side per tick:
    /// `t,side,e,o,u,u_raw,u_safe,lambda,phi_hat,estop`.
    pub fn controls_csv(&self) -> String {
        let mut out = self.artifact_header();
        out.push_str("t,side,e,o,u,u_raw,u_safe,lambda,phi_hat,estop\n");
        for r in &self.rows {
            for (side, c) in [("R", &r.right), ("L", &r.left)] {
                let _ = writeln!(
                    out,
                    "{:.6},{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{}",
                    r.t,
                    side,
                    c.e,
                    c.o,
                    c.u,
                    c.u_raw,
                    c.u_safe,
                    c.lambda,
                    c.phi_hat,
                    u8::from(c.estop)
                );
            }
        }
        out
    }
}
