//! Stability metrics over a completed run record: settling time, overshoot,
//! steady-state error, funnel and saturation compliance.
//!
//! Definitions (documented here because the usual textbook ones assume a
//! single step on an otherwise quiet record):
//!
//! * A *reference change* is a planner-tick step of the raw per-side
//!   reference larger than `reference_step_threshold_mps` (the run start
//!   counts, since the reference steps away from rest).
//! * *Settling time* is measured from the last reference change to the
//!   first sample after which the error magnitude stays within
//!   `band * |reference|` for at least `settled_hold_s` (or through the end
//!   of the record when less than the hold window remains).
//! * *Overshoot* is the largest positive excursion of `v - v_bar` after the
//!   first reference change, as a percentage of the largest reference
//!   magnitude seen in the record. Disturbance-recovery windup shows up
//!   here by design: both control laws are scored by the same rule.
//! * *Steady-state error* is the mean `|e|` over the final 20% of the
//!   record.

use super::record::RunRecord;
use super::HarnessError;
use crate::config::MetricsConfig;
use serde::Serialize;

/// Per-side stability metrics.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityMetrics {
    /// None when the error never stays in band.
    pub settling_time_s: Option<f64>,
    pub overshoot_pct: f64,
    pub steady_state_error_mps: f64,
    pub funnel_violations: u64,
    pub saturation_violations: u64,
    pub max_u_safe_abs_rpm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub band: f64,
    pub right: StabilityMetrics,
    pub left: StabilityMetrics,
}

#[derive(Clone, Copy)]
enum Side {
    Right,
    Left,
}

struct SideSeries<'a> {
    record: &'a RunRecord,
    side: Side,
}

impl SideSeries<'_> {
    fn e(&self, i: usize) -> f64 {
        match self.side {
            Side::Right => self.record.rows[i].right.e,
            Side::Left => self.record.rows[i].left.e,
        }
    }
    fn o(&self, i: usize) -> f64 {
        match self.side {
            Side::Right => self.record.rows[i].right.o,
            Side::Left => self.record.rows[i].left.o,
        }
    }
    fn u_safe(&self, i: usize) -> f64 {
        match self.side {
            Side::Right => self.record.rows[i].right.u_safe,
            Side::Left => self.record.rows[i].left.u_safe,
        }
    }
    fn estop(&self, i: usize) -> bool {
        match self.side {
            Side::Right => self.record.rows[i].right.estop,
            Side::Left => self.record.rows[i].left.estop,
        }
    }
    fn v_bar(&self, i: usize) -> f64 {
        match self.side {
            Side::Right => self.record.rows[i].v_bar_right,
            Side::Left => self.record.rows[i].v_bar_left,
        }
    }
    fn v_bar_target(&self, i: usize) -> f64 {
        match self.side {
            Side::Right => self.record.rows[i].v_bar_target_right,
            Side::Left => self.record.rows[i].v_bar_target_left,
        }
    }
}

/// Metrics with the default windows (5% analogue defaults live in
/// [`MetricsConfig`]); see [`compute_metrics_with`].
pub fn compute_metrics(record: &RunRecord, band: f64) -> Result<MetricsReport, HarnessError> {
    compute_metrics_with(record, band, &MetricsConfig::default())
}

pub fn compute_metrics_with(
    record: &RunRecord,
    band: f64,
    opts: &MetricsConfig,
) -> Result<MetricsReport, HarnessError> {
    if record.rows.is_empty() {
        return Err(HarnessError::EmptyRecord);
    }
    assert!(band > 0.0 && band < 1.0, "band must be in (0, 1)");
    let right = side_metrics(
        &SideSeries {
            record,
            side: Side::Right,
        },
        band,
        opts,
    );
    let left = side_metrics(
        &SideSeries {
            record,
            side: Side::Left,
        },
        band,
        opts,
    );
    Ok(MetricsReport { band, right, left })
}

fn side_metrics(s: &SideSeries, band: f64, opts: &MetricsConfig) -> StabilityMetrics {
    let n = s.record.rows.len();
    let dt = if n >= 2 {
        (s.record.rows[n - 1].t - s.record.rows[0].t) / (n - 1) as f64
    } else {
        s.record.control_dt
    };

    // reference change events on the raw planner output
    let mut last_change_idx = 0usize;
    let mut first_change_idx = None;
    let mut prev_target = 0.0;
    for i in 0..n {
        let target = s.v_bar_target(i);
        if (target - prev_target).abs() > opts.reference_step_threshold_mps {
            last_change_idx = i;
            first_change_idx.get_or_insert(i);
        }
        prev_target = target;
    }
    let first_change_idx = first_change_idx.unwrap_or(0);

    // settling: first index from which |e| <= band * |v_bar| holds for the
    // hold window (or through the end)
    let hold_steps = (opts.settled_hold_s / dt).round().max(1.0) as usize;
    let in_band: Vec<bool> = (0..n)
        .map(|i| s.e(i).abs() <= band * s.v_bar(i).abs())
        .collect();
    let mut run_after = vec![0usize; n + 1];
    for i in (0..n).rev() {
        run_after[i] = if in_band[i] { run_after[i + 1] + 1 } else { 0 };
    }
    let mut settling_time_s = None;
    for i in last_change_idx..n {
        let needed = hold_steps.min(n - i);
        if run_after[i] >= needed {
            settling_time_s = Some(s.record.rows[i].t - s.record.rows[last_change_idx].t);
            break;
        }
    }

    // overshoot relative to the largest reference magnitude
    let max_ref = (0..n)
        .map(|i| s.v_bar_target(i).abs())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let peak_over = (first_change_idx..n)
        .map(|i| s.e(i))
        .fold(0.0f64, f64::max);
    let overshoot_pct = 100.0 * peak_over / max_ref;

    // steady-state error: mean |e| over the final 20%
    let tail_start = (n as f64 * 0.8).floor() as usize;
    let tail = &(tail_start..n).map(|i| s.e(i).abs()).collect::<Vec<_>>();
    let steady_state_error_mps = tail.iter().sum::<f64>() / tail.len().max(1) as f64;

    let mut funnel_violations = 0;
    let mut saturation_violations = 0;
    let mut max_u_safe_abs_rpm = 0.0f64;
    for i in 0..n {
        let (e, o) = (s.e(i), s.o(i));
        if o * o - e * e <= s.record.epsilon_guard || s.estop(i) {
            funnel_violations += 1;
        }
        let u = s.u_safe(i);
        if u < s.record.limit_lower - 1e-9 || u > s.record.limit_upper + 1e-9 {
            saturation_violations += 1;
        }
        max_u_safe_abs_rpm = max_u_safe_abs_rpm.max(u.abs());
    }

    StabilityMetrics {
        settling_time_s,
        overshoot_pct,
        steady_state_error_mps,
        funnel_violations,
        saturation_violations,
        max_u_safe_abs_rpm,
    }
}

#[cfg(test)]
pub(crate) fn synthetic_record(
    duration: f64,
    dt: f64,
    v_bar: impl Fn(f64) -> f64,
    v: impl Fn(f64) -> f64,
) -> RunRecord {
    use super::record::StepRow;
    use crate::geometry::Pose2D;
    use crate::raid::ControlOutput;
    let steps = (duration / dt).round() as usize;
    let mk = |t: f64| {
        let e = v(t) - v_bar(t);
        ControlOutput {
            u: 0.0,
            u_raw: 0.0,
            u_safe: 0.0,
            lambda: 1.0,
            lambda_bar: 0.0,
            e,
            o: 0.30,
            phi_hat: 0.0,
            estop: false,
        }
    };
    RunRecord {
        scenario_id: "synthetic".into(),
        law: "raid",
        seed: 0,
        config_hash: "0".into(),
        control_dt: dt,
        epsilon_guard: (0.02 * 0.11f64).powi(2),
        limit_lower: -1250.0,
        limit_upper: 1250.0,
        rows: (0..steps)
            .map(|i| {
                let t = i as f64 * dt;
                StepRow {
                    t,
                    pose: Pose2D::origin(),
                    v_right: v(t),
                    v_left: v(t),
                    v_bar_right: v_bar(t),
                    v_bar_left: v_bar(t),
                    v_bar_target_right: v_bar(t),
                    v_bar_target_left: v_bar(t),
                    right: mk(t),
                    left: mk(t),
                }
            })
            .collect(),
        estopped: false,
        clamp_events: 0,
        finished_path: false,
        rbf_centers_right: vec![],
        rbf_centers_left: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_tracking_is_all_zeros() {
        let record = synthetic_record(10.0, 1e-3, |_| 1.0, |_| 1.0);
        let m = compute_metrics(&record, 0.05).unwrap();
        assert_eq!(m.right.settling_time_s, Some(0.0));
        assert_eq!(m.right.overshoot_pct, 0.0);
        assert_eq!(m.right.steady_state_error_mps, 0.0);
        assert_eq!(m.right.funnel_violations, 0);
        assert_eq!(m.right.saturation_violations, 0);
    }

    #[test]
    fn first_order_response_settles_at_ln20() {
        // v = v_bar (1 - exp(-t)), 5% band -> settling at -ln(0.05) = 3.00 s
        let record = synthetic_record(12.0, 1e-3, |_| 1.0, |t| 1.0 - (-t).exp());
        let m = compute_metrics(&record, 0.05).unwrap();
        let settling = m.right.settling_time_s.expect("settles");
        assert!((settling - 2.9957).abs() < 0.01, "settling = {settling}");
        assert_eq!(m.right.overshoot_pct, 0.0);
        assert!(m.right.steady_state_error_mps < 2e-4);
    }

    #[test]
    fn overshoot_measured_on_positive_peak() {
        // 10% overshoot pulse that decays
        let record = synthetic_record(8.0, 1e-3, |_| 1.0, |t| {
            1.0 + 0.1 * (-(t - 1.0).powi(2) / 0.02).exp()
        });
        let m = compute_metrics(&record, 0.05).unwrap();
        assert!((m.right.overshoot_pct - 10.0).abs() < 0.2, "{:?}", m.right);
    }

    #[test]
    fn never_settling_yields_none() {
        let record = synthetic_record(6.0, 1e-3, |_| 1.0, |t| 1.0 + 0.3 * (8.0 * t).sin());
        let m = compute_metrics(&record, 0.05).unwrap();
        assert!(m.right.settling_time_s.is_none());
    }

    #[test]
    fn empty_record_is_an_error() {
        let record = synthetic_record(0.0, 1e-3, |_| 1.0, |_| 1.0);
        assert!(matches!(
            compute_metrics(&record, 0.05),
            Err(HarnessError::EmptyRecord)
        ));
    }

    #[test]
    fn downsampling_changes_metrics_by_under_five_percent() {
        let record = synthetic_record(12.0, 1e-3, |_| 1.0, |t| 1.0 - (-t).exp());
        let full = compute_metrics(&record, 0.05).unwrap();
        for factor in [2usize, 5, 10] {
            let mut decimated = record.clone();
            decimated.rows = record.rows.iter().copied().step_by(factor).collect();
            let m = compute_metrics(&decimated, 0.05).unwrap();
            let (a, b) = (
                full.right.settling_time_s.unwrap(),
                m.right.settling_time_s.unwrap(),
            );
            assert!((a - b).abs() / a < 0.05, "factor {factor}: {a} vs {b}");
            let (a, b) = (
                full.right.steady_state_error_mps,
                m.right.steady_state_error_mps,
            );
            assert!((a - b).abs() <= 0.05 * a.max(1e-9), "sse {a} vs {b}");
        }
    }

    #[test]
    fn settling_restarts_on_late_reference_step() {
        // reference steps again at t = 6; settling must be measured from there
        let record = synthetic_record(
            12.0,
            1e-3,
            |t| if t < 6.0 { 1.0 } else { 1.5 },
            |t| {
                if t < 6.0 {
                    1.0 - (-t).exp()
                } else {
                    1.5 - 0.5 * (-(t - 6.0)).exp()
                }
            },
        );
        let m = compute_metrics(&record, 0.05).unwrap();
        let settling = m.right.settling_time_s.expect("settles");
        // 0.5 exp(-t') <= 0.05 * 1.5 -> t' = ln(0.5/0.075) = 1.897
        assert!((settling - 1.897).abs() < 0.02, "settling = {settling}");
    }
}
