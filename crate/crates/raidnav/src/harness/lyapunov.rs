//! Barrier Lyapunov diagnostic and its exponential-envelope fit.

use super::record::RunRecord;
use super::HarnessError;
use serde::Serialize;

/// Diagnostic value for one side: `0.5 ln(o^2 / (o^2 - e^2)) + 0.5 phi^2`
/// (the adaptive-weight term uses a unit scale, which is enough for
/// monitoring decay).
pub fn lyapunov_value(e: f64, o: f64, phi_hat: f64) -> f64 {
    let margin = o * o - e * e;
    debug_assert!(margin > 0.0);
    0.5 * (o * o / margin).ln() + 0.5 * phi_hat * phi_hat
}

#[derive(Debug, Clone)]
pub struct LyapunovTrace {
    pub t: Vec<f64>,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    /// Sum over both sides.
    pub total: Vec<f64>,
}

/// Per-sample Lyapunov series. Fails if any sample sits on or past the
/// funnel guard, where the log is no longer defined.
pub fn lyapunov_trace(record: &RunRecord) -> Result<LyapunovTrace, HarnessError> {
    let mut t = Vec::with_capacity(record.rows.len());
    let mut right = Vec::with_capacity(record.rows.len());
    let mut left = Vec::with_capacity(record.rows.len());
    let mut total = Vec::with_capacity(record.rows.len());
    for row in &record.rows {
        for c in [&row.right, &row.left] {
            if c.o * c.o - c.e * c.e <= record.epsilon_guard || c.estop {
                return Err(HarnessError::BreachInTrace(row.t));
            }
        }
        let vr = lyapunov_value(row.right.e, row.right.o, row.right.phi_hat);
        let vl = lyapunov_value(row.left.e, row.left.o, row.left.phi_hat);
        t.push(row.t);
        right.push(vr);
        left.push(vl);
        total.push(vr + vl);
    }
    Ok(LyapunovTrace {
        t,
        right,
        left,
        total,
    })
}

/// Fitted exponential envelope
/// `V(t) <= c_bar * V(t0) e^(-rho_hat (t - t0)) + residual`, anchored at
/// the trace peak `t0` (samples before the peak sit under the envelope
/// because the exponential exceeds `V(t0)` there).
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeFit {
    pub rho_hat: f64,
    pub c_bar: f64,
    pub residual: f64,
    /// Anchor time: where the trace peaks and the decay claim starts.
    pub t0: f64,
    pub v0: f64,
    /// Whether the fitted envelope bounds every sample.
    pub holds: bool,
}

/// Fit the envelope to a series: the residual comes from the tail maximum,
/// the rate from a least-squares line on `ln(V - residual)` over the decay
/// from the peak, and `c_bar` is then the smallest constant that makes the
/// bound hold everywhere. Returns None when the series has no usable decay.
pub fn fit_envelope(t: &[f64], v: &[f64]) -> Option<EnvelopeFit> {
    if t.len() != v.len() || t.len() < 8 {
        return None;
    }
    let n = t.len();
    let peak = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
        .map(|(i, _)| i)?;

    // The residual covers the whole noise-floor region: everything after
    // the trace has decayed by 1000x (or the final 20% when it never does).
    let floor_start = (peak..n)
        .find(|&i| v[i] <= 1e-3 * v[peak])
        .unwrap_or((n as f64 * 0.8) as usize)
        .min(n - 1);
    let floor_max = v[floor_start..].iter().cloned().fold(0.0f64, f64::max);
    let residual = 1.05 * floor_max + 1e-12;

    // least squares on ln(V - residual) over the decay region; the far
    // tail (where the residual subtraction dominates) is excluded so it
    // cannot bias the rate
    let peak_height = v[peak] - residual;
    let floor = (0.02 * peak_height).max(1e-12);
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut count = 0.0;
    for i in peak..n {
        let y = v[i] - residual;
        if y >= floor {
            let x = t[i] - t[peak];
            let ly = y.ln();
            sx += x;
            sy += ly;
            sxx += x * x;
            sxy += x * ly;
            count += 1.0;
        }
    }
    if count < 4.0 {
        return None;
    }
    let denom = count * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (count * sxy - sx * sy) / denom;
    let rho_hat = -slope;
    if !(rho_hat > 0.0) {
        return None;
    }

    let t0 = t[peak];
    let v0 = v[peak].max(1e-12);
    // samples at or below the residual are bounded by it alone; the
    // constant only has to cover the decay region
    let mut c_bar = 0.0f64;
    for i in 0..n {
        let excess = v[i] - residual;
        if excess > 0.0 {
            let need = excess / (v0 * (-rho_hat * (t[i] - t0)).exp());
            c_bar = c_bar.max(need);
        }
    }
    c_bar = (c_bar * (1.0 + 1e-9)).max(1.0);

    let holds = (0..n).all(|i| {
        v[i] <= c_bar * v0 * (-rho_hat * (t[i] - t0)).exp() + residual + 1e-9
    });

    Some(EnvelopeFit {
        rho_hat,
        c_bar,
        residual,
        t0,
        v0,
        holds,
    })
}
