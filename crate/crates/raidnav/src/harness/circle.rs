//! Least-squares circle fit over a recorded trajectory.

use super::record::RunRecord;
use super::HarnessError;
use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RadiusFit {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    /// |radius - nominal| / nominal, in percent.
    pub error_pct: f64,
}

/// Algebraic (Kasa) circle fit: minimize the residuals of
/// `x^2 + y^2 + D x + E y + F = 0`. Returns None for degenerate
/// (collinear or near-collinear) point sets.
pub fn fit_circle(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sxz, mut syz, mut sz) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let z = x * x + y * y;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxz += x * z;
        syz += y * z;
        sz += z;
    }
    let a = Matrix3::new(sxx, sxy, sx, sxy, syy, sy, sx, sy, n);
    let b = Vector3::new(-sxz, -syz, -sz);

    // collinear data makes the normal matrix rank deficient
    let scale = (sxx + syy + n) / 3.0;
    let det = a.determinant();
    if scale <= 0.0 || det.abs() < 1e-9 * scale.powi(3) {
        return None;
    }
    let sol = a.lu().solve(&b)?;
    let (d, e, f) = (sol[0], sol[1], sol[2]);
    let cx = -d / 2.0;
    let cy = -e / 2.0;
    let r2 = cx * cx + cy * cy - f;
    if r2 <= 0.0 {
        return None;
    }
    Some((cx, cy, r2.sqrt()))
}

/// Fit the recorded XY trajectory and compare against a nominal radius.
pub fn trajectory_radius(record: &RunRecord, nominal: f64) -> Result<RadiusFit, HarnessError> {
    assert!(nominal > 0.0);
    let points: Vec<(f64, f64)> = record.rows.iter().map(|r| (r.pose.x, r.pose.y)).collect();
    let (cx, cy, radius) = fit_circle(&points).ok_or(HarnessError::DegenerateFit)?;
    // a fit far beyond the data span is a line in disguise
    let span = points
        .iter()
        .map(|&(x, y)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    if !radius.is_finite() || span.1 > 100.0 * nominal {
        return Err(HarnessError::DegenerateFit);
    }
    Ok(RadiusFit {
        center_x: cx,
        center_y: cy,
        radius,
        error_pct: 100.0 * (radius - nominal).abs() / nominal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn exact_circle_fits_exactly() {
        let points: Vec<(f64, f64)> = (0..720)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 360.0;
                (1.5 + 5.0 * a.cos(), -2.0 + 5.0 * a.sin())
            })
            .collect();
        let (cx, cy, r) = fit_circle(&points).unwrap();
        assert!((cx - 1.5).abs() < 1e-9);
        assert!((cy + 2.0).abs() < 1e-9);
        assert!((r - 5.0).abs() < 1e-9);
    }

    #[test]
    fn radial_noise_stays_within_two_percent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let points: Vec<(f64, f64)> = (0..2000)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 2000.0;
                let r = 5.0 + rng.gen_range(-0.1..0.1);
                (r * a.cos(), r * a.sin())
            })
            .collect();
        let (_, _, r) = fit_circle(&points).unwrap();
        assert!((r - 5.0).abs() / 5.0 < 0.02, "fitted {r}");
    }

    #[test]
    fn partial_arc_still_fits() {
        // 240 degrees of arc, which is what a time-limited lap produces
        let points: Vec<(f64, f64)> = (0..1000)
            .map(|i| {
                let a = i as f64 * (240.0f64.to_radians()) / 1000.0;
                (5.0 * a.cos(), 5.0 * a.sin())
            })
            .collect();
        let (_, _, r) = fit_circle(&points).unwrap();
        assert!((r - 5.0).abs() < 1e-6);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let points: Vec<(f64, f64)> = (0..100).map(|i| (0.1 * i as f64, 2.0)).collect();
        assert!(fit_circle(&points).is_none());
        let sloped: Vec<(f64, f64)> = (0..100)
            .map(|i| (0.1 * i as f64, 3.0 - 0.25 * i as f64))
            .collect();
        assert!(fit_circle(&sloped).is_none());
    }
}
