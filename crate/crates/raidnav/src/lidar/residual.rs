//! Point-to-line and point-to-plane distance metrics used as scan-matching
//! residuals.

use super::LidarError;
use nalgebra::Vector3;

pub const DEGENERACY_TOL: f64 = 1e-12;

/// Distance from `p` to the infinite line through `a` and `b`:
/// `|(p-a) x (p-b)| / |a-b|`.
pub fn point_to_line_distance(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
) -> Result<f64, LidarError> {
    let ab = a - b;
    let denom = ab.norm();
    if denom < DEGENERACY_TOL {
        return Err(LidarError::DegenerateLine);
    }
    Ok((p - a).cross(&(p - b)).norm() / denom)
}

/// Unsigned distance from `p` to the plane through `u`, `v`, `w`:
/// `|(p-u) . n| / |n|` with `n = (u-v) x (u-w)`.
pub fn point_to_plane_distance(
    p: &Vector3<f64>,
    u: &Vector3<f64>,
    v: &Vector3<f64>,
    w: &Vector3<f64>,
) -> Result<f64, LidarError> {
    let n = (u - v).cross(&(u - w));
    let denom = n.norm();
    if denom < DEGENERACY_TOL {
        return Err(LidarError::DegeneratePlane);
    }
    Ok((p - u).dot(&n).abs() / denom)
}

/// Perpendicular displacement of `p` from the line through `a` and `b`.
/// Its norm equals [`point_to_line_distance`]; unlike the scalar it is
/// smooth in `p`, which keeps finite-difference Jacobians well behaved
/// near a zero residual.
pub(crate) fn line_displacement(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
) -> Option<Vector3<f64>> {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 < DEGENERACY_TOL * DEGENERACY_TOL {
        return None;
    }
    let ap = p - a;
    Some(ap - ab * (ap.dot(&ab) / len2))
}

/// Signed distance of `p` from the plane through `u`, `v`, `w` (unit normal).
/// Smooth counterpart of [`point_to_plane_distance`].
pub(crate) fn plane_displacement(
    p: &Vector3<f64>,
    u: &Vector3<f64>,
    v: &Vector3<f64>,
    w: &Vector3<f64>,
) -> Option<f64> {
    let n = (u - v).cross(&(u - w));
    let norm = n.norm();
    if norm < DEGENERACY_TOL {
        return None;
    }
    Some((p - u).dot(&n) / norm)
}
