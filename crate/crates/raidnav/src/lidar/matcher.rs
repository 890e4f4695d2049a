//! Gauss-Newton scan-to-map alignment over point-to-line and point-to-plane
//! residuals.
//!
//! The pose increment is a 6-vector (tx, ty, tz, roll, pitch, yaw) applied
//! about the current estimate; Jacobians come from central differences, and
//! steps that increase the objective are halved until it stops increasing.

use super::features::FeatureSet;
use super::residual::{line_displacement, plane_displacement};
use super::voxel::VoxelFeatureMap;
use super::LidarError;
use crate::geometry::{compose, Transform3D};
use nalgebra::{Matrix6, Vector3, Vector6};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct MatchOptions {
    pub max_iterations: usize,
    /// Converged when the accepted step norm falls below this.
    pub step_tolerance: f64,
    /// Features whose nearest map neighbor is farther than this are dropped.
    pub max_correspondence_distance: f64,
    /// Minimum surviving correspondences before the solve is attempted.
    pub min_residuals: usize,
    /// Central-difference step for the numeric Jacobian.
    pub jacobian_step: f64,
    pub max_step_halvings: usize,
    /// Run correspondence search and residual assembly on the rayon pool.
    /// Ignored when the crate is built without the `parallel` feature.
    pub parallel: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            step_tolerance: 1e-10,
            max_correspondence_distance: 1.0,
            min_residuals: 6,
            jacobian_step: 1e-6,
            max_step_halvings: 15,
            parallel: cfg!(feature = "parallel"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    pub transform: Transform3D,
    pub converged: bool,
    pub iterations: usize,
    /// Final objective: sum of point-to-line and point-to-plane distances.
    pub final_cost: f64,
    pub correspondences: usize,
    /// Objective after each accepted iteration, for monotonicity checks.
    pub cost_trace: Vec<f64>,
}

/// One matched feature with its frozen map geometry.
enum Correspondence {
    Edge {
        p: Vector3<f64>,
        a: Vector3<f64>,
        b: Vector3<f64>,
    },
    Plane {
        p: Vector3<f64>,
        u: Vector3<f64>,
        v: Vector3<f64>,
        w: Vector3<f64>,
    },
}

fn map_items<T: Sync, U: Send>(parallel: bool, items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    if parallel {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Nearest-neighbor correspondence search under the pose `t`.
/// Each edge feature pairs with the line through its two nearest map edge
/// points; each planar feature with the patch of its three nearest planar
/// points. Degenerate geometry and gated-out features are skipped.
fn find_correspondences(
    features: &FeatureSet,
    map: &VoxelFeatureMap,
    t: &Transform3D,
    opts: &MatchOptions,
) -> Vec<Correspondence> {
    let gate_sq = opts.max_correspondence_distance * opts.max_correspondence_distance;

    let edges: Vec<Option<Correspondence>> =
        map_items(opts.parallel, features.edge_points.points(), |p| {
            if map.edge_count() < 2 {
                return None;
            }
            let q = t.apply(p);
            let nn = map.edge_tree().k_nearest(&q, 2);
            if nn.len() < 2 || nn[0].1 > gate_sq {
                return None;
            }
            let a = *map.edge_tree().point(nn[0].0);
            let b = *map.edge_tree().point(nn[1].0);
            line_displacement(&q, &a, &b).map(|_| Correspondence::Edge { p: *p, a, b })
        });

    let planes: Vec<Option<Correspondence>> =
        map_items(opts.parallel, features.planar_points.points(), |p| {
            if map.planar_count() < 3 {
                return None;
            }
            let q = t.apply(p);
            let nn = map.planar_tree().k_nearest(&q, 3);
            if nn.len() < 3 || nn[0].1 > gate_sq {
                return None;
            }
            let u = *map.planar_tree().point(nn[0].0);
            let v = *map.planar_tree().point(nn[1].0);
            let w = *map.planar_tree().point(nn[2].0);
            plane_displacement(&q, &u, &v, &w).map(|_| Correspondence::Plane { p: *p, u, v, w })
        });

    edges.into_iter().chain(planes).flatten().collect()
}

fn perturbation(delta: &Vector6<f64>) -> Transform3D {
    Transform3D::from_parts(delta[0], delta[1], delta[2], delta[3], delta[4], delta[5])
}

/// Residual block of one correspondence under pose `t`: up to three
/// components for an edge (perpendicular displacement vector), one signed
/// component for a plane.
fn residual_block(corr: &Correspondence, t: &Transform3D, out: &mut [f64; 3]) -> usize {
    match corr {
        Correspondence::Edge { p, a, b } => {
            let d = line_displacement(&t.apply(p), a, b).unwrap_or_default();
            out[0] = d.x;
            out[1] = d.y;
            out[2] = d.z;
            3
        }
        Correspondence::Plane { p, u, v, w } => {
            out[0] = plane_displacement(&t.apply(p), u, v, w).unwrap_or_default();
            1
        }
    }
}

fn distance_of(corr: &Correspondence, t: &Transform3D) -> f64 {
    let mut buf = [0.0; 3];
    let n = residual_block(corr, t, &mut buf);
    if n == 3 {
        (buf[0] * buf[0] + buf[1] * buf[1] + buf[2] * buf[2]).sqrt()
    } else {
        buf[0].abs()
    }
}

fn objective(corrs: &[Correspondence], t: &Transform3D, parallel: bool) -> f64 {
    map_items(parallel, corrs, |c| distance_of(c, t)).iter().sum()
}

/// Per-correspondence contribution to the normal equations.
struct NormalBlock {
    jtj: Matrix6<f64>,
    jtr: Vector6<f64>,
}

fn normal_block(corr: &Correspondence, base: &Transform3D, plus: &[Transform3D; 6], minus: &[Transform3D; 6], h: f64) -> NormalBlock {
    let mut r0 = [0.0; 3];
    let rows = residual_block(corr, base, &mut r0);
    let mut jac = [[0.0; 6]; 3];
    let mut rp = [0.0; 3];
    let mut rm = [0.0; 3];
    for j in 0..6 {
        residual_block(corr, &plus[j], &mut rp);
        residual_block(corr, &minus[j], &mut rm);
        for (row, slot) in jac.iter_mut().enumerate().take(rows) {
            slot[j] = (rp[row] - rm[row]) / (2.0 * h);
        }
    }
    let mut jtj = Matrix6::zeros();
    let mut jtr = Vector6::zeros();
    for row in 0..rows {
        for a in 0..6 {
            jtr[a] += jac[row][a] * r0[row];
            for b in a..6 {
                jtj[(a, b)] += jac[row][a] * jac[row][b];
            }
        }
    }
    // mirror the upper triangle
    for a in 0..6 {
        for b in 0..a {
            jtj[(a, b)] = jtj[(b, a)];
        }
    }
    NormalBlock { jtj, jtr }
}

/// Align `features` against `map`, starting from `initial`.
///
/// Correspondences are refreshed every iteration. Returns the best pose
/// found with a convergence flag; fewer than `min_residuals` surviving
/// correspondences is an error.
pub fn scan_match(
    features: &FeatureSet,
    map: &VoxelFeatureMap,
    initial: &Transform3D,
    opts: &MatchOptions,
) -> Result<MatchResult, LidarError> {
    let mut t = *initial;
    let mut converged = false;
    let mut iterations = 0;
    let mut cost_trace = Vec::new();
    let mut last_corr_count = 0;
    let mut final_cost = f64::INFINITY;
    let h = opts.jacobian_step;

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        let corrs = find_correspondences(features, map, &t, opts);
        last_corr_count = corrs.len();
        if corrs.len() < opts.min_residuals {
            return Err(LidarError::InsufficientCorrespondences(
                corrs.len(),
                opts.min_residuals,
            ));
        }

        let cost_before = objective(&corrs, &t, opts.parallel);
        if cost_before <= 1e-14 * corrs.len() as f64 {
            final_cost = cost_before;
            cost_trace.push(cost_before);
            converged = true;
            break;
        }

        // Perturbed poses are shared across all correspondences.
        let mut plus = [Transform3D::identity(); 6];
        let mut minus = [Transform3D::identity(); 6];
        for j in 0..6 {
            let mut d = Vector6::zeros();
            d[j] = h;
            plus[j] = compose(&perturbation(&d), &t);
            d[j] = -h;
            minus[j] = compose(&perturbation(&d), &t);
        }

        let blocks = map_items(opts.parallel, &corrs, |c| {
            normal_block(c, &t, &plus, &minus, h)
        });
        let mut jtj = Matrix6::zeros();
        let mut jtr = Vector6::zeros();
        for b in &blocks {
            jtj += b.jtj;
            jtr += b.jtr;
        }

        // Tiny Tikhonov term keeps the solve well posed for thin geometry.
        let damped = jtj + Matrix6::identity() * 1e-12;
        let Some(chol) = damped.cholesky() else {
            final_cost = cost_before;
            cost_trace.push(cost_before);
            break;
        };
        let mut delta = chol.solve(&(-jtr));

        // Step halving: accept only non-increasing objective values.
        let mut accepted = false;
        let mut cost_after = cost_before;
        for _ in 0..=opts.max_step_halvings {
            let candidate = compose(&perturbation(&delta), &t);
            let c = objective(&corrs, &candidate, opts.parallel);
            if c <= cost_before {
                t = candidate;
                cost_after = c;
                accepted = true;
                break;
            }
            delta /= 2.0;
        }
        final_cost = cost_after;
        cost_trace.push(cost_after);

        if !accepted {
            break; // no descent direction left at this correspondence set
        }
        if delta.norm() < opts.step_tolerance {
            converged = true;
            break;
        }
    }

    if final_cost.is_infinite() {
        // zero-iteration configuration
        let corrs = find_correspondences(features, map, &t, opts);
        last_corr_count = corrs.len();
        if corrs.len() < opts.min_residuals {
            return Err(LidarError::InsufficientCorrespondences(
                corrs.len(),
                opts.min_residuals,
            ));
        }
        final_cost = objective(&corrs, &t, opts.parallel);
    }

    Ok(MatchResult {
        transform: t,
        converged,
        iterations,
        final_cost,
        correspondences: last_corr_count,
        cost_trace,
    })
}
