//! Synthetic cloud and scan generators for tests, benches, and the
//! `gen-scan` CLI subcommand.

use super::features::FeatureSet;
use crate::geometry::{Frame, PointCloud, Transform3D};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_points(n: usize, half_extent: f64, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|_| {
            Vector3::new(
                rng.gen_range(-half_extent..half_extent),
                rng.gen_range(-half_extent..half_extent),
                rng.gen_range(-half_extent..half_extent),
            )
        })
        .collect()
}

/// A feature set of uniformly scattered edge and planar points in a cube,
/// used as ground truth for transform-recovery tests.
pub fn random_feature_set(n_edge: usize, n_planar: usize, half_extent: f64, seed: u64) -> FeatureSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureSet {
        edge_points: PointCloud::new(random_points(n_edge, half_extent, &mut rng), Frame::Body)
            .expect("finite"),
        planar_points: PointCloud::new(random_points(n_planar, half_extent, &mut rng), Frame::Body)
            .expect("finite"),
        frame_index: 0,
    }
}

/// A rigid transform with translation norm at most `max_translation` and
/// rotation angle at most `max_rotation` about a random axis.
pub fn random_transform(max_translation: f64, max_rotation: f64, rng: &mut ChaCha8Rng) -> Transform3D {
    let dir = loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 {
            break v / n;
        }
    };
    let t = dir * rng.gen_range(0.0..=max_translation);
    let axis = loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 {
            break v / n;
        }
    };
    let angle = rng.gen_range(0.0..=max_rotation);
    let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(axis), angle);
    Transform3D::new(*rot.matrix(), t).expect("rotation from axis-angle is orthonormal")
}

/// An ordered scan tracing the inside of a rectangular room: four flat
/// walls with sharp corners. Good raw material for feature extraction.
pub fn room_scan(points_per_wall: usize, width: f64, depth: f64) -> Vec<Vector3<f64>> {
    let mut scan = Vec::with_capacity(4 * points_per_wall);
    let n = points_per_wall as f64;
    let (hw, hd) = (width / 2.0, depth / 2.0);
    for i in 0..points_per_wall {
        let s = i as f64 / n;
        scan.push(Vector3::new(hw, -hd + depth * s, 0.0));
    }
    for i in 0..points_per_wall {
        let s = i as f64 / n;
        scan.push(Vector3::new(hw - width * s, hd, 0.0));
    }
    for i in 0..points_per_wall {
        let s = i as f64 / n;
        scan.push(Vector3::new(-hw, hd - depth * s, 0.0));
    }
    for i in 0..points_per_wall {
        let s = i as f64 / n;
        scan.push(Vector3::new(-hw + width * s, -hd, 0.0));
    }
    scan
}

/// Uniform random cloud in a cube, as a [`PointCloud`].
pub fn random_cloud(n: usize, half_extent: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::new(random_points(n, half_extent, &mut rng), Frame::Body).expect("finite")
}
