//! Voxel feature maps merged from a sliding window of keyframes.

use super::features::FeatureSet;
use super::kdtree::KdTree;
use super::LidarError;
use crate::geometry::{transform_cloud, Transform3D};
use nalgebra::Vector3;
use std::collections::HashSet;

/// A retained scan: its features, its world pose, and its position in the
/// keyframe sequence.
#[derive(Debug, Clone)]
pub struct Keyframe {
    pub features: FeatureSet,
    pub pose: Transform3D,
    pub index: usize,
}

/// World-frame edge and planar feature maps, voxel-deduplicated, with
/// nearest-neighbor indices over both classes. Immutable once built.
pub struct VoxelFeatureMap {
    voxel_size: f64,
    keyframe_window: usize,
    edge_tree: KdTree,
    planar_tree: KdTree,
}

impl VoxelFeatureMap {
    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn keyframe_window(&self) -> usize {
        self.keyframe_window
    }

    pub fn edge_tree(&self) -> &KdTree {
        &self.edge_tree
    }

    pub fn planar_tree(&self) -> &KdTree {
        &self.planar_tree
    }

    pub fn edge_count(&self) -> usize {
        self.edge_tree.len()
    }

    pub fn planar_count(&self) -> usize {
        self.planar_tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_count() == 0 && self.planar_count() == 0
    }
}

fn voxel_key(p: &Vector3<f64>, size: f64) -> (i64, i64, i64) {
    (
        (p.x / size).floor() as i64,
        (p.y / size).floor() as i64,
        (p.z / size).floor() as i64,
    )
}

/// Merge the `n` most recent keyframes into a world-frame voxel map.
/// Within each voxel cell the first-inserted point is kept (insertion runs
/// oldest keyframe first, in point order), so the result is deterministic.
pub fn build_voxel_map(
    keyframes: &[Keyframe],
    n: usize,
    voxel_size: f64,
) -> Result<VoxelFeatureMap, LidarError> {
    if keyframes.is_empty() || n == 0 {
        return Err(LidarError::NoKeyframes);
    }
    assert!(voxel_size > 0.0, "voxel_size must be positive");

    let window = n.min(keyframes.len());
    let selected = &keyframes[keyframes.len() - window..];

    let mut edge_points = Vec::new();
    let mut planar_points = Vec::new();
    let mut edge_cells: HashSet<(i64, i64, i64)> = HashSet::new();
    let mut planar_cells: HashSet<(i64, i64, i64)> = HashSet::new();

    for kf in selected {
        let edges = transform_cloud(&kf.pose, &kf.features.edge_points);
        for p in edges.points() {
            if edge_cells.insert(voxel_key(p, voxel_size)) {
                edge_points.push(*p);
            }
        }
        let planes = transform_cloud(&kf.pose, &kf.features.planar_points);
        for p in planes.points() {
            if planar_cells.insert(voxel_key(p, voxel_size)) {
                planar_points.push(*p);
            }
        }
    }

    Ok(VoxelFeatureMap {
        voxel_size,
        keyframe_window: window,
        edge_tree: KdTree::build(edge_points),
        planar_tree: KdTree::build(planar_points),
    })
}
