//! LiDAR odometry math on synthetic scans: smoothness-based feature
//! extraction, voxel feature maps over a sliding keyframe window,
//! point-to-line / point-to-plane residuals, Gauss-Newton scan matching,
//! and radius-search loop-closure candidates.

mod features;
mod kdtree;
mod loop_closure;
mod matcher;
mod residual;
pub mod synthetic;
mod voxel;

pub use features::{extract_features, smoothness, FeatureSet, SmoothnessParams};
pub use kdtree::KdTree;
pub use loop_closure::{loop_closure_candidates, LoopCandidate};
pub use matcher::{scan_match, MatchOptions, MatchResult};
pub use residual::{point_to_line_distance, point_to_plane_distance};
pub use voxel::{build_voxel_map, Keyframe, VoxelFeatureMap};

use crate::geometry::Transform3D;

#[derive(Debug, thiserror::Error)]
pub enum LidarError {
    #[error("scan too short for the requested neighborhood (len {len}, need > {need})")]
    EmptyScan { len: usize, need: usize },
    #[error("index {k} has no full neighborhood in a scan of {len} points")]
    IndexOutOfNeighborhood { k: usize, len: usize },
    #[error("point {0} has zero range; smoothness is undefined")]
    DegeneratePoint(usize),
    #[error("line endpoints coincide")]
    DegenerateLine,
    #[error("plane points are collinear")]
    DegeneratePlane,
    #[error("no keyframes to build a map from")]
    NoKeyframes,
    #[error("only {0} correspondences survive gating; at least {1} required")]
    InsufficientCorrespondences(usize, usize),
}

/// Keyframe admission rule: a frame is admitted when the motion since the
/// last keyframe exceeds either threshold.
pub fn should_admit_keyframe(
    last: &Transform3D,
    candidate: &Transform3D,
    translation_threshold: f64,
    rotation_threshold: f64,
) -> bool {
    last.translation_distance_to(candidate) >= translation_threshold
        || last.rotation_angle_to(candidate) >= rotation_threshold
}
