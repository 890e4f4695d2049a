//! Radius-search loop-closure candidate detection over keyframe poses.

use super::voxel::Keyframe;

/// A prior keyframe close enough to the current pose, with the inclusive
/// sub-keyframe index window to scan-match against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopCandidate {
    pub candidate_index: usize,
    pub window: (usize, usize),
}

/// Prior keyframes whose pose lies within `radius` of the current pose and
/// whose index lags by at least `min_index_gap`. Each candidate carries the
/// window `[n-m, n+m]` clipped to indices present in the list. The output
/// is sorted by candidate index, so it does not depend on input ordering.
pub fn loop_closure_candidates(
    keyframes: &[Keyframe],
    current: &Keyframe,
    radius: f64,
    min_index_gap: usize,
    m: usize,
) -> Vec<LoopCandidate> {
    assert!(radius > 0.0, "radius must be positive");
    let max_index = keyframes.iter().map(|k| k.index).max().unwrap_or(0);
    let mut out: Vec<LoopCandidate> = keyframes
        .iter()
        .filter(|kf| {
            kf.index + min_index_gap <= current.index
                && kf.pose.translation_distance_to(&current.pose) <= radius
        })
        .map(|kf| LoopCandidate {
            candidate_index: kf.index,
            window: (kf.index.saturating_sub(m), (kf.index + m).min(max_index)),
        })
        .collect();
    out.sort_by_key(|c| c.candidate_index);
    out
}
