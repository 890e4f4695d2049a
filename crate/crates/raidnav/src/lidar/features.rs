//! Smoothness statistic and edge/planar feature extraction from an ordered
//! scan.

use super::LidarError;
use crate::geometry::{Frame, PointCloud};
use nalgebra::Vector3;

/// Tuning for the smoothness statistic and feature selection.
///
/// The neighborhood holds `neighborhood_half_width` consecutive points on
/// each side of the query index (the query point itself is excluded from
/// the sum).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SmoothnessParams {
    pub neighborhood_half_width: usize,
    pub edge_threshold: f64,
    pub planar_threshold: f64,
    pub max_features_per_class: usize,
}

impl Default for SmoothnessParams {
    fn default() -> Self {
        Self {
            neighborhood_half_width: 5,
            edge_threshold: 0.1,
            planar_threshold: 0.01,
            max_features_per_class: 64,
        }
    }
}

impl SmoothnessParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.neighborhood_half_width == 0 {
            return Err("neighborhood_half_width must be >= 1".into());
        }
        if !(self.planar_threshold >= 0.0 && self.edge_threshold > self.planar_threshold) {
            return Err("requires edge_threshold > planar_threshold >= 0".into());
        }
        if self.max_features_per_class == 0 {
            return Err("max_features_per_class must be >= 1".into());
        }
        Ok(())
    }
}

/// Edge and planar feature points extracted from one scan. The two sets are
/// disjoint by construction (selection thresholds cannot overlap).
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub edge_points: PointCloud,
    pub planar_points: PointCloud,
    pub frame_index: usize,
}

/// Local surface smoothness at index `k`: the norm of the summed
/// differences to the neighborhood, normalized by neighborhood size and
/// point range. Low values are flat surfaces, high values are edges.
pub fn smoothness(
    scan: &[Vector3<f64>],
    k: usize,
    params: &SmoothnessParams,
) -> Result<f64, LidarError> {
    let h = params.neighborhood_half_width;
    if k < h || k + h >= scan.len() {
        return Err(LidarError::IndexOutOfNeighborhood { k, len: scan.len() });
    }
    let p_k = scan[k];
    let range = p_k.norm();
    if range <= 0.0 {
        return Err(LidarError::DegeneratePoint(k));
    }
    let mut sum = Vector3::zeros();
    for u in (k - h)..=(k + h) {
        if u != k {
            sum += p_k - scan[u];
        }
    }
    let s_len = (2 * h) as f64;
    Ok(sum.norm() / (s_len * range))
}

/// Classify scan points by smoothness: values above `edge_threshold` become
/// edge features (largest first), values below `planar_threshold` become
/// planar features (smallest first), each class capped at
/// `max_features_per_class`.
pub fn extract_features(
    scan: &[Vector3<f64>],
    params: &SmoothnessParams,
) -> Result<FeatureSet, LidarError> {
    let need = 2 * params.neighborhood_half_width;
    if scan.len() <= need {
        return Err(LidarError::EmptyScan {
            len: scan.len(),
            need,
        });
    }

    let h = params.neighborhood_half_width;
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(scan.len() - need);
    for k in h..scan.len() - h {
        // Zero-range points cannot be scored; skip them rather than fail the scan.
        if let Ok(c) = smoothness(scan, k, params) {
            scored.push((k, c));
        }
    }

    let mut edges: Vec<(usize, f64)> = scored
        .iter()
        .copied()
        .filter(|&(_, c)| c > params.edge_threshold)
        .collect();
    edges.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    edges.truncate(params.max_features_per_class);

    let mut planar: Vec<(usize, f64)> = scored
        .iter()
        .copied()
        .filter(|&(_, c)| c < params.planar_threshold)
        .collect();
    planar.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    planar.truncate(params.max_features_per_class);

    let collect = |picked: &[(usize, f64)]| {
        let mut idx: Vec<usize> = picked.iter().map(|&(i, _)| i).collect();
        idx.sort_unstable();
        PointCloud::new(idx.into_iter().map(|i| scan[i]).collect(), Frame::Body)
            .expect("scan points validated by caller")
    };

    Ok(FeatureSet {
        edge_points: collect(&edges),
        planar_points: collect(&planar),
        frame_index: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn params(h: usize) -> SmoothnessParams {
        SmoothnessParams {
            neighborhood_half_width: h,
            ..Default::default()
        }
    }

    #[test]
    fn collinear_equally_spaced_is_smooth() {
        // symmetric differences cancel exactly
        let scan: Vec<Vector3<f64>> = (0..11)
            .map(|i| Vector3::new(1.0 + 0.1 * i as f64, 2.0, 0.0))
            .collect();
        let c = smoothness(&scan, 5, &params(2)).unwrap();
        assert!(c < 1e-15, "c = {c}");
    }

    #[test]
    fn identical_neighborhood_is_smooth() {
        let scan = vec![Vector3::new(1.0, 1.0, 0.0); 7];
        let c = smoothness(&scan, 3, &params(2)).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn bump_scan_hand_value() {
        // differences sum to 4*(0,1,0); |S| = 4; range = sqrt(2)
        let scan = vec![
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
        ];
        let c = smoothness(&scan, 2, &params(2)).unwrap();
        assert!((c - 1.0 / 2.0_f64.sqrt()).abs() < 1e-12, "c = {c}");
    }

    #[test]
    fn errors_on_bad_index_and_zero_range() {
        let scan = vec![Vector3::new(1.0, 0.0, 0.0); 9];
        assert!(matches!(
            smoothness(&scan, 0, &params(2)),
            Err(LidarError::IndexOutOfNeighborhood { .. })
        ));
        assert!(matches!(
            smoothness(&scan, 8, &params(2)),
            Err(LidarError::IndexOutOfNeighborhood { .. })
        ));
        let mut with_zero = scan.clone();
        with_zero[4] = Vector3::zeros();
        assert!(matches!(
            smoothness(&with_zero, 4, &params(2)),
            Err(LidarError::DegeneratePoint(4))
        ));
    }

    #[test]
    fn smoothness_is_rotation_invariant() {
        use crate::geometry::Transform3D;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let scan: Vec<Vector3<f64>> = (0..21)
            .map(|i| {
                let a = 0.05 * i as f64;
                Vector3::new(3.0 + a.sin(), a, 0.2 * a * a)
            })
            .collect();
        let p = params(4);
        let baseline: Vec<f64> = (4..17).map(|k| smoothness(&scan, k, &p).unwrap()).collect();
        for _ in 0..50 {
            let rot = Transform3D::from_parts(
                0.0,
                0.0,
                0.0,
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-1.4..1.4),
                rng.gen_range(-3.0..3.0),
            );
            let rotated: Vec<Vector3<f64>> = scan.iter().map(|q| rot.apply(q)).collect();
            for (j, k) in (4..17).enumerate() {
                let c = smoothness(&rotated, k, &p).unwrap();
                assert!((c - baseline[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn planar_scan_yields_no_edges() {
        let scan: Vec<Vector3<f64>> = (0..40)
            .map(|i| Vector3::new(5.0, -2.0 + 0.1 * i as f64, 0.0))
            .collect();
        let fs = extract_features(&scan, &params(3)).unwrap();
        assert_eq!(fs.edge_points.len(), 0);
        assert!(fs.planar_points.len() > 0);
    }

    #[test]
    fn corner_scan_puts_corner_in_edge_set() {
        // Wall along +y, then a sharp corner turning along +x.
        let mut scan: Vec<Vector3<f64>> = Vec::new();
        for i in 0..20 {
            scan.push(Vector3::new(4.0, -2.0 + 0.2 * i as f64, 0.0));
        }
        let corner = Vector3::new(4.0, 1.8 + 0.2, 0.0);
        scan.push(corner);
        for i in 1..20 {
            scan.push(Vector3::new(4.0 + 0.2 * i as f64, 2.0, 0.0));
        }
        let p = SmoothnessParams {
            edge_threshold: 0.04,
            ..params(3)
        };
        let fs = extract_features(&scan, &p).unwrap();
        // verify against the smoothness oracle: the corner scores above the
        // threshold and above every straight-wall interior point
        let corner_idx = 20;
        let c_corner = smoothness(&scan, corner_idx, &p).unwrap();
        assert!(c_corner > p.edge_threshold, "c_corner = {c_corner}");
        for k in [5usize, 10, 30, 35] {
            let c_wall = smoothness(&scan, k, &p).unwrap();
            assert!(c_wall < c_corner);
        }
        assert!(
            fs.edge_points.points().iter().any(|q| (q - corner).norm() < 1e-12),
            "corner missing from edge set"
        );
        // flat wall interior stays planar
        assert!(fs.planar_points.len() > 10);
    }

    #[test]
    fn short_scan_is_rejected() {
        let scan = vec![Vector3::new(1.0, 0.0, 0.0); 6];
        assert!(matches!(
            extract_features(&scan, &params(3)),
            Err(LidarError::EmptyScan { .. })
        ));
    }

    #[test]
    fn caps_features_per_class() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let scan: Vec<Vector3<f64>> = (0..500)
            .map(|i| {
                Vector3::new(
                    4.0 + rng.gen_range(-0.5..0.5),
                    0.05 * i as f64,
                    rng.gen_range(-0.5..0.5),
                )
            })
            .collect();
        let p = SmoothnessParams {
            max_features_per_class: 10,
            ..params(3)
        };
        let fs = extract_features(&scan, &p).unwrap();
        assert!(fs.edge_points.len() <= 10);
        assert!(fs.planar_points.len() <= 10);
    }
}
