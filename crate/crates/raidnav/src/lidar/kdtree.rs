//! Minimal 3D kd-tree for nearest-neighbor queries over map points.
//!
//! The tree is immutable after construction, so lookups from parallel
//! correspondence searches need no synchronization.

use nalgebra::Vector3;

struct Node {
    /// Index into the points array.
    point: usize,
    axis: usize,
    left: Option<Box<Node>>,
    right: Option<Box<Node>>,
}

pub struct KdTree {
    points: Vec<Vector3<f64>>,
    root: Option<Box<Node>>,
}

impl KdTree {
    pub fn build(points: Vec<Vector3<f64>>) -> Self {
        let mut indices: Vec<usize> = (0..points.len()).collect();
        let root = Self::build_node(&points, &mut indices, 0);
        Self { points, root }
    }

    fn build_node(points: &[Vector3<f64>], indices: &mut [usize], depth: usize) -> Option<Box<Node>> {
        if indices.is_empty() {
            return None;
        }
        let axis = depth % 3;
        indices.sort_unstable_by(|&a, &b| {
            points[a][axis]
                .partial_cmp(&points[b][axis])
                .expect("finite coordinates")
        });
        let mid = indices.len() / 2;
        let point = indices[mid];
        let (left, rest) = indices.split_at_mut(mid);
        let right = &mut rest[1..];
        Some(Box::new(Node {
            point,
            axis,
            left: Self::build_node(points, left, depth + 1),
            right: Self::build_node(points, right, depth + 1),
        }))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &Vector3<f64> {
        &self.points[index]
    }

    /// Indices and squared distances of the `k` nearest stored points,
    /// closest first.
    pub fn k_nearest(&self, query: &Vector3<f64>, k: usize) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        // Best-first list kept sorted; k is tiny (2 or 3) in this crate.
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        self.search(self.root.as_deref(), query, k, &mut best);
        best
    }

    pub fn nearest(&self, query: &Vector3<f64>) -> Option<(usize, f64)> {
        self.k_nearest(query, 1).into_iter().next()
    }

    fn search(&self, node: Option<&Node>, query: &Vector3<f64>, k: usize, best: &mut Vec<(usize, f64)>) {
        let Some(node) = node else { return };
        let p = &self.points[node.point];
        let d2 = (p - query).norm_squared();
        let pos = best.partition_point(|&(_, bd)| bd <= d2);
        if pos < k {
            best.insert(pos, (node.point, d2));
            best.truncate(k);
        }

        let delta = query[node.axis] - p[node.axis];
        let (near, far) = if delta <= 0.0 {
            (node.left.as_deref(), node.right.as_deref())
        } else {
            (node.right.as_deref(), node.left.as_deref())
        };
        self.search(near, query, k, best);
        let worst = best.last().map(|&(_, d)| d).unwrap_or(f64::INFINITY);
        if best.len() < k || delta * delta < worst {
            self.search(far, query, k, best);
        }
    }
}
