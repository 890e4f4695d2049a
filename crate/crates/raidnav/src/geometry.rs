//! Shared geometric types: planar poses, rigid 3D transforms, point clouds.
//!
//! Rotations are stored as 3x3 matrices; yaw-pitch-roll angles are accepted
//! at construction. All values are immutable once built, so they can be
//! shared between threads freely.

use nalgebra::{Matrix3, Rotation3, Vector3};
use std::fmt::Write as _;
use std::path::Path;

/// Orthonormality / determinant tolerance for rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("rotation matrix is not orthonormal with det +1 (defect {0:.3e})")]
    InvalidRotation(f64),
    #[error("point cloud contains a non-finite coordinate at index {0}")]
    InvalidPoint(usize),
    #[error("cloud CSV: {0}")]
    CloudCsv(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Wrap an angle to the interval (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = theta.rem_euclid(two_pi);
    if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

/// Planar pose (x, y, heading). `theta` is kept in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Euclidean distance to a point.
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        ((self.x - x).powi(2) + (self.y - y).powi(2)).sqrt()
    }
}

/// Rigid transform in 3D: `p_out = rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform3D {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Transform3D {
    /// Build from an explicit rotation matrix, validating orthonormality and
    /// a +1 determinant within [`ROTATION_TOL`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let defect = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        let det_defect = (rotation.determinant() - 1.0).abs();
        if defect > ROTATION_TOL || det_defect > ROTATION_TOL {
            return Err(GeometryError::InvalidRotation(defect.max(det_defect)));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Construct from translation and yaw-pitch-roll angles
    /// (rotation applied as Rz(yaw) * Ry(pitch) * Rx(roll)).
    pub fn from_parts(tx: f64, ty: f64, tz: f64, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            rotation: *Rotation3::from_euler_angles(roll, pitch, yaw).matrix(),
            translation: Vector3::new(tx, ty, tz),
        }
    }

    pub fn from_translation(tx: f64, ty: f64, tz: f64) -> Self {
        Self::from_parts(tx, ty, tz, 0.0, 0.0, 0.0)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Recover (tx, ty, tz, roll, pitch, yaw).
    pub fn to_parts(&self) -> (f64, f64, f64, f64, f64, f64) {
        let (roll, pitch, yaw) = Rotation3::from_matrix_unchecked(self.rotation).euler_angles();
        let t = self.translation;
        (t.x, t.y, t.z, roll, pitch, yaw)
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Rigid inverse: the rotation block inverts by transpose.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle (radians) of the relative rotation to `other`.
    pub fn rotation_angle_to(&self, other: &Transform3D) -> f64 {
        let r = self.rotation.transpose() * other.rotation;
        let c = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }

    /// Translation distance to `other`.
    pub fn translation_distance_to(&self, other: &Transform3D) -> f64 {
        (self.translation - other.translation).norm()
    }
}

/// Sequential application: the result applies `a` first, then `b`,
/// i.e. `compose(a, b).apply(p) == b.apply(&a.apply(p))`.
pub fn compose(a: &Transform3D, b: &Transform3D) -> Transform3D {
    Transform3D {
        rotation: b.rotation * a.rotation,
        translation: b.rotation * a.translation + b.translation,
    }
}

/// Relative motion between consecutive poses: `t_i^-1 * t_ip1`.
pub fn relative_transform(t_i: &Transform3D, t_ip1: &Transform3D) -> Transform3D {
    let inv = t_i.inverse();
    Transform3D {
        rotation: inv.rotation * t_ip1.rotation,
        translation: inv.rotation * t_ip1.translation + inv.translation,
    }
}

/// Coordinate frame a cloud is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Frame {
    /// Sensor/body-fixed frame of the scan.
    Body,
    /// Fixed world frame.
    World,
}

/// A set of 3D points with a frame tag. Construction rejects NaN/Inf.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    frame: Frame,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>, frame: Frame) -> Result<Self, GeometryError> {
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(GeometryError::InvalidPoint(i));
            }
        }
        Ok(Self { points, frame })
    }

    pub fn empty(frame: Frame) -> Self {
        Self {
            points: Vec::new(),
            frame,
        }
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Apply a rigid transform to every point. The output is tagged as a world
/// frame cloud, which is the only direction the pipeline transforms in.
pub fn transform_cloud(t: &Transform3D, c: &PointCloud) -> PointCloud {
    PointCloud {
        points: c.points.iter().map(|p| t.apply(p)).collect(),
        frame: Frame::World,
    }
}

/// Serialize a cloud as `x,y,z` rows under an `x,y,z` header.
pub fn cloud_to_csv(c: &PointCloud) -> String {
    let mut out = String::with_capacity(16 * c.len() + 8);
    out.push_str("x,y,z\n");
    for p in &c.points {
        let _ = writeln!(out, "{:.9},{:.9},{:.9}", p.x, p.y, p.z);
    }
    out
}

pub fn cloud_from_csv(text: &str, frame: Frame) -> Result<PointCloud, GeometryError> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.starts_with(|c: char| c.is_alphabetic()) {
            continue; // header
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(GeometryError::CloudCsv(format!(
                "line {}: expected 3 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mut xyz = [0.0; 3];
        for (slot, field) in xyz.iter_mut().zip(&fields) {
            *slot = field.trim().parse::<f64>().map_err(|e| {
                GeometryError::CloudCsv(format!("line {}: {e}", lineno + 1))
            })?;
        }
        points.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
    }
    PointCloud::new(points, frame)
}

pub fn write_cloud_csv(path: &Path, c: &PointCloud) -> Result<(), GeometryError> {
    Ok(std::fs::write(path, cloud_to_csv(c))?)
}

pub fn read_cloud_csv(path: &Path, frame: Frame) -> Result<PointCloud, GeometryError> {
    cloud_from_csv(&std::fs::read_to_string(path)?, frame)
}
