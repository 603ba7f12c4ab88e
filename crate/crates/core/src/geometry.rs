//! Geometric primitives shared by every calibration stage.
//!
//! World frame is right-handed, Y-up, metres. Device frames use the
//! OpenVR-style convention: local -Z is forward, +X is right, +Y is up.

use nalgebra::{Matrix3, SymmetricEigen, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Quat = UnitQuaternion<f64>;

/// World up axis.
pub const UP: Vec3 = Vector3::new(0.0, 1.0, 0.0);

/// Condition number above which the sphere-fit normal equations are
/// treated as rank deficient (near-coplanar samples).
pub const SPHERE_MAX_CONDITION: f64 = 1e8;

const PLANE_MIN_SPREAD: f64 = 1e-9;

/// Timestamped 6-DoF pose of a tracked device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
    /// Seconds.
    pub timestamp: f64,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Quat, timestamp: f64) -> Self {
        Self {
            position,
            orientation,
            timestamp,
        }
    }

    pub fn at(position: Vec3) -> Self {
        Self::new(position, Quat::identity(), 0.0)
    }

    pub fn forward(&self) -> Vec3 {
        self.orientation * Vec3::new(0.0, 0.0, -1.0)
    }

    pub fn right(&self) -> Vec3 {
        self.orientation * Vec3::new(1.0, 0.0, 0.0)
    }

    /// Maps a point from the device frame into the world.
    pub fn transform_point(&self, local: &Vec3) -> Vec3 {
        self.position + self.orientation * local
    }

    /// Maps a world point into the device frame.
    pub fn inverse_transform_point(&self, world: &Vec3) -> Vec3 {
        self.orientation.inverse() * (world - self.position)
    }
}

/// Plane `{x : normal · x = distance}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub distance: f64,
}

impl Plane {
    /// Builds a plane from any non-zero normal; the normal is normalized.
    pub fn new(normal: Vec3, distance: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::DegenerateInput("plane normal has zero length".into()));
        }
        Ok(Self {
            normal: normal / len,
            distance: distance / len,
        })
    }

    pub fn signed_distance(&self, x: &Vec3) -> f64 {
        self.normal.dot(x) - self.distance
    }

    pub fn flipped(&self) -> Self {
        Self {
            normal: -self.normal,
            distance: -self.distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFit {
    pub center: Vec3,
    pub radius: f64,
    pub rms_residual: f64,
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / points.len() as f64
}

fn covariance(points: &[Vec3], mean: &Vec3) -> Matrix3<f64> {
    let mut cov = Matrix3::zeros();
    for p in points {
        let y = p - mean;
        cov += y * y.transpose();
    }
    cov / points.len() as f64
}

/// Eigenpairs sorted by ascending eigenvalue.
fn sorted_eigen(m: Matrix3<f64>) -> ([f64; 3], [Vec3; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.map(|i| eig.eigenvalues[i]);
    let vectors = idx.map(|i| eig.eigenvectors.column(i).into_owned());
    (values, vectors)
}

/// Total-least-squares plane through `points`.
///
/// The normal is the eigenvector of the smallest eigenvalue of the centred
/// covariance. Its sign is arbitrary; callers orient it.
pub fn fit_plane(points: &[Vec3]) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "plane fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mean = centroid(points);
    let (values, vectors) = sorted_eigen(covariance(points, &mean));
    // second-largest spread along the plane; zero means collinear or coincident
    if values[1].max(0.0).sqrt() < PLANE_MIN_SPREAD {
        return Err(Error::DegenerateInput("points are collinear".into()));
    }
    let normal = vectors[0].normalize();
    Ok(Plane {
        normal,
        distance: normal.dot(&mean),
    })
}

pub fn project_to_plane(x: &Vec3, plane: &Plane) -> Vec3 {
    x - plane.normal * plane.signed_distance(x)
}

/// Algebraic least-squares centre of rotation.
///
/// Minimises `sum (|x_i - c|^2 - r^2)^2`, which reduces to the linear system
/// `2 C c' = b` with `C` the centred covariance, `b = mean(|y_i|^2 y_i)` and
/// `c = mean + c'`. The radius is the mean distance to the centre.
pub fn fit_sphere(points: &[Vec3]) -> Result<SphereFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateInput(format!(
            "sphere fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let mean = centroid(points);
    let cov = covariance(points, &mean);
    let mut rhs = Vec3::zeros();
    for p in points {
        let y = p - mean;
        rhs += y * y.norm_squared();
    }
    rhs /= points.len() as f64;

    let (values, vectors) = sorted_eigen(cov);
    let (lo, hi) = (values[0], values[2]);
    if !(lo > 0.0) || hi / lo > SPHERE_MAX_CONDITION {
        return Err(Error::DegenerateInput(format!(
            "sphere normal equations are ill-conditioned (eigenvalues {lo:.3e}..{hi:.3e})"
        )));
    }
    let mut offset = Vec3::zeros();
    for (value, vector) in values.iter().zip(vectors.iter()) {
        offset += vector * (vector.dot(&rhs) / value);
    }
    let center = mean + offset * 0.5;

    let distances: Vec<f64> = points.iter().map(|p| (p - center).norm()).collect();
    let radius = distances.iter().sum::<f64>() / distances.len() as f64;
    let rms_residual = (distances
        .iter()
        .map(|d| (d - radius).powi(2))
        .sum::<f64>()
        / distances.len() as f64)
        .sqrt();
    Ok(SphereFit {
        center,
        radius,
        rms_residual,
    })
}

/// In-plane (u, v) axes for tracker identification.
///
/// The plane normal is flipped to agree with `hmd_forward`, `v` is world up
/// and `u = v x n`.
pub fn plane_uv_frame(plane: &Plane, hmd_forward: &Vec3) -> Result<(Vec3, Vec3, Plane)> {
    let oriented = if hmd_forward.dot(&plane.normal) < 0.0 {
        plane.flipped()
    } else {
        *plane
    };
    let v = UP;
    let u = v.cross(&oriented.normal);
    let len = u.norm();
    if len < 1e-6 {
        return Err(Error::DegenerateInput(
            "plane normal is parallel to the up axis".into(),
        ));
    }
    Ok((u / len, v, oriented))
}

/// Unit quaternion from a yaw angle (radians) about world up.
pub fn yaw(angle: f64) -> Quat {
    Quat::from_axis_angle(&Vec3::y_axis(), angle)
}
