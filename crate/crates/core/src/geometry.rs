//! Rotations, the gimbal-to-camera chain, and ray/plane intersection.
//!
//! Elementary rotations use the passive convention: `rot_z(a)` re-expresses
//! a fixed vector in a frame turned by `a` about Z, so the coordinates
//! rotate by `-a`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("ray is parallel to the plane (|l.n| = {0:e})")]
    ParallelRay(f64),
    #[error("intersection lies behind the ray origin (d = {0})")]
    BehindCamera(f64),
    #[error("degenerate ray direction")]
    ZeroDirection,
    #[error("plane normal must be a finite non-zero vector")]
    InvalidNormal,
    #[error("non-finite angle")]
    NonFiniteAngle,
}

/// A proper rotation, `R^T R = I` and `det R = +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Wraps a matrix, checking orthonormality and orientation to `tol`.
    pub fn try_from_matrix(m: Matrix3<f64>, tol: f64) -> Option<Self> {
        let r = Self(m);
        (r.orthonormality_error() <= tol && (m.determinant() - 1.0).abs() <= tol).then_some(r)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Max-abs entry of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).abs().max()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<Vector3<f64>> for RotationMatrix {
    type Output = Vector3<f64>;

    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

impl Mul<&Vector3<f64>> for RotationMatrix {
    type Output = Vector3<f64>;

    fn mul(self, rhs: &Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// `sin_cos` that is exact at whole quarter turns, so axis-aligned
/// attitudes (level, nadir) produce exact permutation matrices.
fn quarter_exact_sin_cos(a: f64) -> (f64, f64) {
    let quarters = a / FRAC_PI_2;
    if quarters.fract() == 0.0 && quarters * FRAC_PI_2 == a && quarters.abs() <= 8.0 {
        match (quarters as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        a.sin_cos()
    }
}

pub fn rot_x(roll: f64) -> RotationMatrix {
    let (s, c) = quarter_exact_sin_cos(roll);
    RotationMatrix(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c))
}

pub fn rot_y(pitch: f64) -> RotationMatrix {
    let (s, c) = quarter_exact_sin_cos(pitch);
    RotationMatrix(Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c))
}

pub fn rot_z(yaw: f64) -> RotationMatrix {
    let (s, c) = quarter_exact_sin_cos(yaw);
    RotationMatrix(Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0))
}

/// `R_z(yaw) R_y(pitch) R_x(roll)`.
pub fn yaw_pitch_roll(yaw: f64, pitch: f64, roll: f64) -> RotationMatrix {
    rot_z(yaw) * rot_y(pitch) * rot_x(roll)
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Yaw, pitch and roll of a stabilised camera mount, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimbalAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl GimbalAngles {
    /// Builds the triple, wrapping every angle into `(-pi, pi]`.
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Result<Self, GeometryError> {
        if !(yaw.is_finite() && pitch.is_finite() && roll.is_finite()) {
            return Err(GeometryError::NonFiniteAngle);
        }
        Ok(Self {
            yaw: wrap_angle(yaw),
            pitch: wrap_angle(pitch),
            roll: wrap_angle(roll),
        })
    }

    pub fn from_degrees(yaw: f64, pitch: f64, roll: f64) -> Result<Self, GeometryError> {
        Self::new(yaw.to_radians(), pitch.to_radians(), roll.to_radians())
    }

    /// Camera looking straight down with zero yaw and roll.
    pub fn nadir() -> Self {
        Self {
            yaw: 0.0,
            pitch: -PI / 2.0,
            roll: 0.0,
        }
    }

    /// Orientation of the intermediate X-forward frame in the parent frame.
    pub fn rotation(&self) -> RotationMatrix {
        yaw_pitch_roll(self.yaw, self.pitch, self.roll)
    }
}

/// Maps the X-forward intermediate frame onto the Z-forward camera frame:
/// `X' -> Z`, `Y' -> X`, `Z' -> Y`.
pub fn forward_axis_to_camera() -> RotationMatrix {
    RotationMatrix(Matrix3::new(
        0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0, //
        1.0, 0.0, 0.0,
    ))
}

/// Rotation taking camera-centred ENU coordinates into the camera frame
/// (Z along the optical axis, X right, Y down).
pub fn gimbal_to_camera_rotation(g: &GimbalAngles) -> RotationMatrix {
    camera_from_mount(g.rotation())
}

/// `R^C_G = R^C_{C'} (R^G_{C'})^T` for an arbitrary mount orientation `R^G_{C'}`.
pub fn camera_from_mount(mount_in_world: RotationMatrix) -> RotationMatrix {
    forward_axis_to_camera() * mount_in_world.transpose()
}

/// Parametric line `p = origin + direction * d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, direction: Vector3<f64>) -> Result<Self, GeometryError> {
        let norm = direction.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GeometryError::ZeroDirection);
        }
        Ok(Self { origin, direction })
    }

    pub fn at(&self, d: f64) -> Vector3<f64> {
        self.origin + self.direction * d
    }
}

/// Plane through `point` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl Plane {
    /// The normal is normalised on construction.
    pub fn new(point: Vector3<f64>, normal: Vector3<f64>) -> Result<Self, GeometryError> {
        let norm = normal.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GeometryError::InvalidNormal);
        }
        Ok(Self {
            point,
            normal: normal / norm,
        })
    }

    /// Signed distance of `p` from the plane along the normal.
    pub fn residual(&self, p: &Vector3<f64>) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    /// The same plane expressed in a rotated frame.
    pub fn rotated(&self, r: &RotationMatrix) -> Plane {
        Plane {
            point: r.apply(&self.point),
            normal: r.apply(&self.normal),
        }
    }
}

/// Threshold on `|l_hat . n|` below which a ray counts as parallel.
pub const PARALLEL_EPSILON: f64 = 1e-12;

/// Result of a successful ray/plane intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    pub point: Vector3<f64>,
    /// Line parameter, `point = origin + direction * d`.
    pub d: f64,
    /// `|l_hat . n|`, the cosine between ray and plane normal.
    pub conditioning: f64,
}

/// Intersect a ray with a plane.
///
/// `d = (p0 - l0).n / (l.n)`. Fails with [`GeometryError::ParallelRay`] when
/// `|l_hat . n| <= PARALLEL_EPSILON` and with [`GeometryError::BehindCamera`]
/// when `d <= 0`.
pub fn intersect_ray_plane(ray: &Ray, plane: &Plane) -> Result<Intersection, GeometryError> {
    let denom = ray.direction.dot(&plane.normal);
    let conditioning = denom.abs() / ray.direction.norm();
    if conditioning <= PARALLEL_EPSILON {
        return Err(GeometryError::ParallelRay(conditioning));
    }
    let d = (plane.point - ray.origin).dot(&plane.normal) / denom;
    if d <= 0.0 {
        return Err(GeometryError::BehindCamera(d));
    }
    Ok(Intersection {
        point: ray.at(d),
        d,
        conditioning,
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn unit_vector() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(z, phi): (f64, f64)| {
            let s = (1.0 - z * z).sqrt();
            Vector3::new(s * phi.cos(), s * phi.sin(), z)
        })
    }

    proptest! {
        #[test]
        fn elementary_inverse(a in -10.0..10.0f64) {
            for r in [rot_x(a) * rot_x(-a), rot_y(a) * rot_y(-a), rot_z(a) * rot_z(-a)] {
                prop_assert!((r.matrix() - Matrix3::identity()).abs().max() < 1e-14);
            }
        }

        #[test]
        fn gimbal_chain_in_so3(y in -PI..PI, p in -PI..PI, r in -PI..PI) {
            let rot = gimbal_to_camera_rotation(&GimbalAngles::new(y, p, r).unwrap());
            prop_assert!(rot.orthonormality_error() < 1e-12);
            prop_assert!((rot.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn intersection_lies_on_plane(
            origin in proptest::array::uniform3(-50.0..50.0f64),
            dir in unit_vector(), normal in unit_vector(),
            p0 in proptest::array::uniform3(-50.0..50.0f64),
        ) {
            let ray = Ray::new(Vector3::from(origin), dir).unwrap();
            let plane = Plane::new(Vector3::from(p0), normal).unwrap();
            prop_assume!(dir.dot(&normal).abs() > 1e-3);
            match intersect_ray_plane(&ray, &plane) {
                Ok(hit) => prop_assert!(plane.residual(&hit.point).abs() < 1e-9),
                Err(GeometryError::BehindCamera(d)) => prop_assert!(d <= 0.0),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }

        #[test]
        fn intersection_ignores_choice_of_plane_point(
            dir in unit_vector(), normal in unit_vector(),
            shift in proptest::array::uniform3(-100.0..100.0f64),
        ) {
            prop_assume!(dir.dot(&normal).abs() > 1e-3);
            let ray = Ray::new(Vector3::new(1.0, -2.0, 0.5), dir).unwrap();
            let base = Vector3::new(3.0, 4.0, -5.0);
            let s = Vector3::from(shift);
            let in_plane = s - normal * s.dot(&normal);
            let a = Plane::new(base, normal).unwrap();
            let b = Plane::new(base + in_plane, normal).unwrap();
            match (intersect_ray_plane(&ray, &a), intersect_ray_plane(&ray, &b)) {
                (Ok(x), Ok(y)) => prop_assert!((x.point - y.point).norm() < 1e-9),
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "{x:?} vs {y:?}"),
            }
        }
    }
}
