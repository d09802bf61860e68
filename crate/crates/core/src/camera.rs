//! Pinhole intrinsics and the radial-tangential (Brown-Conrady) lens model.
//!
//! Coordinates follow the usual computer-vision layout: `u` grows to the
//! right, `v` grows downward, and normalized coordinates are the perspective
//! division `(X/Z, Y/Z)` of a camera-frame point.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

/// Errors raised by the camera model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid distortion coefficients: {0}")]
    InvalidDistortion(String),
    /// The inverse distortion did not reach the residual tolerance.
    #[error("undistortion did not converge (residual {residual:e} after {iterations} iterations)")]
    NonConvergence { residual: f64, iterations: usize },
}

/// Focal lengths and principal point in pixels, plus the image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub image_width: u32,
    pub image_height: u32,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        image_width: u32,
        image_height: u32,
    ) -> Result<Self, CameraError> {
        if !(fx.is_finite() && fx > 0.0 && fy.is_finite() && fy > 0.0) {
            return Err(CameraError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite())
            || cx < 0.0
            || cy < 0.0
            || cx >= f64::from(image_width)
            || cy >= f64::from(image_height)
        {
            return Err(CameraError::InvalidIntrinsics(format!(
                "principal point ({cx}, {cy}) outside {image_width}x{image_height} image"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            image_width,
            image_height,
        })
    }

    /// Whether a pixel lies inside `[0, width) x [0, height)`.
    pub fn contains(&self, px: PixelCoord) -> bool {
        px.u >= 0.0
            && px.v >= 0.0
            && px.u < f64::from(self.image_width)
            && px.v < f64::from(self.image_height)
    }
}

/// Radial (`k1..k3`) and tangential (`p1`, `p2`) distortion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DistortionCoeffs {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl DistortionCoeffs {
    pub fn new(k1: f64, k2: f64, k3: f64, p1: f64, p2: f64) -> Result<Self, CameraError> {
        let d = Self { k1, k2, k3, p1, p2 };
        if [k1, k2, k3, p1, p2].iter().all(|c| c.is_finite()) {
            Ok(d)
        } else {
            Err(CameraError::InvalidDistortion(format!("{d:?}")))
        }
    }

    /// Identity distortion.
    pub const fn zero() -> Self {
        Self {
            k1: 0.0,
            k2: 0.0,
            k3: 0.0,
            p1: 0.0,
            p2: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.k3 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0
    }

    fn radial_factor(&self, r2: f64) -> f64 {
        1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
    }

    /// Largest undistorted radius below which the radial part of the model
    /// stays strictly increasing, i.e. `d/dr [r * (1 + k1 r^2 + k2 r^4 + k3 r^6)] > 0`.
    ///
    /// Beyond this radius the model folds back and distorted points have more
    /// than one preimage. Returns `f64::INFINITY` when no fold exists.
    pub fn monotonic_radius(&self) -> f64 {
        // derivative in s = r^2: 1 + 3 k1 s + 5 k2 s^2 + 7 k3 s^3
        let (a, b, c) = (3.0 * self.k1, 5.0 * self.k2, 7.0 * self.k3);
        let slope = |s: f64| 1.0 + s * (a + s * (b + s * c));
        // split [0, inf) at the stationary points of the slope; it is monotone between them
        let mut knots: Vec<f64> = if c != 0.0 {
            let disc = 4.0 * b * b - 12.0 * a * c;
            if disc >= 0.0 {
                let q = disc.sqrt();
                vec![(-2.0 * b - q) / (6.0 * c), (-2.0 * b + q) / (6.0 * c)]
            } else {
                Vec::new()
            }
        } else if b != 0.0 {
            vec![-a / (2.0 * b)]
        } else {
            Vec::new()
        };
        knots.retain(|k| k.is_finite() && *k > 0.0);
        knots.sort_by(f64::total_cmp);
        let mut lo = 0.0_f64;
        for hi in knots.into_iter().chain([f64::INFINITY]) {
            let mut hi = hi;
            if hi.is_infinite() {
                // grow until the slope turns or the radius is irrelevant
                hi = lo.max(1.0);
                while slope(hi) > 0.0 && hi < 1e12 {
                    hi *= 2.0;
                }
            }
            if slope(hi) <= 0.0 {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if slope(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return lo.sqrt();
            }
            lo = hi;
        }
        f64::INFINITY
    }

    /// Whether `n` lies in the region where [`undistort`] recovers it: the
    /// Jacobian of [`distort`] stays orientation-preserving on the segment
    /// from the origin to `n`.
    pub fn in_invertible_region(&self, n: NormalizedCoord) -> bool {
        if n.radius() >= self.monotonic_radius() {
            return false;
        }
        (1..=64).all(|i| {
            let t = i as f64 / 64.0;
            self.jacobian(NormalizedCoord::new(n.x * t, n.y * t)).determinant() > 0.0
        })
    }

    /// Jacobian of [`distort`] at `n`.
    fn jacobian(&self, n: NormalizedCoord) -> Matrix2<f64> {
        let (x, y) = (n.x, n.y);
        let r2 = x * x + y * y;
        let radial = self.radial_factor(r2);
        // d(radial)/d(r2)
        let dradial = self.k1 + r2 * (2.0 * self.k2 + 3.0 * self.k3 * r2);
        let dxdx = radial + 2.0 * x * x * dradial + 2.0 * self.p1 * y + 6.0 * self.p2 * x;
        let dxdy = 2.0 * x * y * dradial + 2.0 * self.p1 * x + 2.0 * self.p2 * y;
        let dydx = 2.0 * x * y * dradial + 2.0 * self.p1 * x + 2.0 * self.p2 * y;
        let dydy = radial + 2.0 * y * y * dradial + 6.0 * self.p1 * y + 2.0 * self.p2 * x;
        Matrix2::new(dxdx, dxdy, dydx, dydy)
    }
}

/// Image position in pixels. May lie outside the image bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Normalized image-plane coordinates, either before or after distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedCoord {
    pub x: f64,
    pub y: f64,
}

impl NormalizedCoord {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    fn as_vector(self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    fn from_vector(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }
}

/// Intrinsics together with the lens distortion they were calibrated with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraCalibration {
    pub intrinsics: CameraIntrinsics,
    pub distortion: DistortionCoeffs,
}

impl CameraCalibration {
    pub fn new(intrinsics: CameraIntrinsics, distortion: DistortionCoeffs) -> Self {
        Self {
            intrinsics,
            distortion,
        }
    }

    /// Pixel to undistorted normalized coordinates.
    pub fn pixel_to_ray(&self, px: PixelCoord) -> Result<NormalizedCoord, CameraError> {
        let distorted = pixel_to_normalized(px, &self.intrinsics)?;
        undistort(distorted, &self.distortion)
    }

    /// Undistorted normalized coordinates to pixel.
    pub fn ray_to_pixel(&self, n: NormalizedCoord) -> PixelCoord {
        normalized_to_pixel(distort(n, &self.distortion), &self.intrinsics)
    }
}

pub fn normalized_to_pixel(n: NormalizedCoord, intr: &CameraIntrinsics) -> PixelCoord {
    PixelCoord::new(intr.fx * n.x + intr.cx, intr.fy * n.y + intr.cy)
}

pub fn pixel_to_normalized(
    px: PixelCoord,
    intr: &CameraIntrinsics,
) -> Result<NormalizedCoord, CameraError> {
    if !px.is_finite() {
        return Err(CameraError::NonFinite(px.u, px.v));
    }
    Ok(NormalizedCoord::new(
        (px.u - intr.cx) / intr.fx,
        (px.v - intr.cy) / intr.fy,
    ))
}

/// Apply the Brown-Conrady model to undistorted normalized coordinates.
pub fn distort(n: NormalizedCoord, d: &DistortionCoeffs) -> NormalizedCoord {
    let (x, y) = (n.x, n.y);
    let r2 = x * x + y * y;
    let radial = d.radial_factor(r2);
    let xy2 = 2.0 * x * y;
    NormalizedCoord::new(
        x * radial + d.p1 * xy2 + d.p2 * (r2 + 2.0 * x * x),
        y * radial + d.p1 * (r2 + 2.0 * y * y) + d.p2 * xy2,
    )
}

/// Residual tolerance on `|distort(x) - x_d|`.
pub const UNDISTORT_TOLERANCE: f64 = 1e-10;
pub const UNDISTORT_MAX_ITERATIONS: usize = 50;

/// Invert [`distort`].
///
/// Starts from the distorted point and takes damped Newton steps on
/// `distort(x) - x_d` (step halving whenever the residual grows). Iterates
/// are kept inside [`DistortionCoeffs::monotonic_radius`] and where the
/// Jacobian determinant is positive, so the result is the preimage on the
/// invertible branch. Fails with
/// [`CameraError::NonConvergence`] when the residual is still above
/// [`UNDISTORT_TOLERANCE`] after [`UNDISTORT_MAX_ITERATIONS`].
pub fn undistort(n_d: NormalizedCoord, d: &DistortionCoeffs) -> Result<NormalizedCoord, CameraError> {
    if !n_d.is_finite() {
        return Err(CameraError::NonFinite(n_d.x, n_d.y));
    }
    if d.is_zero() {
        return Ok(n_d);
    }
    let target = n_d.as_vector();
    let residual_of = |x: Vector2<f64>| distort(NormalizedCoord::from_vector(x), d).as_vector() - target;

    let fold = d.monotonic_radius();
    let inside = |x: &Vector2<f64>| {
        x.norm() < fold && d.jacobian(NormalizedCoord::from_vector(*x)).determinant() > 0.0
    };
    let mut x = target;
    while !inside(&x) {
        x *= 0.5;
    }
    let mut residual = residual_of(x);
    let mut iterations = 0;
    while iterations < UNDISTORT_MAX_ITERATIONS {
        let err = residual.norm();
        if err == 0.0 {
            break;
        }
        let jac = d.jacobian(NormalizedCoord::from_vector(x));
        // singular Jacobian: fall back to a plain fixed-point step
        let step = jac.try_inverse().map_or(residual, |inv| inv * residual);
        let mut scale = 1.0;
        let mut candidate = x - step;
        let mut candidate_residual = residual_of(candidate);
        while (candidate_residual.norm() > err || !inside(&candidate)) && scale > 1e-4 {
            scale *= 0.5;
            candidate = x - step * scale;
            candidate_residual = residual_of(candidate);
        }
        if !inside(&candidate) {
            break;
        }
        iterations += 1;
        let moved = (candidate - x).norm();
        x = candidate;
        residual = candidate_residual;
        if residual.norm() <= UNDISTORT_TOLERANCE && moved <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    let err = residual.norm();
    if err.is_finite() && err <= UNDISTORT_TOLERANCE {
        Ok(NormalizedCoord::from_vector(x))
    } else {
        Err(CameraError::NonConvergence {
            residual: err,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(1000.0, 1000.0, 960.0, 540.0, 1920, 1080).unwrap()
    }

    #[test]
    fn principal_point_maps_to_origin() {
        let n = pixel_to_normalized(PixelCoord::new(960.0, 540.0), &intr()).unwrap();
        assert_eq!(n, NormalizedCoord::new(0.0, 0.0));
        assert_eq!(
            normalized_to_pixel(NormalizedCoord::new(0.0, 0.0), &intr()),
            PixelCoord::new(960.0, 540.0)
        );
    }

    #[test]
    fn linear_pixel_mapping() {
        assert_eq!(
            normalized_to_pixel(NormalizedCoord::new(1.0, 0.0), &intr()),
            PixelCoord::new(1960.0, 540.0)
        );
        let n = pixel_to_normalized(PixelCoord::new(1960.0, 1540.0), &intr()).unwrap();
        assert_eq!(n, NormalizedCoord::new(1.0, 1.0));
        let corner = pixel_to_normalized(PixelCoord::new(0.0, 0.0), &intr()).unwrap();
        assert_eq!(corner, NormalizedCoord::new(-0.96, -0.54));
    }

    #[test]
    fn rejects_non_finite_pixels() {
        assert!(matches!(
            pixel_to_normalized(PixelCoord::new(f64::NAN, 0.0), &intr()),
            Err(CameraError::NonFinite(..))
        ));
        assert!(undistort(NormalizedCoord::new(0.0, f64::INFINITY), &DistortionCoeffs::zero()).is_err());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 10.0, 1.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, -0.5, 1.0, 10, 10).is_err());
        assert!(DistortionCoeffs::new(f64::NAN, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn out_of_frame_pixels_are_representable() {
        let px = PixelCoord::new(-12.0, 2000.0);
        assert!(!intr().contains(px));
        let n = pixel_to_normalized(px, &intr()).unwrap();
        assert_abs_diff_eq!(n.x, -0.972, epsilon = 1e-15);
    }

    #[test]
    fn distortion_examples() {
        let d = DistortionCoeffs::new(0.1, 0.0, 0.0, 0.0, 0.0).unwrap();
        // 0.5 * (1 + 0.1 * 0.25)
        let out = distort(NormalizedCoord::new(0.5, 0.0), &d);
        assert_abs_diff_eq!(out.x, 0.5125, epsilon = 1e-15);
        assert_eq!(out.y, 0.0);

        let any = DistortionCoeffs::new(-0.3, 0.2, 0.1, 0.01, -0.01).unwrap();
        assert_eq!(distort(NormalizedCoord::new(0.0, 0.0), &any), NormalizedCoord::new(0.0, 0.0));
        assert_eq!(undistort(NormalizedCoord::new(0.0, 0.0), &any).unwrap(), NormalizedCoord::new(0.0, 0.0));

        let n = NormalizedCoord::new(0.37, -0.81);
        assert_eq!(distort(n, &DistortionCoeffs::zero()), n);
        assert_eq!(undistort(n, &DistortionCoeffs::zero()).unwrap(), n);
    }

    #[test]
    fn tangential_terms_match_hand_evaluation() {
        let d = DistortionCoeffs::new(0.0, 0.0, 0.0, 0.01, 0.02).unwrap();
        let (x, y) = (0.3_f64, -0.2_f64);
        let r2 = x * x + y * y;
        let out = distort(NormalizedCoord::new(x, y), &d);
        assert_abs_diff_eq!(out.x, x + 2.0 * 0.01 * x * y + 0.02 * (r2 + 2.0 * x * x), epsilon = 1e-16);
        assert_abs_diff_eq!(out.y, y + 0.01 * (r2 + 2.0 * y * y) + 2.0 * 0.02 * x * y, epsilon = 1e-16);
    }

    #[test]
    fn undistort_round_trip_example() {
        let d = DistortionCoeffs::new(-0.1, 0.05, 0.0, 0.001, -0.002).unwrap();
        let n = NormalizedCoord::new(0.3, -0.2);
        let back = undistort(distort(n, &d), &d).unwrap();
        assert_abs_diff_eq!(back.x, 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(back.y, -0.2, epsilon = 1e-9);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let d = DistortionCoeffs::new(-0.2, 0.07, -0.03, 0.004, -0.006).unwrap();
        let n = NormalizedCoord::new(0.41, -0.27);
        let jac = d.jacobian(n);
        let h = 1e-6;
        let fd = |dx: f64, dy: f64| {
            let p = distort(NormalizedCoord::new(n.x + dx, n.y + dy), &d);
            let m = distort(NormalizedCoord::new(n.x - dx, n.y - dy), &d);
            ((p.x - m.x) / (2.0 * h), (p.y - m.y) / (2.0 * h))
        };
        let (a, c) = fd(h, 0.0);
        let (b, e) = fd(0.0, h);
        assert_abs_diff_eq!(jac[(0, 0)], a, epsilon = 1e-8);
        assert_abs_diff_eq!(jac[(1, 0)], c, epsilon = 1e-8);
        assert_abs_diff_eq!(jac[(0, 1)], b, epsilon = 1e-8);
        assert_abs_diff_eq!(jac[(1, 1)], e, epsilon = 1e-8);
    }

    #[test]
    fn monotonic_radius_brackets_the_fold() {
        assert_eq!(DistortionCoeffs::zero().monotonic_radius(), f64::INFINITY);
        let d = DistortionCoeffs::new(-0.3, -0.3, -0.3, 0.0, 0.0).unwrap();
        let r = d.monotonic_radius();
        let radial = |r: f64| r * d.radial_factor(r * r);
        assert!(radial(r - 1e-4) < radial(r));
        assert!(radial(r + 1e-3) < radial(r));
        assert!(r > 0.6 && r < 0.75, "fold at {r}");
    }

    #[test]
    fn overflowing_input_reports_non_convergence() {
        let d = DistortionCoeffs::new(-0.5, 0.1, 0.0, 0.0, 0.0).unwrap();
        let err = undistort(NormalizedCoord::new(1e300, 0.0), &d).unwrap_err();
        assert!(matches!(err, CameraError::NonConvergence { .. }));
    }
}
