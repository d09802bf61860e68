//! Position recovery from a single pixel observation.
//!
//! The pixel is turned into a viewing ray in the camera frame, and the
//! horizontal plane at the vehicle's depth (known from the aerial altitude
//! and the underwater depth sensor) fixes the point along that ray. Frames:
//!
//! - `{C}`: camera, Z along the optical axis, X right, Y down.
//! - `{G}`: ENU axes with the origin at the camera optical centre.
//! - `{D}`: ENU axes with the origin at the aerial vehicle's body (GPS) origin.

use nalgebra::Vector3;
use thiserror::Error;

use crate::camera::{CameraCalibration, CameraError, PixelCoord};
use crate::geodesy::{ecef_to_geodetic, enu_to_ecef, EcefCoord, Ellipsoid, GeodeticCoord};
use crate::geometry::{
    camera_from_mount, intersect_ray_plane, yaw_pitch_roll, GeometryError, GimbalAngles, Plane,
    Ray, RotationMatrix,
};

/// Rays closer than this to grazing the depth plane are rejected.
pub const MIN_CONDITIONING: f64 = 1e-3;

/// Largest accepted camera lever arm, meters.
pub const MAX_CAMERA_OFFSET: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoveryError {
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("invalid rig: {0}")]
    InvalidRig(String),
    #[error("degenerate geometry: camera {0} m above the depth plane")]
    DegenerateGeometry(f64),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("ray parallel to the depth plane")]
    ParallelRay,
    #[error("depth plane intersection behind the camera (d = {0})")]
    BehindCamera(f64),
    #[error("ray grazes the depth plane (|cos| = {0:e})")]
    IllConditioned(f64),
}

impl RecoveryError {
    /// Short machine-readable reason, used for per-sample flags.
    pub fn flag(&self) -> &'static str {
        match self {
            RecoveryError::InvalidObservation(_) | RecoveryError::InvalidRig(_) => "invalid",
            RecoveryError::DegenerateGeometry(_) => "degenerate",
            RecoveryError::Camera(CameraError::NonConvergence { .. }) => "non_convergence",
            RecoveryError::Camera(_) => "invalid",
            RecoveryError::ParallelRay => "parallel",
            RecoveryError::BehindCamera(_) => "behind_camera",
            RecoveryError::IllConditioned(_) => "ill_conditioned",
        }
    }
}

impl From<GeometryError> for RecoveryError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::ParallelRay(_) => RecoveryError::ParallelRay,
            GeometryError::BehindCamera(d) => RecoveryError::BehindCamera(d),
            other => RecoveryError::InvalidObservation(other.to_string()),
        }
    }
}

/// Sign of the gimbal pitch reported when the camera looks straight down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PitchConvention {
    /// Nadir is reported as -90 degrees.
    #[default]
    NadirNegative,
    /// Nadir is reported as +90 degrees; pitch is negated on use.
    NadirPositive,
}

/// Frame the gimbal angles are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GimbalFrame {
    /// Angles are relative to the local ENU frame.
    #[default]
    World,
    /// Angles are relative to the aerial vehicle body; body attitude is composed first.
    Body,
}

/// Camera mounting on the aerial vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigConfig {
    /// Camera position in the body frame, meters (z up, so a camera hanging
    /// below the body origin has a negative z).
    pub cam_offset: Vector3<f64>,
    pub pitch_convention: PitchConvention,
    pub gimbal_frame: GimbalFrame,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            cam_offset: Vector3::zeros(),
            pitch_convention: PitchConvention::default(),
            gimbal_frame: GimbalFrame::default(),
        }
    }
}

impl RigConfig {
    pub fn new(
        cam_offset: Vector3<f64>,
        pitch_convention: PitchConvention,
        gimbal_frame: GimbalFrame,
    ) -> Result<Self, RecoveryError> {
        let rig = Self {
            cam_offset,
            pitch_convention,
            gimbal_frame,
        };
        rig.validate()?;
        Ok(rig)
    }

    pub fn validate(&self) -> Result<(), RecoveryError> {
        let norm = self.cam_offset.norm();
        if !norm.is_finite() || norm >= MAX_CAMERA_OFFSET {
            return Err(RecoveryError::InvalidRig(format!(
                "camera offset |{:?}| must be below {MAX_CAMERA_OFFSET} m",
                self.cam_offset.as_slice()
            )));
        }
        Ok(())
    }

    /// Gimbal angles in the internal convention (nadir at -pi/2).
    pub fn normalize_gimbal(&self, g: &GimbalAngles) -> GimbalAngles {
        match self.pitch_convention {
            PitchConvention::NadirNegative => *g,
            PitchConvention::NadirPositive => GimbalAngles {
                pitch: -g.pitch,
                ..*g
            },
        }
    }

    /// `R^C_G`: camera-centred ENU to camera frame.
    pub fn camera_rotation(&self, gimbal: &GimbalAngles, body: &GimbalAngles) -> RotationMatrix {
        let mount = self.normalize_gimbal(gimbal).rotation();
        let mount = match self.gimbal_frame {
            GimbalFrame::World => mount,
            GimbalFrame::Body => body.rotation() * mount,
        };
        camera_from_mount(mount)
    }

    /// Camera lever arm expressed in the body-fixed ENU frame.
    pub fn offset_in_enu(&self, body: &GimbalAngles) -> Vector3<f64> {
        yaw_pitch_roll(body.yaw, body.pitch, body.roll) * self.cam_offset
    }
}

/// One synchronised measurement bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub px: PixelCoord,
    /// Altitude of the aerial vehicle's body origin above the water surface, meters.
    pub altitude: f64,
    /// Depth of the underwater vehicle below the surface, meters, positive down.
    pub depth: f64,
    pub gimbal: GimbalAngles,
    /// Body attitude (yaw, pitch, roll) of the aerial vehicle.
    pub body: GimbalAngles,
    /// GPS fix of the aerial vehicle, origin of `{D}`.
    pub reference: GeodeticCoord,
}

impl Observation {
    pub fn validate(&self) -> Result<(), RecoveryError> {
        if !self.t.is_finite() || !self.px.is_finite() {
            return Err(RecoveryError::InvalidObservation("non-finite time or pixel".into()));
        }
        if !(self.depth.is_finite() && self.depth >= 0.0) {
            return Err(RecoveryError::InvalidObservation(format!(
                "depth {} must be >= 0",
                self.depth
            )));
        }
        if !(self.altitude.is_finite() && self.altitude > 0.0) {
            return Err(RecoveryError::DegenerateGeometry(self.altitude));
        }
        Ok(())
    }
}

/// Horizontal plane at the vehicle's depth, in `{G}`.
///
/// `camera_height_offset` is the vertical (up) component of the camera
/// position relative to the altitude reference, so the camera sits
/// `altitude + camera_height_offset` above the water.
pub fn build_plane(altitude: f64, depth: f64, camera_height_offset: f64) -> Result<Plane, RecoveryError> {
    let camera_height = altitude + camera_height_offset;
    let drop = camera_height + depth;
    if !(drop.is_finite() && camera_height > 0.0 && drop > 0.0) {
        return Err(RecoveryError::DegenerateGeometry(camera_height));
    }
    Ok(Plane::new(Vector3::new(0.0, 0.0, -drop), Vector3::z())?)
}

/// Point recovered in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFix {
    pub point: Vector3<f64>,
    /// Ray parameter for the direction `(x', y', 1)`.
    pub d: f64,
    /// `|l_hat . n|` of the ray against the depth plane.
    pub conditioning: f64,
}

/// Intersect a camera-frame viewing direction with a camera-frame plane.
pub fn intersect_camera_ray(direction: Vector3<f64>, plane_c: &Plane) -> Result<CameraFix, RecoveryError> {
    let ray = Ray::new(Vector3::zeros(), direction)?;
    let hit = intersect_ray_plane(&ray, plane_c)?;
    if hit.conditioning < MIN_CONDITIONING {
        return Err(RecoveryError::IllConditioned(hit.conditioning));
    }
    Ok(CameraFix {
        point: hit.point,
        d: hit.d,
        conditioning: hit.conditioning,
    })
}

/// Recover the vehicle position in the camera frame.
pub fn recover_camera_frame(
    obs: &Observation,
    calib: &CameraCalibration,
    rig: &RigConfig,
) -> Result<CameraFix, RecoveryError> {
    obs.validate()?;
    let height_offset = rig.offset_in_enu(&obs.body).z;
    let plane_g = build_plane(obs.altitude, obs.depth, height_offset)?;
    let n = calib.pixel_to_ray(obs.px)?;
    let plane_c = plane_g.rotated(&rig.camera_rotation(&obs.gimbal, &obs.body));
    intersect_camera_ray(Vector3::new(n.x, n.y, 1.0), &plane_c)
}

/// Camera-frame point to the body-fixed ENU frame `{D}`.
pub fn camera_to_uav_enu(p_c: &Vector3<f64>, obs: &Observation, rig: &RigConfig) -> Vector3<f64> {
    let world_from_camera = rig.camera_rotation(&obs.gimbal, &obs.body).transpose();
    world_from_camera * p_c + rig.offset_in_enu(&obs.body)
}

/// Full per-sample output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredSample {
    pub t: f64,
    pub camera: Vector3<f64>,
    pub enu: Vector3<f64>,
    pub ecef: EcefCoord,
    pub geodetic: GeodeticCoord,
    pub conditioning: f64,
    /// The pixel lay outside the image bounds.
    pub out_of_frame: bool,
}

/// Camera frame, body ENU and geodetic position for one observation.
pub fn recover(
    obs: &Observation,
    calib: &CameraCalibration,
    rig: &RigConfig,
    ell: &Ellipsoid,
) -> Result<RecoveredSample, RecoveryError> {
    let fix = recover_camera_frame(obs, calib, rig)?;
    let enu = camera_to_uav_enu(&fix.point, obs, rig);
    let ecef = enu_to_ecef(&enu, &obs.reference, ell);
    Ok(RecoveredSample {
        t: obs.t,
        camera: fix.point,
        enu,
        ecef,
        geodetic: ecef_to_geodetic(&ecef, ell),
        conditioning: fix.conditioning,
        out_of_frame: !calib.intrinsics.contains(obs.px),
    })
}
