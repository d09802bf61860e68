//! Geo-localisation of an underwater vehicle seen from an aerial camera.
//!
//! A vehicle tracked in aerial imagery is located in 3D by intersecting the
//! pixel's viewing ray with the horizontal plane at the vehicle's depth. The
//! plane comes from fusing the aerial vehicle's altitude above the water with
//! the underwater vehicle's pressure depth. Recovered positions are then
//! expressed in the aerial vehicle's local ENU frame and geo-referenced.
//!
//! Modules:
//! - [camera]: pinhole intrinsics and Brown-Conrady distortion with its inverse.
//! - [geometry]: passive elementary rotations, the gimbal chain, ray/plane intersection.
//! - [recovery]: depth plane construction and per-observation recovery.
//! - [geodesy]: ENU, ECEF and geodetic conversions (Heikkinen closed form).
//! - [eval]: survey-frame transform, grid rescaling, MAE/RMSE.
//! - [synth]: forward projection of known trajectories, with seeded noise.

pub mod camera;
pub mod eval;
pub mod geodesy;
pub mod geometry;
pub mod recovery;
pub mod synth;

pub use camera::{CameraCalibration, CameraIntrinsics, DistortionCoeffs, NormalizedCoord, PixelCoord};
pub use geodesy::{EcefCoord, Ellipsoid, GeodeticCoord};
pub use geometry::{GimbalAngles, Plane, Ray, RotationMatrix};
pub use recovery::{Observation, RecoveredSample, RecoveryError, RigConfig};
