//! Forward model: known underwater trajectories projected into the aerial
//! camera, with optional seeded Gaussian sensor noise.
//!
//! This is the exact inverse of [`crate::recovery`], so noiseless scenes
//! recover to machine precision and noisy ones give controlled error studies.

use std::f64::consts::{PI, TAU};

use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::camera::{CameraCalibration, NormalizedCoord, PixelCoord};
use crate::geodesy::GeodeticCoord;
use crate::geometry::GimbalAngles;
use crate::recovery::{Observation, RigConfig};

/// Camera-frame depth below which a point counts as behind the camera.
pub const MIN_FORWARD_DEPTH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("point behind the camera (camera-frame z = {0})")]
    BehindCamera(f64),
    #[error("infeasible scene at sample {index}: {reason}")]
    InfeasibleScene { index: usize, reason: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Per-channel noise standard deviations and the generator seed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    pub sigma_px: f64,
    /// Meters.
    pub sigma_alt: f64,
    /// Meters.
    pub sigma_depth: f64,
    /// Radians, applied independently to yaw, pitch and roll.
    pub sigma_gimbal: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let sigmas = [self.sigma_px, self.sigma_alt, self.sigma_depth, self.sigma_gimbal];
        if sigmas.iter().all(|s| s.is_finite() && *s >= 0.0) {
            Ok(())
        } else {
            Err(SynthError::InvalidScenario(format!("noise sigmas must be >= 0: {self:?}")))
        }
    }
}

/// True state at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    /// Vehicle position in camera-centred ENU `{G}`.
    pub position: Vector3<f64>,
    /// Altitude of the aerial body origin above the surface.
    pub altitude: f64,
    pub depth: f64,
    pub gimbal: GimbalAngles,
    pub body: GimbalAngles,
}

/// Ground-truth record: vehicle position in the body-fixed ENU frame `{D}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthSample {
    pub t: f64,
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub samples: Vec<TruthSample>,
    pub calibration: CameraCalibration,
    pub rig: RigConfig,
    pub reference: GeodeticCoord,
    pub noise: NoiseSpec,
}

/// Horizontal path shapes, centred on the camera nadir.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryPattern {
    /// Back-and-forth survey lanes along X, stepping along Y.
    Lawnmower { width: f64, height: f64, lanes: usize },
    Circle { radius: f64 },
    Line { start: [f64; 2], end: [f64; 2] },
}

impl TrajectoryPattern {
    /// Point at arc-length fraction `s` in `[0, 1]`.
    pub fn point_at(&self, s: f64) -> Vector2<f64> {
        match *self {
            TrajectoryPattern::Circle { radius } => {
                let a = TAU * s;
                Vector2::new(radius * a.cos(), radius * a.sin())
            }
            TrajectoryPattern::Line { start, end } => {
                let (a, b) = (Vector2::from(start), Vector2::from(end));
                a + (b - a) * s
            }
            TrajectoryPattern::Lawnmower { width, height, lanes } => {
                let waypoints = lawnmower_waypoints(width, height, lanes.max(1));
                along_polyline(&waypoints, s)
            }
        }
    }
}

fn lawnmower_waypoints(width: f64, height: f64, lanes: usize) -> Vec<Vector2<f64>> {
    let (x0, x1) = (-0.5 * width, 0.5 * width);
    let mut pts = Vec::with_capacity(2 * lanes);
    for lane in 0..lanes {
        let y = if lanes == 1 {
            0.0
        } else {
            -0.5 * height + height * lane as f64 / (lanes - 1) as f64
        };
        if lane % 2 == 0 {
            pts.extend([Vector2::new(x0, y), Vector2::new(x1, y)]);
        } else {
            pts.extend([Vector2::new(x1, y), Vector2::new(x0, y)]);
        }
    }
    pts
}

fn along_polyline(pts: &[Vector2<f64>], s: f64) -> Vector2<f64> {
    let lengths: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let total: f64 = lengths.iter().sum();
    if total == 0.0 {
        return pts[0];
    }
    let mut remaining = s.clamp(0.0, 1.0) * total;
    for (w, len) in pts.windows(2).zip(&lengths) {
        if remaining <= *len && *len > 0.0 {
            return w[0] + (w[1] - w[0]) * (remaining / len);
        }
        remaining -= len;
    }
    *pts.last().unwrap()
}

/// Depth of the underwater vehicle over the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DepthProfile {
    Constant(f64),
    /// Smooth oscillation between `min` and `max`, starting at `min`.
    Oscillating { min: f64, max: f64, cycles: f64 },
}

impl DepthProfile {
    pub fn at(&self, s: f64) -> f64 {
        match *self {
            DepthProfile::Constant(d) => d,
            DepthProfile::Oscillating { min, max, cycles } => {
                min + (max - min) * 0.5 * (1.0 - (TAU * cycles * s).cos())
            }
        }
    }
}

/// Attitude as a base orientation plus a sinusoidal sway, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeProfile {
    pub base: [f64; 3],
    pub sway: [f64; 3],
    /// Sway period, seconds.
    pub period: f64,
}

impl AttitudeProfile {
    pub fn fixed(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self {
            base: [yaw, pitch, roll],
            sway: [0.0; 3],
            period: 1.0,
        }
    }

    pub fn at(&self, t: f64) -> Result<GimbalAngles, SynthError> {
        let mut a = self.base;
        for (axis, angle) in a.iter_mut().enumerate() {
            if self.sway[axis] != 0.0 {
                // per-axis phase offsets keep the axes decorrelated
                let phase = TAU * t / self.period + axis as f64 * PI / 3.0;
                *angle += self.sway[axis] * phase.sin();
            }
        }
        GimbalAngles::new(a[0], a[1], a[2]).map_err(|e| SynthError::InvalidScenario(e.to_string()))
    }
}

/// Parameters for building a [`Scenario`] from canned shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub pattern: TrajectoryPattern,
    /// Horizontal offset of the pattern centre in `{G}`.
    pub center: [f64; 2],
    pub n_samples: usize,
    /// Sample rate, Hz.
    pub rate: f64,
    /// Height of the camera above the water, meters.
    pub camera_height: f64,
    pub depth: DepthProfile,
    pub gimbal: AttitudeProfile,
    pub body: AttitudeProfile,
    pub calibration: CameraCalibration,
    pub rig: RigConfig,
    pub reference: GeodeticCoord,
    pub noise: NoiseSpec,
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<Scenario, SynthError> {
        if self.n_samples == 0 {
            return Err(SynthError::InvalidScenario("n_samples must be positive".into()));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(SynthError::InvalidScenario(format!("rate {} must be positive", self.rate)));
        }
        if !(self.camera_height.is_finite() && self.camera_height > 0.0) {
            return Err(SynthError::InvalidScenario(format!(
                "camera height {} must be positive",
                self.camera_height
            )));
        }
        self.rig.validate().map_err(|e| SynthError::InvalidScenario(e.to_string()))?;
        let center = Vector2::from(self.center);
        let denom = (self.n_samples.max(2) - 1) as f64;
        let samples = (0..self.n_samples)
            .map(|i| {
                let s = i as f64 / denom;
                let t = i as f64 / self.rate;
                let depth = self.depth.at(s);
                if !(depth.is_finite() && depth >= 0.0) {
                    return Err(SynthError::InvalidScenario(format!("depth {depth} at sample {i}")));
                }
                let xy = center + self.pattern.point_at(s);
                let body = self.body.at(t)?;
                let altitude = self.camera_height - self.rig.offset_in_enu(&body).z;
                Ok(TruthSample {
                    t,
                    position: Vector3::new(xy.x, xy.y, -(self.camera_height + depth)),
                    altitude,
                    depth,
                    gimbal: self.gimbal.at(t)?,
                    body,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scenario {
            samples,
            calibration: self.calibration,
            rig: self.rig,
            reference: self.reference,
            noise: self.noise,
        })
    }
}

/// Camera-frame coordinates of a `{G}` point.
pub fn camera_frame_point(
    p_g: &Vector3<f64>,
    gimbal: &GimbalAngles,
    body: &GimbalAngles,
    rig: &RigConfig,
) -> Vector3<f64> {
    rig.camera_rotation(gimbal, body) * p_g
}

/// Project a point in camera-centred ENU into the image.
pub fn project_point(
    p_g: &Vector3<f64>,
    gimbal: &GimbalAngles,
    body: &GimbalAngles,
    calib: &CameraCalibration,
    rig: &RigConfig,
) -> Result<PixelCoord, SynthError> {
    let p_c = camera_frame_point(p_g, gimbal, body, rig);
    if p_c.z <= MIN_FORWARD_DEPTH {
        return Err(SynthError::BehindCamera(p_c.z));
    }
    Ok(calib.ray_to_pixel(NormalizedCoord::new(p_c.x / p_c.z, p_c.y / p_c.z)))
}

/// Noisy observations plus the exact ground truth in `{D}`.
pub fn generate_logs(s: &Scenario) -> Result<(Vec<Observation>, Vec<GroundTruthSample>), SynthError> {
    s.noise.validate()?;
    if s.samples.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(SynthError::InvalidScenario("timestamps must be strictly increasing".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.noise.seed);
    let mut draw = |sigma: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * z
    };
    let perturb = |value: f64, delta: f64, sigma: f64| if sigma > 0.0 { value + delta } else { value };

    let mut observations = Vec::with_capacity(s.samples.len());
    let mut truth = Vec::with_capacity(s.samples.len());
    for (index, sample) in s.samples.iter().enumerate() {
        let px = project_point(&sample.position, &sample.gimbal, &sample.body, &s.calibration, &s.rig)
            .map_err(|e| SynthError::InfeasibleScene {
                index,
                reason: e.to_string(),
            })?;
        if !s.calibration.intrinsics.contains(px) {
            return Err(SynthError::InfeasibleScene {
                index,
                reason: format!("projects outside the image at ({}, {})", px.u, px.v),
            });
        }
        let n = &s.noise;
        // fixed draw order keeps streams aligned whatever sigmas are zero
        let deltas = [
            draw(n.sigma_px),
            draw(n.sigma_px),
            draw(n.sigma_alt),
            draw(n.sigma_depth),
            draw(n.sigma_gimbal),
            draw(n.sigma_gimbal),
            draw(n.sigma_gimbal),
        ];
        let gimbal = GimbalAngles::new(
            perturb(sample.gimbal.yaw, deltas[4], n.sigma_gimbal),
            perturb(sample.gimbal.pitch, deltas[5], n.sigma_gimbal),
            perturb(sample.gimbal.roll, deltas[6], n.sigma_gimbal),
        )
        .map_err(|e| SynthError::InvalidScenario(e.to_string()))?;
        observations.push(Observation {
            t: sample.t,
            px: PixelCoord::new(
                perturb(px.u, deltas[0], n.sigma_px),
                perturb(px.v, deltas[1], n.sigma_px),
            ),
            altitude: perturb(sample.altitude, deltas[2], n.sigma_alt),
            depth: perturb(sample.depth, deltas[3], n.sigma_depth),
            gimbal,
            body: sample.body,
            reference: s.reference,
        });
        truth.push(GroundTruthSample {
            t: sample.t,
            position: sample.position + s.rig.offset_in_enu(&sample.body),
        });
    }
    Ok((observations, truth))
}
