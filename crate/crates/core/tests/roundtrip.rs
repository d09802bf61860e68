//! Forward projection followed by recovery, with and without noise.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use uuv_geoloc::camera::{CameraCalibration, CameraIntrinsics, DistortionCoeffs, PixelCoord};
use uuv_geoloc::eval::trajectory_errors;
use uuv_geoloc::geodesy::{ecef_to_enu, Ellipsoid, GeodeticCoord};
use uuv_geoloc::geometry::GimbalAngles;
use uuv_geoloc::recovery::{
    camera_to_uav_enu, recover, recover_camera_frame, GimbalFrame, Observation, PitchConvention, RigConfig,
};
use uuv_geoloc::synth::{
    camera_frame_point, generate_logs, project_point, AttitudeProfile, DepthProfile, NoiseSpec, ScenarioSpec,
    TrajectoryPattern,
};

fn calibration(distortion: DistortionCoeffs) -> CameraCalibration {
    CameraCalibration::new(
        CameraIntrinsics::new(2000.0, 2000.0, 1920.0, 1080.0, 3840, 2160).unwrap(),
        distortion,
    )
}

fn reference() -> GeodeticCoord {
    GeodeticCoord::from_degrees(42.7819, 17.8636, 31.0).unwrap()
}

#[test]
fn random_scenes_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let calib = calibration(DistortionCoeffs::new(-0.08, 0.02, -0.004, 0.0007, -0.0004).unwrap());
    let mut checked = 0;
    while checked < 100 {
        let rig = RigConfig {
            cam_offset: Vector3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.4..0.0)),
            pitch_convention: if rng.random_bool(0.5) { PitchConvention::NadirNegative } else { PitchConvention::NadirPositive },
            gimbal_frame: if rng.random_bool(0.5) { GimbalFrame::World } else { GimbalFrame::Body },
        };
        let body = GimbalAngles::new(rng.random_range(-3.0..3.0), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)).unwrap();
        let pitch = -FRAC_PI_2 + rng.random_range(-0.4..0.4);
        let reported_pitch = match rig.pitch_convention {
            PitchConvention::NadirNegative => pitch,
            PitchConvention::NadirPositive => -pitch,
        };
        let gimbal = GimbalAngles::new(rng.random_range(-3.0..3.0), reported_pitch, rng.random_range(-0.3..0.3)).unwrap();
        let camera_height = rng.random_range(5.0..60.0);
        let depth = rng.random_range(0.0..3.0);
        let p_g = Vector3::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0), -(camera_height + depth));

        let Ok(px) = project_point(&p_g, &gimbal, &body, &calib, &rig) else { continue };
        let truth_c = camera_frame_point(&p_g, &gimbal, &body, &rig);
        let r = (truth_c.x / truth_c.z).hypot(truth_c.y / truth_c.z);
        if !calib.intrinsics.contains(px) || r >= calib.distortion.monotonic_radius() {
            continue;
        }
        let obs = Observation {
            t: checked as f64,
            px,
            altitude: camera_height - rig.offset_in_enu(&body).z,
            depth,
            gimbal,
            body,
            reference: reference(),
        };
        let fix = recover_camera_frame(&obs, &calib, &rig).unwrap();
        assert!((fix.point - truth_c).norm() < 1e-9, "camera frame error {}", (fix.point - truth_c).norm());

        let enu = camera_to_uav_enu(&fix.point, &obs, &rig);
        let truth_d = p_g + rig.offset_in_enu(&body);
        assert!((enu - truth_d).norm() < 1e-9);

        // reprojecting the recovered point lands on the same pixel
        let world_from_camera = rig.camera_rotation(&gimbal, &body).transpose();
        let again = project_point(&(world_from_camera * fix.point), &gimbal, &body, &calib, &rig).unwrap();
        assert!((again.u - px.u).abs() < 1e-9 && (again.v - px.v).abs() < 1e-9);

        // geodetic output agrees with the ENU offset
        let sample = recover(&obs, &calib, &rig, &Ellipsoid::WGS84).unwrap();
        let back = ecef_to_enu(&sample.ecef, &obs.reference, &Ellipsoid::WGS84);
        assert!((back - truth_d).norm() < 1e-6);
        checked += 1;
    }
}

#[test]
fn pixel_noise_matches_first_order_prediction() {
    let calib = calibration(DistortionCoeffs::zero());
    let rig = RigConfig::default();
    let level = GimbalAngles::new(0.0, 0.0, 0.0).unwrap();
    let (altitude, depth, sigma_px) = (25.0, 0.63, 2.0);
    let truth_g = Vector3::new(3.0, -2.0, -(altitude + depth));
    let px = project_point(&truth_g, &GimbalAngles::nadir(), &level, &calib, &rig).unwrap();
    let truth_c = camera_frame_point(&truth_g, &GimbalAngles::nadir(), &level, &rig);

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let noise = Normal::new(0.0, sigma_px).unwrap();
    let trials = 1000;
    let (mut sx, mut sy) = (0.0, 0.0);
    for _ in 0..trials {
        let obs = Observation {
            t: 0.0,
            px: PixelCoord::new(px.u + noise.sample(&mut rng), px.v + noise.sample(&mut rng)),
            altitude,
            depth,
            gimbal: GimbalAngles::nadir(),
            body: level,
            reference: reference(),
        };
        let err = recover_camera_frame(&obs, &calib, &rig).unwrap().point - truth_c;
        sx += err.x * err.x;
        sy += err.y * err.y;
    }
    // sigma_px / fx * range to the plane
    let predicted = sigma_px / 2000.0 * (altitude + depth);
    for rms in [(sx / trials as f64).sqrt(), (sy / trials as f64).sqrt()] {
        assert!((rms - predicted).abs() < 0.3 * predicted, "per-axis rms {rms} vs {predicted}");
    }
}

fn lawnmower_spec(n: usize, noise: NoiseSpec) -> ScenarioSpec {
    ScenarioSpec {
        pattern: TrajectoryPattern::Lawnmower { width: 20.0, height: 16.0, lanes: 6 },
        center: [0.0, 0.0],
        n_samples: n,
        rate: 10.0,
        camera_height: 25.0,
        depth: DepthProfile::Constant(0.63),
        gimbal: AttitudeProfile::fixed(0.0, -FRAC_PI_2, 0.0),
        body: AttitudeProfile::fixed(0.0, 0.0, 0.0),
        calibration: calibration(DistortionCoeffs::zero()),
        rig: RigConfig::default(),
        reference: reference(),
        noise,
    }
}

fn planar_mae(spec: &ScenarioSpec) -> f64 {
    let scenario = spec.build().unwrap();
    let (obs, truth) = generate_logs(&scenario).unwrap();
    let est: Vec<Vector2<f64>> = obs
        .iter()
        .map(|o| {
            let fix = recover_camera_frame(o, &scenario.calibration, &scenario.rig).unwrap();
            camera_to_uav_enu(&fix.point, o, &scenario.rig).xy()
        })
        .collect();
    let gt: Vec<Vector2<f64>> = truth.iter().map(|g| g.position.xy()).collect();
    trajectory_errors(&est, &gt).unwrap().mae
}

#[test]
fn noiseless_logs_give_zero_error() {
    let mae = planar_mae(&lawnmower_spec(300, NoiseSpec::noiseless(1)));
    assert!(mae < 1e-9, "{mae}");
}

#[test]
fn pixel_noise_mae_band() {
    let noise = NoiseSpec {
        sigma_px: 2.0,
        seed: 4,
        ..NoiseSpec::default()
    };
    let mae = planar_mae(&lawnmower_spec(1500, noise));
    assert!((0.015..=0.04).contains(&mae), "{mae}");
}
