//! TOML configuration: run config, calibration and simulation scenarios.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::Deserialize;
use uuv_geoloc::camera::{CameraCalibration, CameraIntrinsics, DistortionCoeffs};
use uuv_geoloc::eval::GroundTruthFrame;
use uuv_geoloc::geodesy::{Ellipsoid, GeodeticCoord};
use uuv_geoloc::recovery::{GimbalFrame, PitchConvention, RigConfig};
use uuv_geoloc::synth::{AttitudeProfile, DepthProfile, NoiseSpec, ScenarioSpec, TrajectoryPattern};

use crate::CliError;

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Paths inside a config file are relative to that file.
fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn finite(name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be finite")))
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl CalibrationFile {
    pub fn to_calibration(&self) -> Result<CameraCalibration, CliError> {
        let intr = CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let dist = DistortionCoeffs::new(self.k1, self.k2, self.k3, self.p1, self.p2)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(CameraCalibration::new(intr, dist))
    }
}

pub fn load_calibration(path: &Path) -> Result<CameraCalibration, CliError> {
    read_toml::<CalibrationFile>(path)?.to_calibration()
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PitchSign {
    #[default]
    NadirNegative,
    NadirPositive,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FrameSel {
    #[default]
    World,
    Body,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigSection {
    /// Camera lever arm in the body frame, z up, meters.
    #[serde(default)]
    pub cam_offset: [f64; 3],
    #[serde(default)]
    pub gimbal_pitch_sign: PitchSign,
    #[serde(default)]
    pub gimbal_frame: FrameSel,
}

impl RigSection {
    pub fn to_rig(&self) -> Result<RigConfig, CliError> {
        finite("rig.cam_offset", &self.cam_offset)?;
        let pitch = match self.gimbal_pitch_sign {
            PitchSign::NadirNegative => PitchConvention::NadirNegative,
            PitchSign::NadirPositive => PitchConvention::NadirPositive,
        };
        let frame = match self.gimbal_frame {
            FrameSel::World => GimbalFrame::World,
            FrameSel::Body => GimbalFrame::Body,
        };
        RigConfig::new(Vector3::from(self.cam_offset), pitch, frame).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum EllipsoidSel {
    Named(String),
    Custom { equatorial_radius: f64, polar_radius: f64 },
}

impl Default for EllipsoidSel {
    fn default() -> Self {
        EllipsoidSel::Named("wgs84".into())
    }
}

impl EllipsoidSel {
    pub fn to_ellipsoid(&self) -> Result<Ellipsoid, CliError> {
        match self {
            EllipsoidSel::Named(n) if n.eq_ignore_ascii_case("wgs84") => Ok(Ellipsoid::WGS84),
            EllipsoidSel::Named(n) => Err(CliError::Config(format!("unknown ellipsoid {n:?}"))),
            EllipsoidSel::Custom {
                equatorial_radius,
                polar_radius,
            } => Ellipsoid::new(*equatorial_radius, *polar_radius).map_err(|e| CliError::Config(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthSection {
    pub yaw_deg: f64,
    #[serde(default)]
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Camera height above the surface grid, meters.
    pub camera_height: f64,
    /// Camera nadir in grid coordinates; defaults to the survey translation.
    pub nadir: Option<[f64; 2]>,
}

fn default_gap() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    calibration: Option<PathBuf>,
    #[serde(default)]
    rig: RigSection,
    #[serde(default)]
    altitude_datum_offset: f64,
    #[serde(default)]
    ellipsoid: EllipsoidSel,
    #[serde(default = "default_gap")]
    sync_max_gap: f64,
    ground_truth: Option<GroundTruthSection>,
    grid: Option<GridSection>,
    origin_track: Option<PathBuf>,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub calibration: Option<CameraCalibration>,
    pub rig: RigConfig,
    pub altitude_datum_offset: f64,
    pub ellipsoid: Ellipsoid,
    pub sync_max_gap: f64,
    pub ground_truth: Option<GroundTruthFrame>,
    pub grid: Option<GridSection>,
    pub origin_track: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            calibration: None,
            rig: RigConfig::default(),
            altitude_datum_offset: 0.0,
            ellipsoid: Ellipsoid::WGS84,
            sync_max_gap: default_gap(),
            ground_truth: None,
            grid: None,
            origin_track: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file: RunConfigFile = read_toml(path)?;
        finite("altitude_datum_offset", &[file.altitude_datum_offset])?;
        if !(file.sync_max_gap.is_finite() && file.sync_max_gap >= 0.0) {
            return Err(CliError::Config(format!("sync_max_gap {} must be >= 0", file.sync_max_gap)));
        }
        let calibration = file
            .calibration
            .as_ref()
            .map(|p| load_calibration(&resolve(path, p)))
            .transpose()?;
        let ground_truth = file
            .ground_truth
            .map(|g| {
                finite("ground_truth", &[g.yaw_deg, g.translation[0], g.translation[1], g.translation[2]])?;
                GroundTruthFrame::new(g.yaw_deg.to_radians(), Vector3::from(g.translation))
                    .map_err(|_| CliError::Config(format!("ground_truth.yaw_deg {} out of range", g.yaw_deg)))
            })
            .transpose()?;
        if let Some(g) = &file.grid {
            if !(g.camera_height.is_finite() && g.camera_height > 0.0) {
                return Err(CliError::Config(format!("grid.camera_height {} must be > 0", g.camera_height)));
            }
            finite("grid.nadir", &g.nadir.unwrap_or_default())?;
        }
        let origin_track = file.origin_track.map(|p| resolve(path, &p));
        if let Some(p) = &origin_track {
            if !p.is_file() {
                return Err(CliError::Config(format!("origin track {} not found", p.display())));
            }
        }
        Ok(Self {
            calibration,
            rig: file.rig.to_rig()?,
            altitude_datum_offset: file.altitude_datum_offset,
            ellipsoid: file.ellipsoid.to_ellipsoid()?,
            sync_max_gap: file.sync_max_gap,
            ground_truth,
            grid: file.grid,
            origin_track,
        })
    }

    pub fn require_calibration(&self) -> Result<&CameraCalibration, CliError> {
        self.calibration
            .as_ref()
            .ok_or_else(|| CliError::Config("calibration file is required".into()))
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternSection {
    Lawnmower { width: f64, height: f64, lanes: usize },
    Circle { radius: f64 },
    Line { start: [f64; 2], end: [f64; 2] },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DepthSection {
    Constant { value: f64 },
    Oscillating { min: f64, max: f64, cycles: f64 },
}

fn default_period() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeSection {
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
    /// Sway amplitudes for yaw, pitch, roll, degrees.
    #[serde(default)]
    pub sway_deg: [f64; 3],
    #[serde(default = "default_period")]
    pub period: f64,
}

impl AttitudeSection {
    fn to_profile(self) -> Result<AttitudeProfile, CliError> {
        let all = [self.yaw_deg, self.pitch_deg, self.roll_deg, self.period];
        finite("attitude", &all)?;
        finite("attitude.sway_deg", &self.sway_deg)?;
        if self.period <= 0.0 {
            return Err(CliError::Config("attitude period must be > 0".into()));
        }
        Ok(AttitudeProfile {
            base: [self.yaw_deg.to_radians(), self.pitch_deg.to_radians(), self.roll_deg.to_radians()],
            sway: self.sway_deg.map(f64::to_radians),
            period: self.period,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub sigma_px: f64,
    #[serde(default)]
    pub sigma_alt: f64,
    #[serde(default)]
    pub sigma_depth: f64,
    #[serde(default)]
    pub sigma_gimbal_deg: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    calibration: PathBuf,
    n_samples: usize,
    rate: f64,
    camera_height: f64,
    #[serde(default)]
    center: [f64; 2],
    reference: ReferenceSection,
    pattern: PatternSection,
    depth: DepthSection,
    gimbal: AttitudeSection,
    body: Option<AttitudeSection>,
    #[serde(default)]
    rig: RigSection,
    #[serde(default)]
    noise: NoiseSection,
}

/// Load a simulation scenario; `seed` overrides the file's noise seed.
pub fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioSpec, CliError> {
    let file: ScenarioFile = read_toml(path)?;
    let calibration = load_calibration(&resolve(path, &file.calibration))?;
    finite("scenario", &[file.rate, file.camera_height, file.center[0], file.center[1]])?;
    let pattern = match file.pattern {
        PatternSection::Lawnmower { width, height, lanes } => TrajectoryPattern::Lawnmower { width, height, lanes },
        PatternSection::Circle { radius } => TrajectoryPattern::Circle { radius },
        PatternSection::Line { start, end } => TrajectoryPattern::Line { start, end },
    };
    let depth = match file.depth {
        DepthSection::Constant { value } => DepthProfile::Constant(value),
        DepthSection::Oscillating { min, max, cycles } => DepthProfile::Oscillating { min, max, cycles },
    };
    let r = file.reference;
    let reference =
        GeodeticCoord::from_degrees(r.lat_deg, r.lon_deg, r.alt_m).map_err(|e| CliError::Config(e.to_string()))?;
    let n = file.noise;
    let noise = NoiseSpec {
        sigma_px: n.sigma_px,
        sigma_alt: n.sigma_alt,
        sigma_depth: n.sigma_depth,
        sigma_gimbal: n.sigma_gimbal_deg.to_radians(),
        seed: seed.unwrap_or(n.seed),
    };
    noise.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let body = match &file.body {
        Some(b) => b.to_profile()?,
        None => AttitudeProfile::fixed(0.0, 0.0, 0.0),
    };
    Ok(ScenarioSpec {
        pattern,
        center: file.center,
        n_samples: file.n_samples,
        rate: file.rate,
        camera_height: file.camera_height,
        depth,
        gimbal: file.gimbal.to_profile()?,
        body,
        calibration,
        rig: file.rig.to_rig()?,
        reference,
        noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    const CALIB: &str = "fx = 2000.0\nfy = 2000.0\ncx = 1920.0\ncy = 1080.0\nwidth = 3840\nheight = 2160\n\
                         k1 = 0.0\nk2 = 0.0\nk3 = 0.0\np1 = 0.0\np2 = 0.0\n";

    #[test]
    fn run_config_defaults() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "calib.toml", CALIB);
        let cfg = RunConfig::load(&write(dir.path(), "run.toml", "calibration = \"calib.toml\"\n")).unwrap();
        assert_eq!(cfg.sync_max_gap, 0.05);
        assert_eq!(cfg.rig, RigConfig::default());
        assert_eq!(cfg.ellipsoid, Ellipsoid::WGS84);
        assert!(cfg.ground_truth.is_none() && cfg.grid.is_none());
        assert_eq!(cfg.require_calibration().unwrap().intrinsics.fx, 2000.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "run.toml", "gimbal_pitch = 1\n");
        assert!(matches!(RunConfig::load(&p), Err(CliError::Config(_))));
        let p = write(dir.path(), "run2.toml", "[rig]\ncam_ofset = [0, 0, 0]\n");
        assert!(matches!(RunConfig::load(&p), Err(CliError::Config(_))));
        let p = write(dir.path(), "calib.toml", &format!("{CALIB}k4 = 0.1\n"));
        assert!(matches!(load_calibration(&p), Err(CliError::Config(_))));
    }

    #[test]
    fn missing_calibration_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "run.toml", "calibration = \"nope.toml\"\n");
        assert!(matches!(RunConfig::load(&p), Err(CliError::Config(_))));
    }

    #[test]
    fn conventions_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "run.toml",
            "[rig]\ncam_offset = [0.0, 0.0, -0.2]\ngimbal_pitch_sign = \"nadir_positive\"\ngimbal_frame = \"body\"\n\
             [ground_truth]\nyaw_deg = -67.3\ntranslation = [1.0, 2.0, 0.0]\n",
        );
        let cfg = RunConfig::load(&p).unwrap();
        assert_eq!(cfg.rig.pitch_convention, PitchConvention::NadirPositive);
        assert_eq!(cfg.rig.gimbal_frame, GimbalFrame::Body);
        assert_eq!(cfg.rig.cam_offset.z, -0.2);
        assert!((cfg.ground_truth.unwrap().yaw + 67.3_f64.to_radians()).abs() < 1e-15);
        let p = write(dir.path(), "bad.toml", "[rig]\ngimbal_frame = \"camera\"\n");
        assert!(RunConfig::load(&p).is_err());
    }

    #[test]
    fn custom_ellipsoid() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "run.toml", "ellipsoid = { equatorial_radius = 6378137.0, polar_radius = 6378137.0 }\n");
        assert_eq!(RunConfig::load(&p).unwrap().ellipsoid.polar_radius, 6378137.0);
        let p = write(dir.path(), "bad.toml", "ellipsoid = \"grs80\"\n");
        assert!(RunConfig::load(&p).is_err());
    }

    #[test]
    fn scenario_parses_and_seed_overrides() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "calib.toml", CALIB);
        let p = write(
            dir.path(),
            "scene.toml",
            "calibration = \"calib.toml\"\nn_samples = 10\nrate = 10.0\ncamera_height = 25.0\n\
             reference = { lat_deg = 42.0, lon_deg = 17.0, alt_m = 0.0 }\n\
             [pattern]\nkind = \"circle\"\nradius = 5.0\n\
             [depth]\nkind = \"oscillating\"\nmin = 0.21\nmax = 1.95\ncycles = 2.0\n\
             [gimbal]\npitch_deg = -90.0\n\
             [noise]\nsigma_px = 2.0\nsigma_gimbal_deg = 0.3\nseed = 3\n",
        );
        let spec = load_scenario(&p, Some(9)).unwrap();
        assert_eq!(spec.noise.seed, 9);
        assert!((spec.noise.sigma_gimbal - 0.3_f64.to_radians()).abs() < 1e-18);
        assert_eq!(load_scenario(&p, None).unwrap().noise.seed, 3);
        assert!(matches!(spec.depth, DepthProfile::Oscillating { .. }));
    }
}
