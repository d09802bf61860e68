//! The `recover`, `evaluate` and `simulate` subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector2;
use serde::Serialize;
use uuv_geoloc::camera::PixelCoord;
use uuv_geoloc::eval::{
    enu_to_ground_truth, match_nearest, rescale_grid_point, trajectory_errors_3d, TrajectoryErrorReport,
};
use uuv_geoloc::recovery::{recover, Observation, RecoveredSample};
use uuv_geoloc::synth::{generate_logs, SynthError};

use crate::config::{load_scenario, RunConfig};
use crate::formats::{self, Excluded, Row, TrajectoryPoint};
use crate::CliError;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `trajectory.csv` -> `trajectory.excluded.csv`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("excluded.csv")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecoverOutcome {
    pub samples: Vec<RecoveredSample>,
    pub excluded: Vec<Excluded>,
}

/// Shift each pixel by the origin track's drift since its first sample.
fn apply_origin_track(
    rows: &mut [Row<Observation>],
    track: &[(f64, PixelCoord)],
    max_gap: f64,
) -> Vec<Excluded> {
    let Some(&(_, first)) = track.first() else {
        return rows
            .iter()
            .map(|r| Excluded {
                line: r.line,
                t: r.value.t,
                reason: "no_origin".into(),
                detail: "origin track is empty".into(),
            })
            .collect();
    };
    let times: Vec<f64> = rows.iter().map(|r| r.value.t).collect();
    let track_times: Vec<f64> = track.iter().map(|(t, _)| *t).collect();
    let mut missing = Vec::new();
    for (row, m) in rows.iter_mut().zip(match_nearest(&times, &track_times, max_gap)) {
        match m {
            Some(i) => {
                let origin = track[i].1;
                row.value.px = PixelCoord::new(row.value.px.u - origin.u + first.u, row.value.px.v - origin.v + first.v);
            }
            None => missing.push(Excluded {
                line: row.line,
                t: row.value.t,
                reason: "no_origin".into(),
                detail: format!("no origin-track sample within {max_gap} s"),
            }),
        }
    }
    missing
}

/// Recover every row; geometric failures are collected, not fatal.
pub fn recover_rows(
    mut rows: Vec<Row<Observation>>,
    cfg: &RunConfig,
    track: Option<&[(f64, PixelCoord)]>,
) -> Result<RecoverOutcome, CliError> {
    if rows.is_empty() {
        return Err(CliError::Input("empty trajectory: no observation rows".into()));
    }
    let calib = cfg.require_calibration()?;
    let mut out = RecoverOutcome::default();
    if let Some(track) = track {
        out.excluded = apply_origin_track(&mut rows, track, cfg.sync_max_gap);
    }
    let skip: Vec<u64> = out.excluded.iter().map(|e| e.line).collect();
    for row in rows.iter().filter(|r| !skip.contains(&r.line)) {
        let mut obs = row.value;
        obs.altitude += cfg.altitude_datum_offset;
        match recover(&obs, calib, &cfg.rig, &cfg.ellipsoid) {
            Ok(s) => out.samples.push(s),
            Err(e) => out.excluded.push(Excluded {
                line: row.line,
                t: obs.t,
                reason: e.flag().into(),
                detail: e.to_string(),
            }),
        }
    }
    out.excluded.sort_by_key(|e| e.line);
    Ok(out)
}

pub fn cmd_recover(config: &Path, input: &Path, output: &Path) -> Result<RecoverOutcome, CliError> {
    let cfg = RunConfig::load(config)?;
    cfg.require_calibration()?;
    let rows = formats::read_observations(open(input)?)?;
    let track = cfg
        .origin_track
        .as_ref()
        .map(|p| formats::read_track(open(p)?))
        .transpose()?;
    let outcome = recover_rows(rows, &cfg, track.as_deref())?;
    formats::write_trajectory(create(output)?, &outcome.samples)?;
    formats::write_excluded(create(&sidecar_path(output))?, &outcome.excluded)?;
    Ok(outcome)
}

/// Serialized evaluation report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportJson {
    pub mae: f64,
    pub rmse: f64,
    pub n_samples: usize,
    pub n_excluded: usize,
    pub z_mae: Option<f64>,
}

impl From<TrajectoryErrorReport> for ReportJson {
    fn from(r: TrajectoryErrorReport) -> Self {
        Self {
            mae: r.mae,
            rmse: r.rmse,
            n_samples: r.n_samples,
            n_excluded: r.n_excluded,
            z_mae: r.z_mae,
        }
    }
}

/// Time-sync the trajectory to ground truth and compute the error report.
///
/// Every trajectory row needs a ground-truth partner; ground-truth rows
/// left unmatched are counted as excluded.
pub fn evaluate_rows(
    traj: &[Row<TrajectoryPoint>],
    gt: &[Row<uuv_geoloc::synth::GroundTruthSample>],
    cfg: &RunConfig,
) -> Result<TrajectoryErrorReport, CliError> {
    if traj.is_empty() || gt.is_empty() {
        return Err(CliError::Input(format!(
            "empty trajectory: {} estimated, {} ground-truth rows",
            traj.len(),
            gt.len()
        )));
    }
    let t_est: Vec<f64> = traj.iter().map(|r| r.value.t).collect();
    let t_gt: Vec<f64> = gt.iter().map(|r| r.value.t).collect();
    let pairs = match_nearest(&t_est, &t_gt, cfg.sync_max_gap);
    let matched = pairs.iter().flatten().count();
    if matched < traj.len() {
        let first = traj.iter().zip(&pairs).find(|(_, m)| m.is_none()).map_or(0, |(r, _)| r.line);
        return Err(CliError::Input(format!(
            "length mismatch after time sync: {} of {} estimated rows matched {} ground-truth rows \
             (first unmatched at line {first})",
            matched,
            traj.len(),
            gt.len()
        )));
    }
    let nadir = cfg.grid.map(|g| {
        g.nadir
            .map(Vector2::from)
            .unwrap_or_else(|| cfg.ground_truth.map_or(Vector2::zeros(), |f| f.translation.xy()))
    });
    let mut est = Vec::with_capacity(traj.len());
    let mut reference = Vec::with_capacity(traj.len());
    for (row, m) in traj.iter().zip(&pairs) {
        let g = &gt[m.expect("all rows matched")];
        let p = match &cfg.ground_truth {
            Some(frame) => enu_to_ground_truth(&row.value.enu, frame),
            None => row.value.enu,
        };
        let mut q = g.value.position;
        if let (Some(grid), Some(nadir)) = (cfg.grid, nadir) {
            // grid readings carry z = -depth
            if q.z > 0.0 {
                return Err(CliError::Input(format!("line {}: grid z {} must be <= 0", g.line, q.z)));
            }
            let xy = rescale_grid_point(q.xy(), nadir, grid.camera_height, -q.z).map_err(|e| {
                CliError::Input(format!("line {}: {e}", g.line))
            })?;
            q.x = xy.x;
            q.y = xy.y;
        }
        est.push(p);
        reference.push(q);
    }
    let mut report = trajectory_errors_3d(&est, &reference).map_err(|e| CliError::Input(e.to_string()))?;
    report.n_excluded = gt.len() - matched;
    Ok(report)
}

pub fn cmd_evaluate(
    config: Option<&Path>,
    trajectory: &Path,
    ground_truth: &Path,
    output: Option<&Path>,
) -> Result<TrajectoryErrorReport, CliError> {
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let traj = formats::read_trajectory(open(trajectory)?)?;
    let gt = formats::read_ground_truth(open(ground_truth)?)?;
    let report = evaluate_rows(&traj, &gt, &cfg)?;
    let json = serde_json::to_string_pretty(&ReportJson::from(report)).expect("report serializes");
    match output {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{json}").map_err(|e| CliError::Input(e.to_string()))?;
            w.flush().map_err(|e| CliError::Input(e.to_string()))?;
        }
        None => println!("{json}"),
    }
    Ok(report)
}

/// Write observation and ground-truth logs; returns the sample count.
pub fn cmd_simulate(scenario: &Path, output: &Path, gt: &Path, seed: Option<u64>) -> Result<usize, CliError> {
    let spec = load_scenario(scenario, seed)?;
    let scene = spec.build().map_err(|e| CliError::Config(e.to_string()))?;
    let (obs, truth) = generate_logs(&scene).map_err(|e| match e {
        SynthError::InfeasibleScene { .. } | SynthError::InvalidScenario(_) | SynthError::BehindCamera(_) => {
            CliError::Config(e.to_string())
        }
    })?;
    formats::write_observations(create(output)?, &obs)?;
    formats::write_ground_truth(create(gt)?, &truth)?;
    Ok(obs.len())
}
