//! Comparison of recovered trajectories against surveyed ground truth.

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::geometry::rot_z;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("length mismatch: {estimated} estimated vs {ground_truth} ground-truth samples")]
    LengthMismatch { estimated: usize, ground_truth: usize },
    #[error("degenerate geometry: camera height {0} m")]
    DegenerateGeometry(f64),
    #[error("non-finite input")]
    NonFinite,
}

/// Survey frame: yawed about Z relative to ENU and offset from the UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthFrame {
    /// Yaw of the survey frame against ENU, radians.
    pub yaw: f64,
    /// Translation from the survey origin to the UAV, meters.
    pub translation: Vector3<f64>,
}

impl GroundTruthFrame {
    pub fn new(yaw: f64, translation: Vector3<f64>) -> Result<Self, EvalError> {
        if !yaw.is_finite() || yaw.abs() > std::f64::consts::PI || !translation.iter().all(|v| v.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        Ok(Self { yaw, translation })
    }

    pub fn identity() -> Self {
        Self {
            yaw: 0.0,
            translation: Vector3::zeros(),
        }
    }
}

/// `R_z(yaw) p + T`.
pub fn enu_to_ground_truth(p: &Vector3<f64>, frame: &GroundTruthFrame) -> Vector3<f64> {
    rot_z(frame.yaw) * p + frame.translation
}

/// Re-read a surface-grid position at the vehicle's depth.
///
/// Positions read off the water-surface grid are scaled about the camera
/// nadir by `(camera_height + depth) / camera_height`.
pub fn rescale_grid_point(
    grid_xy: Vector2<f64>,
    nadir_xy: Vector2<f64>,
    camera_height: f64,
    depth: f64,
) -> Result<Vector2<f64>, EvalError> {
    if !(camera_height.is_finite() && camera_height > 0.0) {
        return Err(EvalError::DegenerateGeometry(camera_height));
    }
    if !(depth.is_finite() && depth >= 0.0) {
        return Err(EvalError::NonFinite);
    }
    let scale = (camera_height + depth) / camera_height;
    Ok(nadir_xy + (grid_xy - nadir_xy) * scale)
}

/// Per-experiment planar error summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryErrorReport {
    pub mae: f64,
    pub rmse: f64,
    pub n_samples: usize,
    pub n_excluded: usize,
    /// Mean absolute vertical residual, when heights were compared.
    pub z_mae: Option<f64>,
}

/// Mean and RMS of the per-sample planar Euclidean residuals.
pub fn trajectory_errors(est: &[Vector2<f64>], gt: &[Vector2<f64>]) -> Result<TrajectoryErrorReport, EvalError> {
    if est.len() != gt.len() {
        return Err(EvalError::LengthMismatch {
            estimated: est.len(),
            ground_truth: gt.len(),
        });
    }
    if est.is_empty() {
        return Err(EvalError::EmptyTrajectory);
    }
    let n = est.len() as f64;
    let (sum, sum_sq) = est.iter().zip(gt).fold((0.0, 0.0), |(s, s2), (e, g)| {
        let r = (e - g).norm();
        (s + r, s2 + r * r)
    });
    Ok(TrajectoryErrorReport {
        mae: sum / n,
        rmse: (sum_sq / n).sqrt(),
        n_samples: est.len(),
        n_excluded: 0,
        z_mae: None,
    })
}

/// Planar errors plus the vertical residual as a separate diagnostic.
pub fn trajectory_errors_3d(est: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<TrajectoryErrorReport, EvalError> {
    let planar = |v: &[Vector3<f64>]| v.iter().map(|p| p.xy()).collect::<Vec<_>>();
    let mut report = trajectory_errors(&planar(est), &planar(gt))?;
    let z = est.iter().zip(gt).map(|(e, g)| (e.z - g.z).abs()).sum::<f64>() / est.len() as f64;
    report.z_mae = Some(z);
    Ok(report)
}

/// Pair each query time with the nearest reference time within `max_gap`.
///
/// Both slices must be sorted ascending. Each reference index is used at
/// most once; a query left without a partner maps to `None`.
pub fn match_nearest(query: &[f64], reference: &[f64], max_gap: f64) -> Vec<Option<usize>> {
    let mut used = vec![false; reference.len()];
    let mut out = Vec::with_capacity(query.len());
    let mut lo = 0;
    for &t in query {
        while lo + 1 < reference.len() && reference[lo + 1] <= t {
            lo += 1;
        }
        let candidates = [Some(lo), lo.checked_add(1)];
        let best = candidates
            .into_iter()
            .flatten()
            .filter(|&i| i < reference.len() && !used[i])
            .map(|i| (i, (reference[i] - t).abs()))
            .filter(|&(_, gap)| gap <= max_gap)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, _)) = best {
            used[i] = true;
            out.push(Some(i));
        } else {
            out.push(None);
        }
    }
    out
}
