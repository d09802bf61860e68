//! CSV schemas read and written by the subcommands.
//!
//! Floats are written in Rust's shortest round-trip form, so re-reading a
//! file reproduces the in-memory values exactly.

use std::io::{Read, Write};

use nalgebra::Vector3;
use uuv_geoloc::camera::PixelCoord;
use uuv_geoloc::geodesy::GeodeticCoord;
use uuv_geoloc::geometry::GimbalAngles;
use uuv_geoloc::recovery::{Observation, RecoveredSample};
use uuv_geoloc::synth::GroundTruthSample;

use crate::CliError;

pub const OBSERVATION_HEADER: [&str; 14] = [
    "t",
    "u",
    "v",
    "a_uav",
    "d_uuv",
    "gimbal_yaw_deg",
    "gimbal_pitch_deg",
    "gimbal_roll_deg",
    "body_yaw_deg",
    "body_pitch_deg",
    "body_roll_deg",
    "ref_lat_deg",
    "ref_lon_deg",
    "ref_alt_m",
];

pub const TRAJECTORY_HEADER: [&str; 11] = [
    "t", "cam_x", "cam_y", "cam_z", "east", "north", "up", "lat_deg", "lon_deg", "h_m", "flags",
];

pub const GROUND_TRUTH_HEADER: [&str; 4] = ["t", "x", "y", "z"];

pub const TRACK_HEADER: [&str; 3] = ["t", "u", "v"];

pub const EXCLUDED_HEADER: [&str; 4] = ["line", "t", "reason", "detail"];

/// One parsed data row with its 1-based line number in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct Row<T> {
    pub line: u64,
    pub value: T,
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn input_err(line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("line {line}: {msg}"))
}

/// Read a headed CSV whose columns must match `header` exactly and in order.
fn read_numeric<R: Read>(src: R, header: &[&str]) -> Result<Vec<(u64, Vec<f64>)>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(src);
    let got = reader.headers().map_err(|e| input_err(1, e))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(input_err(
            1,
            format!("expected header `{}`, found `{}`", header.join(","), got.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            input_err(line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .zip(header)
            .map(|(field, name)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| input_err(line, format!("column `{name}`: `{field}` is not a finite number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

fn check_increasing(rows: &[(u64, Vec<f64>)]) -> Result<(), CliError> {
    for w in rows.windows(2) {
        if w[1].1[0] <= w[0].1[0] {
            return Err(input_err(w[1].0, format!("timestamp {} does not increase", w[1].1[0])));
        }
    }
    Ok(())
}

/// Raw observation rows; geometric screening happens at recovery time.
pub fn read_observations<R: Read>(src: R) -> Result<Vec<Row<Observation>>, CliError> {
    let rows = read_numeric(src, &OBSERVATION_HEADER)?;
    check_increasing(&rows)?;
    rows.into_iter()
        .map(|(line, c)| {
            let angles = |y: f64, p: f64, r: f64| GimbalAngles::from_degrees(y, p, r).map_err(|e| input_err(line, e));
            let reference = GeodeticCoord::from_degrees(c[11], c[12], c[13]).map_err(|e| input_err(line, e))?;
            Ok(Row {
                line,
                value: Observation {
                    t: c[0],
                    px: PixelCoord::new(c[1], c[2]),
                    altitude: c[3],
                    depth: c[4],
                    gimbal: angles(c[5], c[6], c[7])?,
                    body: angles(c[8], c[9], c[10])?,
                    reference,
                },
            })
        })
        .collect()
}

pub fn write_observations<W: Write>(dst: W, obs: &[Observation]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(OBSERVATION_HEADER)?;
    for o in obs {
        let deg = |g: &GimbalAngles| [g.yaw.to_degrees(), g.pitch.to_degrees(), g.roll.to_degrees()];
        let mut rec = vec![o.t, o.px.u, o.px.v, o.altitude, o.depth];
        rec.extend(deg(&o.gimbal));
        rec.extend(deg(&o.body));
        rec.extend([o.reference.lat_deg(), o.reference.lon_deg(), o.reference.height]);
        w.write_record(rec.into_iter().map(fmt))?;
    }
    w.flush()?;
    Ok(())
}

/// Trajectory row as re-read by `evaluate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub enu: Vector3<f64>,
}

pub fn write_trajectory<W: Write>(dst: W, samples: &[RecoveredSample]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(TRAJECTORY_HEADER)?;
    for s in samples {
        let g = &s.geodetic;
        let mut rec: Vec<String> = [
            s.t, s.camera.x, s.camera.y, s.camera.z, s.enu.x, s.enu.y, s.enu.z, g.lat_deg(), g.lon_deg(), g.height,
        ]
        .into_iter()
        .map(fmt)
        .collect();
        rec.push(if s.out_of_frame { "out_of_frame".into() } else { String::new() });
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(src: R) -> Result<Vec<Row<TrajectoryPoint>>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(src);
    let got = reader.headers().map_err(|e| input_err(1, e))?.clone();
    if got.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(input_err(1, format!("expected header `{}`", TRAJECTORY_HEADER.join(","))));
    }
    let mut rows: Vec<(u64, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| input_err(e.position().map_or(0, |p| p.line()), e))?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .take(TRAJECTORY_HEADER.len() - 1)
            .zip(TRAJECTORY_HEADER)
            .map(|(field, name)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| input_err(line, format!("column `{name}`: `{field}` is not a finite number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((line, values));
    }
    check_increasing(&rows)?;
    Ok(rows
        .into_iter()
        .map(|(line, c)| Row {
            line,
            value: TrajectoryPoint {
                t: c[0],
                enu: Vector3::new(c[4], c[5], c[6]),
            },
        })
        .collect())
}

pub fn write_ground_truth<W: Write>(dst: W, gt: &[GroundTruthSample]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(GROUND_TRUTH_HEADER)?;
    for g in gt {
        w.write_record([g.t, g.position.x, g.position.y, g.position.z].map(fmt))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth<R: Read>(src: R) -> Result<Vec<Row<GroundTruthSample>>, CliError> {
    let rows = read_numeric(src, &GROUND_TRUTH_HEADER)?;
    check_increasing(&rows)?;
    Ok(rows
        .into_iter()
        .map(|(line, c)| Row {
            line,
            value: GroundTruthSample {
                t: c[0],
                position: Vector3::new(c[1], c[2], c[3]),
            },
        })
        .collect())
}

/// Pixel track of the survey-grid origin: `t,u,v`.
pub fn read_track<R: Read>(src: R) -> Result<Vec<(f64, PixelCoord)>, CliError> {
    let rows = read_numeric(src, &TRACK_HEADER)?;
    check_increasing(&rows)?;
    Ok(rows.into_iter().map(|(_, c)| (c[0], PixelCoord::new(c[1], c[2]))).collect())
}

/// A row left out of the trajectory, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Excluded {
    pub line: u64,
    pub t: f64,
    pub reason: String,
    pub detail: String,
}

pub fn write_excluded<W: Write>(dst: W, rows: &[Excluded]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(EXCLUDED_HEADER)?;
    for r in rows {
        w.write_record([r.line.to_string(), fmt(r.t), r.reason.clone(), r.detail.clone()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "t,u,v,a_uav,d_uuv,gimbal_yaw_deg,gimbal_pitch_deg,gimbal_roll_deg,\
                          body_yaw_deg,body_pitch_deg,body_roll_deg,ref_lat_deg,ref_lon_deg,ref_alt_m\n";

    #[test]
    fn observations_round_trip() {
        let text = format!("{HEADER}0.1,1920,1080,25,0.63,0,-90,0,10,0.5,-0.5,42.78,17.86,31\n");
        let rows = read_observations(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].line, 2);
        let o = rows[0].value;
        assert_eq!(o.px, PixelCoord::new(1920.0, 1080.0));
        assert!((o.gimbal.pitch + std::f64::consts::FRAC_PI_2).abs() < 1e-15);

        let mut out = Vec::new();
        write_observations(&mut out, &[o]).unwrap();
        let again = read_observations(out.as_slice()).unwrap();
        assert_eq!(again[0].value.px, o.px);
        assert_eq!(again[0].value.altitude, o.altitude);
    }

    #[test]
    fn bad_header_reports_line_one() {
        let err = read_observations("t,u,v\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(&err, CliError::Input(m) if m.starts_with("line 1:")), "{err}");
    }

    #[test]
    fn bad_value_reports_line() {
        let text = format!("{HEADER}0,1,1,25,0,0,-90,0,0,0,0,42,17,0\n1,x,1,25,0,0,-90,0,0,0,0,42,17,0\n");
        let err = read_observations(text.as_bytes()).unwrap_err();
        assert!(matches!(&err, CliError::Input(m) if m.starts_with("line 3:") && m.contains("`u`")), "{err}");
        let text = format!("{HEADER}0,1,1,25,0,0,-90,0,0,0,0,42,17\n");
        assert!(read_observations(text.as_bytes()).is_err());
        let text = format!("{HEADER}0,1,1,NaN,0,0,-90,0,0,0,0,42,17,0\n");
        assert!(read_observations(text.as_bytes()).is_err());
    }

    #[test]
    fn timestamps_must_increase() {
        let row = "1,1,1,25,0,0,-90,0,0,0,0,42,17,0\n";
        let err = read_observations(format!("{HEADER}{row}{row}").as_bytes()).unwrap_err();
        assert!(matches!(&err, CliError::Input(m) if m.starts_with("line 3:")));
    }

    #[test]
    fn shortest_float_form_round_trips() {
        for v in [0.1, 1.0 / 3.0, 25.63, -1e-17, 6378137.000000001] {
            assert_eq!(fmt(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn ground_truth_round_trip() {
        let gt = [GroundTruthSample {
            t: 0.5,
            position: Vector3::new(0.1, -2.0 / 3.0, -25.63),
        }];
        let mut out = Vec::new();
        write_ground_truth(&mut out, &gt).unwrap();
        let back = read_ground_truth(out.as_slice()).unwrap();
        assert_eq!(back[0].value, gt[0]);
    }
}
