use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// One row of `telemetry.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub tick: u64,
    pub time: f64,
    pub truth_x: f64,
    pub truth_y: f64,
    pub truth_yaw: f64,
    pub truth_v: f64,
    pub ekf_x: Option<f64>,
    pub ekf_y: Option<f64>,
    pub ekf_yaw: Option<f64>,
    pub ekf_v: Option<f64>,
    pub ekf_yaw_rate: Option<f64>,
    pub cov_x: Option<f64>,
    pub cov_y: Option<f64>,
    pub cov_yaw: Option<f64>,
    pub cov_v: Option<f64>,
    pub cov_yaw_rate: Option<f64>,
    pub imu_update: u8,
    /// Raw fix in the local frame, moved to the rear axle.
    pub gnss_x: Option<f64>,
    pub gnss_y: Option<f64>,
    pub lidar_cones: u32,
    pub camera_cones: u32,
    pub fused_cones: u32,
    pub two_source_cones: u32,
    pub mapped_cones: u32,
    pub mode: String,
    pub plan_valid: u8,
    pub lookahead: f64,
    pub steer: f64,
    pub target_v: f64,
    pub measured_v: f64,
    pub accel_cmd: f64,
    pub cross_track: f64,
    pub lap: u32,
    /// Plan waypoints in base_link as `x:y` pairs joined by `;`.
    pub waypoints: String,
}

impl TelemetryRecord {
    pub fn truth_position(&self) -> Vec2 {
        Vec2::new(self.truth_x, self.truth_y)
    }

    pub fn ekf_position(&self) -> Option<Vec2> {
        Some(Vec2::new(self.ekf_x?, self.ekf_y?))
    }

    pub fn gnss_position(&self) -> Option<Vec2> {
        Some(Vec2::new(self.gnss_x?, self.gnss_y?))
    }
}

pub fn format_waypoints(points: &[Vec2]) -> String {
    points
        .iter()
        .map(|p| format!("{:.3}:{:.3}", p.x, p.y))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_telemetry<W: Write>(out: W, records: &[TelemetryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_telemetry<R: Read>(input: R) -> Result<Vec<TelemetryRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in rd.deserialize().enumerate() {
        let rec: TelemetryRecord = row.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Wall-clock microseconds spent per stage in one tick. Kept out of the
/// telemetry so that file stays reproducible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub tick: u64,
    pub sensors_us: u64,
    pub localization_us: u64,
    pub perception_us: u64,
    pub fusion_us: u64,
    pub mapping_us: u64,
    pub planning_us: u64,
    pub control_us: u64,
}

pub fn write_timings<W: Write>(out: W, timings: &[StageTimings]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in timings {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}
