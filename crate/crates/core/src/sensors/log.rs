//! JSON-lines sensor log: one [`SensorRecord`] per tick.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::world::VehicleState;

use super::{CameraFrame, GnssFix, ImuSample, LidarScan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRecord {
    pub tick: u64,
    pub time: f64,
    /// Ground truth, kept for offline scoring; the pipeline never reads it.
    pub truth: VehicleState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imu: Option<ImuSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gnss: Option<GnssFix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lidar: Option<LidarScan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraFrame>,
}

pub fn write_record<W: Write>(out: &mut W, record: &SensorRecord) -> Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<SensorRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SensorRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("sensor log line {}: {e}", i + 1)))?;
        records.push(rec);
    }
    Ok(records)
}
