use serde::{Deserialize, Serialize};

use crate::sensors::{LidarPoint, LidarScan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundFilterParams {
    pub h_ground: f64,
    pub band: f64,
}

impl Default for GroundFilterParams {
    fn default() -> Self {
        Self {
            h_ground: 0.0,
            band: 0.5,
        }
    }
}

impl GroundFilterParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.band > 0.0 && self.band.is_finite()) {
            errors.push(format!("{prefix}.band must be positive"));
        }
        if !self.h_ground.is_finite() {
            errors.push(format!("{prefix}.h_ground must be finite"));
        }
    }
}

/// Keeps the points with `h_ground < z < h_ground + band`, both bounds
/// strict, in scan order.
pub fn filter_near_ground(scan: &LidarScan, params: &GroundFilterParams) -> Vec<LidarPoint> {
    let hi = params.h_ground + params.band;
    scan.points
        .iter()
        .filter(|p| p.z > params.h_ground && p.z < hi)
        .copied()
        .collect()
}

/// Ground height as a low percentile of point heights; `None` for an
/// empty scan.
pub fn estimate_ground_height(scan: &LidarScan, percentile: f64) -> Option<f64> {
    if scan.points.is_empty() {
        return None;
    }
    let mut z: Vec<f64> = scan.points.iter().map(|p| p.z).collect();
    let k = ((z.len() - 1) as f64 * percentile.clamp(0.0, 1.0)).round() as usize;
    let (_, kth, _) = z.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    Some(*kth)
}
