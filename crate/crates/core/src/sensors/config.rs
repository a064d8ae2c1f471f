use serde::{Deserialize, Serialize};

use crate::world::ConeColor;

/// Row-stochastic confusion used by default: mistakes stay between the two
/// orange classes, or fall back to `unknown`.
pub fn default_confusion() -> [[f64; 5]; 5] {
    [
        // orange
        [0.90, 0.00, 0.00, 0.08, 0.02],
        // yellow
        [0.01, 0.97, 0.00, 0.00, 0.02],
        // blue
        [0.00, 0.00, 0.97, 0.00, 0.03],
        // large orange
        [0.10, 0.00, 0.00, 0.88, 0.02],
        // unknown
        [0.00, 0.00, 0.00, 0.00, 1.00],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorNoiseConfig {
    pub lidar_sigma: f64,
    pub gnss_sigma: f64,
    pub imu_yaw_sigma: f64,
    pub imu_rate_sigma: f64,
    pub imu_accel_sigma: f64,
    pub camera_depth_sigma_rel: f64,
    pub camera_bearing_sigma: f64,
    pub camera_bbox_sigma_px: f64,
    pub false_negative_rate: f64,
    /// Mean number of phantom camera detections per frame.
    pub false_positive_rate: f64,
    pub confusion: [[f64; 5]; 5],
}

impl Default for SensorNoiseConfig {
    fn default() -> Self {
        Self {
            lidar_sigma: 0.01,
            gnss_sigma: 0.3,
            imu_yaw_sigma: 0.01,
            imu_rate_sigma: 0.005,
            imu_accel_sigma: 0.05,
            camera_depth_sigma_rel: 0.03,
            camera_bearing_sigma: 0.003,
            camera_bbox_sigma_px: 0.5,
            false_negative_rate: 0.05,
            false_positive_rate: 0.2,
            confusion: default_confusion(),
        }
    }
}

impl SensorNoiseConfig {
    pub fn noiseless() -> Self {
        let mut confusion = [[0.0; 5]; 5];
        for (i, row) in confusion.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self {
            lidar_sigma: 0.0,
            gnss_sigma: 0.0,
            imu_yaw_sigma: 0.0,
            imu_rate_sigma: 0.0,
            imu_accel_sigma: 0.0,
            camera_depth_sigma_rel: 0.0,
            camera_bearing_sigma: 0.0,
            camera_bbox_sigma_px: 0.0,
            false_negative_rate: 0.0,
            false_positive_rate: 0.0,
            confusion,
        }
    }

    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        let sigmas = [
            ("lidar_sigma", self.lidar_sigma),
            ("gnss_sigma", self.gnss_sigma),
            ("imu_yaw_sigma", self.imu_yaw_sigma),
            ("imu_rate_sigma", self.imu_rate_sigma),
            ("imu_accel_sigma", self.imu_accel_sigma),
            ("camera_depth_sigma_rel", self.camera_depth_sigma_rel),
            ("camera_bearing_sigma", self.camera_bearing_sigma),
            ("camera_bbox_sigma_px", self.camera_bbox_sigma_px),
            ("false_positive_rate", self.false_positive_rate),
        ];
        for (name, v) in sigmas {
            if !(v >= 0.0 && v.is_finite()) {
                errors.push(format!("{prefix}.{name}: must be finite and >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.false_negative_rate) {
            errors.push(format!("{prefix}.false_negative_rate: must lie in [0, 1]"));
        }
        for (i, row) in self.confusion.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                errors.push(format!(
                    "{prefix}.confusion[{i}]: row must be non-negative and sum to 1"
                ));
            }
        }
    }

    pub fn confusion_row(&self, truth: ConeColor) -> &[f64; 5] {
        &self.confusion[truth.index()]
    }
}
