//! Synthetic sensor outputs generated from ground truth.
//!
//! Every simulator takes its random stream explicitly; with all noise terms
//! set to zero the outputs are exact functions of the scene.

mod camera;
mod config;
mod gnss;
mod imu;
mod lidar;
pub mod log;

pub use camera::{simulate_camera, CameraConfig, CameraDetection, CameraFrame};
pub use config::{default_confusion, SensorNoiseConfig};
pub use gnss::{simulate_gnss, GnssFix};
pub use imu::{simulate_imu, ImuSample};
pub use lidar::{simulate_lidar, LidarConfig, LidarPoint, LidarScan};

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Zero-mean Gaussian draw; exact zero (and no draw) when `sigma == 0`.
pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma)
            .map(|n| n.sample(rng))
            .unwrap_or(0.0)
    } else {
        0.0
    }
}
