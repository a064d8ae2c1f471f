use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result};
use crate::geometry::normalize_angle;
use crate::rng::SimRng;
use crate::world::VehicleState;

use super::{gaussian, SensorNoiseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub timestamp: f64,
    /// Absolute heading (rad).
    pub yaw: f64,
    pub yaw_rate: f64,
    /// Longitudinal acceleration (m/s²).
    pub accel: f64,
}

pub fn simulate_imu(
    truth: &VehicleState,
    noise: &SensorNoiseConfig,
    timestamp: f64,
    rng: &mut SimRng,
) -> Result<ImuSample> {
    ensure_finite(truth.yaw, "truth.yaw")?;
    ensure_finite(truth.yaw_rate, "truth.yaw_rate")?;
    ensure_finite(truth.accel, "truth.accel")?;
    Ok(ImuSample {
        timestamp,
        yaw: normalize_angle(truth.yaw + gaussian(rng, noise.imu_yaw_sigma)),
        yaw_rate: truth.yaw_rate + gaussian(rng, noise.imu_rate_sigma),
        accel: truth.accel + gaussian(rng, noise.imu_accel_sigma),
    })
}
