use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose2, Vec2};
use crate::localization::{local_to_navsat, GeoDatum};
use crate::rng::SimRng;
use crate::world::VehicleState;

use super::{gaussian, SensorNoiseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnssFix {
    pub timestamp: f64,
    pub latitude: f64,
    pub longitude: f64,
}

/// Fix for the antenna at `mount` (pose of `gnss_link` in `base_link`),
/// with isotropic Gaussian position noise applied in the local frame.
pub fn simulate_gnss(
    truth: &VehicleState,
    mount: &Pose2,
    datum: &GeoDatum,
    noise: &SensorNoiseConfig,
    timestamp: f64,
    rng: &mut SimRng,
) -> Result<GnssFix> {
    let pose = truth.pose();
    if !pose.is_finite() {
        return Err(Error::NonFinite("vehicle pose"));
    }
    let antenna = pose.transform_point(mount.translation());
    let noisy = antenna
        + Vec2::new(
            gaussian(rng, noise.gnss_sigma),
            gaussian(rng, noise.gnss_sigma),
        );
    let (latitude, longitude) = local_to_navsat(noisy, datum);
    Ok(GnssFix {
        timestamp,
        latitude,
        longitude,
    })
}
