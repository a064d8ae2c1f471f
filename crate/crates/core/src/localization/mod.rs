//! GNSS-to-local projection and the planar GNSS+IMU extended Kalman filter.

mod ekf;
mod localizer;
mod navsat;

pub use ekf::{
    ekf_predict, ekf_update_gnss, ekf_update_imu, EkfConfig, EkfState, Innovation, StateIndex,
    STATE_DIM,
};
pub use localizer::Localizer;
pub use navsat::{local_to_navsat, navsat_to_local, GeoDatum, NavsatTransform, EARTH_RADIUS};
