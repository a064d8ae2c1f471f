use nalgebra::SMatrix;

use crate::error::Result;
use crate::geometry::{Pose2, Vec2};
use crate::sensors::{GnssFix, ImuSample, SensorNoiseConfig};

use super::ekf::{ekf_predict, ekf_update_gnss, ekf_update_imu, EkfConfig, EkfState, Innovation};
use super::navsat::NavsatTransform;

/// Runs the navsat transform and the EKF on a sensor stream: every IMU
/// sample predicts to its timestamp then corrects heading and turn rate,
/// every GNSS fix corrects position. The filter starts on the first fix.
#[derive(Debug, Clone)]
pub struct Localizer {
    navsat: NavsatTransform,
    cfg: EkfConfig,
    r_gnss: SMatrix<f64, 2, 2>,
    r_imu: SMatrix<f64, 2, 2>,
    gnss_lever: Pose2,
    state: Option<EkfState>,
    last_imu: Option<ImuSample>,
    pub gnss_updates: u64,
    pub imu_updates: u64,
    pub last_gnss_innovation: Option<Innovation>,
    /// Most recent fix projected into the local frame and moved to the rear axle.
    pub last_gnss_local: Option<Vec2>,
}

impl Localizer {
    pub fn new(
        navsat: NavsatTransform,
        cfg: EkfConfig,
        noise: &SensorNoiseConfig,
        gnss_lever: Pose2,
    ) -> Self {
        let floor = cfg.min_measurement_variance;
        let g = (noise.gnss_sigma * noise.gnss_sigma).max(floor);
        let r_gnss = SMatrix::<f64, 2, 2>::new(g, 0.0, 0.0, g);
        let r_imu = SMatrix::<f64, 2, 2>::new(
            (noise.imu_yaw_sigma * noise.imu_yaw_sigma).max(floor),
            0.0,
            0.0,
            (noise.imu_rate_sigma * noise.imu_rate_sigma).max(floor),
        );
        Self {
            navsat,
            cfg,
            r_gnss,
            r_imu,
            gnss_lever,
            state: None,
            last_imu: None,
            gnss_updates: 0,
            imu_updates: 0,
            last_gnss_innovation: None,
            last_gnss_local: None,
        }
    }

    pub fn state(&self) -> Option<&EkfState> {
        self.state.as_ref()
    }

    pub fn on_imu(&mut self, sample: &ImuSample) -> Result<()> {
        if let Some(state) = &self.state {
            let dt = sample.timestamp - state.timestamp;
            let predicted = if dt > 0.0 {
                ekf_predict(state, dt, sample.accel, &self.cfg)?
            } else {
                state.clone()
            };
            let (updated, _) = ekf_update_imu(&predicted, sample, &self.r_imu)?;
            updated.check_covariance()?;
            self.state = Some(updated);
            self.imu_updates += 1;
        }
        self.last_imu = Some(*sample);
        Ok(())
    }

    pub fn on_gnss(&mut self, fix: &GnssFix) -> Result<()> {
        let antenna = self.navsat.to_local(fix, 0.0)?;
        let yaw = match (&self.state, &self.last_imu) {
            (Some(s), _) => s.mean[2],
            (None, Some(imu)) => imu.yaw,
            (None, None) => 0.0,
        };
        let z = antenna - self.gnss_lever.translation().rotate(yaw);
        self.last_gnss_local = Some(z);
        match &self.state {
            None => {
                let imu = self.last_imu.unwrap_or(ImuSample {
                    timestamp: fix.timestamp,
                    yaw,
                    yaw_rate: 0.0,
                    accel: 0.0,
                });
                self.state = Some(EkfState::new(
                    [z.x, z.y, imu.yaw, 0.0, imu.yaw_rate],
                    [
                        self.r_gnss[(0, 0)],
                        self.r_gnss[(1, 1)],
                        self.r_imu[(0, 0)],
                        self.cfg
                            .initial_sigma_v
                            .powi(2)
                            .max(self.cfg.min_measurement_variance),
                        self.cfg
                            .initial_sigma_yaw_rate
                            .powi(2)
                            .max(self.cfg.min_measurement_variance),
                    ],
                    fix.timestamp,
                ));
            }
            Some(state) => {
                let (updated, innovation) = ekf_update_gnss(state, z, &self.r_gnss)?;
                updated.check_covariance()?;
                self.state = Some(updated);
                self.last_gnss_innovation = Some(innovation);
            }
        }
        self.gnss_updates += 1;
        Ok(())
    }
}
