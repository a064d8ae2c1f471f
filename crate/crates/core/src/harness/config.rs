use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{PidGains, SpeedParams};
use crate::error::{Error, Result};
use crate::fusion::FusionParams;
use crate::localization::{EkfConfig, GeoDatum};
use crate::mapping::MappingParams;
use crate::perception::{
    estimate_ground_height, ClusterParams, GroundFilterParams, TrackerParams, ValidationParams,
};
use crate::planning::{PlanningParams, PursuitParams};
use crate::sensors::{CameraConfig, LidarConfig, LidarScan, SensorNoiseConfig};
use crate::world::{TrackSpec, VehicleGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundConfig {
    pub h_ground: f64,
    pub band: f64,
    /// Added to the ground height so noisy ground returns stay out.
    pub noise_margin: f64,
    /// Estimate the ground from each scan instead of using `h_ground`.
    pub estimate: bool,
    pub percentile: f64,
}

impl Default for GroundConfig {
    fn default() -> Self {
        Self {
            h_ground: 0.0,
            band: 0.5,
            noise_margin: 0.03,
            estimate: false,
            percentile: 0.1,
        }
    }
}

impl GroundConfig {
    pub fn params_for(&self, scan: &LidarScan) -> GroundFilterParams {
        let base = if self.estimate {
            estimate_ground_height(scan, self.percentile).unwrap_or(self.h_ground)
        } else {
            self.h_ground
        };
        GroundFilterParams {
            h_ground: base + self.noise_margin,
            band: self.band,
        }
    }

    fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        GroundFilterParams {
            h_ground: self.h_ground,
            band: self.band,
        }
        .validate(errors, prefix);
        if !(self.noise_margin >= 0.0 && self.noise_margin < self.band) {
            errors.push(format!("{prefix}.noise_margin must be in [0, band)"));
        }
        if !(0.0..=1.0).contains(&self.percentile) {
            errors.push(format!("{prefix}.percentile must be in [0, 1]"));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthConfig {
    pub window: usize,
    pub association_gate: f64,
}

impl Default for DepthConfig {
    fn default() -> Self {
        Self {
            window: 5,
            association_gate: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub ambient_light: f64,
    pub history_consistency: f64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            ambient_light: 0.8,
            history_consistency: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorToggles {
    pub lidar: bool,
    pub camera: bool,
    pub gnss: bool,
    /// LiDAR and camera go dark from this time on.
    pub perception_blackout_at: Option<f64>,
}

impl Default for SensorToggles {
    fn default() -> Self {
        Self {
            lidar: true,
            camera: true,
            gnss: true,
            perception_blackout_at: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub tick_dt: f64,
    pub control_hz: f64,
    pub gnss_hz: f64,
    pub lidar_hz: f64,
    pub camera_hz: f64,
    pub exploration_laps: u32,
    /// Ticks with an invalid plan tolerated before the speed target drops
    /// to zero.
    pub stop_patience: u64,
    /// Seconds without any LiDAR scan or camera frame after which the
    /// plan is treated as invalid, even if mapped cones remain.
    pub perception_timeout: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            tick_dt: 0.01,
            control_hz: 20.0,
            gnss_hz: 10.0,
            lidar_hz: 10.0,
            camera_hz: 20.0,
            exploration_laps: 1,
            stop_patience: 50,
            perception_timeout: 0.5,
        }
    }
}

impl ScheduleConfig {
    /// Ticks between events of a stream running at `hz`.
    pub fn every(&self, hz: f64) -> u64 {
        (1.0 / (hz * self.tick_dt)).round().max(1.0) as u64
    }

    fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.tick_dt > 0.0 && self.tick_dt <= 0.1) {
            errors.push(format!("{prefix}.tick_dt must be in (0, 0.1]"));
            return;
        }
        for (name, hz) in [
            ("control_hz", self.control_hz),
            ("gnss_hz", self.gnss_hz),
            ("lidar_hz", self.lidar_hz),
            ("camera_hz", self.camera_hz),
        ] {
            if !(hz > 0.0 && hz.is_finite()) {
                errors.push(format!("{prefix}.{name} must be positive"));
                continue;
            }
            let ratio = 1.0 / (hz * self.tick_dt);
            if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 {
                errors.push(format!("{prefix}.{name} must divide the tick rate"));
            }
        }
        if !(self.perception_timeout > 0.0) {
            errors.push(format!("{prefix}.perception_timeout must be positive"));
        }
        if self.control_hz > 0.0 && 1.0 / self.control_hz > 0.5 {
            errors.push(format!("{prefix}.control_hz must be at least 2"));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunLimits {
    pub laps: Option<u32>,
    pub ticks: Option<u64>,
    pub max_duration: f64,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self {
            laps: Some(1),
            ticks: None,
            max_duration: 400.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub match_radius: f64,
    pub sensor_range: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            match_radius: 0.5,
            sensor_range: 35.0,
        }
    }
}

/// Everything a run depends on. Field order here is the canonical JSON
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub track: TrackSpec,
    pub vehicle: VehicleGeometry,
    pub noise: SensorNoiseConfig,
    pub lidar: LidarConfig,
    pub camera: CameraConfig,
    pub datum: GeoDatum,
    pub sensors: SensorToggles,
    pub environment: EnvironmentConfig,
    pub ground: GroundConfig,
    pub cluster: ClusterParams,
    pub validation: ValidationParams,
    pub tracker: TrackerParams,
    pub depth: DepthConfig,
    pub fusion: FusionParams,
    pub ekf: EkfConfig,
    pub mapping: MappingParams,
    pub planning: PlanningParams,
    pub pursuit: PursuitParams,
    pub pid: PidGains,
    pub speed: SpeedParams,
    pub schedule: ScheduleConfig,
    pub limits: RunLimits,
    pub metrics: MetricsConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut fusion = FusionParams::default();
        // LiDAR returns come from the near face of the cone, so the cluster
        // centroid sits short of the axis by about r·π/4
        fusion.lidar_correction.b = 0.12;
        Self {
            seed: 0,
            track: TrackSpec::default(),
            vehicle: VehicleGeometry::default(),
            noise: SensorNoiseConfig::default(),
            lidar: LidarConfig::default(),
            camera: CameraConfig::default(),
            datum: GeoDatum::default(),
            sensors: SensorToggles::default(),
            environment: EnvironmentConfig::default(),
            ground: GroundConfig::default(),
            cluster: ClusterParams::default(),
            validation: ValidationParams::default(),
            tracker: TrackerParams::default(),
            depth: DepthConfig::default(),
            fusion,
            ekf: EkfConfig::default(),
            mapping: MappingParams::default(),
            planning: PlanningParams::default(),
            pursuit: PursuitParams::default(),
            pid: PidGains::default(),
            speed: SpeedParams::default(),
            schedule: ScheduleConfig::default(),
            limits: RunLimits::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Every invalid field, or `Ok` if none.
    pub fn validate(&self) -> Result<()> {
        let mut e = Vec::new();
        self.track.validate(&mut e, "track");
        self.vehicle.validate(&mut e, "vehicle");
        self.noise.validate(&mut e, "noise");
        self.lidar.validate(&mut e, "lidar");
        self.camera.validate(&mut e, "camera");
        if !(self.datum.latitude0.abs() < 89.0
            && self.datum.longitude0.abs() <= 180.0
            && self.datum.yaw_offset.is_finite())
        {
            e.push("datum: latitude0 must be within ±89°, longitude0 within ±180°".into());
        }
        if let Some(t) = self.sensors.perception_blackout_at {
            if !(t >= 0.0) {
                e.push("sensors.perception_blackout_at must be non-negative".into());
            }
        }
        if !(0.0..=1.0).contains(&self.environment.ambient_light) {
            e.push("environment.ambient_light must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.environment.history_consistency) {
            e.push("environment.history_consistency must be in [0, 1]".into());
        }
        self.ground.validate(&mut e, "ground");
        self.cluster.validate(&mut e, "cluster");
        self.validation.validate(&mut e, "validation");
        self.tracker.validate(&mut e, "tracker");
        if self.depth.window == 0 {
            e.push("depth.window must be at least 1".into());
        }
        if !(self.depth.association_gate > 0.0) {
            e.push("depth.association_gate must be positive".into());
        }
        self.fusion.validate(&mut e, "fusion");
        self.ekf.validate(&mut e, "ekf");
        self.mapping.validate(&mut e, "mapping");
        self.planning.validate(&mut e, "planning");
        self.pursuit.validate(&mut e, "pursuit");
        self.pid.validate(&mut e, "pid");
        self.speed.validate(&mut e, "speed");
        self.schedule.validate(&mut e, "schedule");
        if !(self.limits.max_duration > 0.0 && self.limits.max_duration.is_finite()) {
            e.push("limits.max_duration must be positive".into());
        }
        if !(self.metrics.match_radius > 0.0 && self.metrics.sensor_range > 0.0) {
            e.push("metrics: match_radius and sensor_range must be positive".into());
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(e))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|err| Error::Config(vec![err.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical form: pretty JSON in declaration order with a trailing
    /// newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_json())?;
        Ok(())
    }
}
