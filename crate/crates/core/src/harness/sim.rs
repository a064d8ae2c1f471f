use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::metrics::{compute_metrics, LapCounter, RunMetrics};
use super::telemetry::{
    format_waypoints, write_telemetry, write_timings, StageTimings, TelemetryRecord,
};
use crate::control::{pid_step, speed_target, DriveMode, PidState};
use crate::error::{Error, Result};
use crate::fusion::{camera_observations, fuse_frame, CameraModel, WeightContext};
use crate::geometry::Pose2;
use crate::localization::{Localizer, NavsatTransform};
use crate::mapping::{query_local_cones, update_cone_map, ConeMap};
use crate::perception::{
    cluster_cones, filter_near_ground, validate_clusters, ConeObservation, ConeTracker,
    DepthSmoother,
};
use crate::planning::{
    chain_boundaries, classify_boundaries, estimate_half_width, goal_point, lookahead_distance,
    midpoint_path, pure_pursuit_steer, PathPlan,
};
use crate::rng::{stream, SimRng};
use crate::sensors::log::{write_record, SensorRecord};
use crate::sensors::{simulate_camera, simulate_gnss, simulate_imu, simulate_lidar};
use crate::world::{
    generate_track, step_vehicle, Cone, ControlCommand, TrackLayout, TransformTree, VehicleState,
};

fn at<T>(tick: u64, stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Runtime {
        tick,
        stage,
        source: Box::new(e),
    })
}

fn micros(since: Instant) -> u64 {
    since.elapsed().as_micros() as u64
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameCounts {
    lidar: u32,
    camera: u32,
    fused: u32,
    two_source: u32,
}

/// JSON document written as `cone_map.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeMapExport {
    pub cones: Vec<Cone>,
}

pub struct RunOutput {
    pub layout: TrackLayout,
    pub telemetry: Vec<TelemetryRecord>,
    pub timings: Vec<StageTimings>,
    pub map: ConeMap,
    pub metrics: RunMetrics,
}

impl RunOutput {
    pub fn exported_map(&self) -> ConeMapExport {
        ConeMapExport {
            cones: self.map.export(),
        }
    }

    /// Writes `telemetry.csv`, `metrics.json`, `cone_map.json`,
    /// `track.json` and `timings.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_telemetry(
            std::fs::File::create(dir.join("telemetry.csv"))?,
            &self.telemetry,
        )?;
        write_timings(
            std::fs::File::create(dir.join("timings.csv"))?,
            &self.timings,
        )?;
        let json = |v: &dyn erased::Json| -> Result<String> { Ok(v.to_pretty()? + "\n") };
        std::fs::write(dir.join("metrics.json"), json(&self.metrics)?)?;
        std::fs::write(dir.join("cone_map.json"), json(&self.exported_map())?)?;
        std::fs::write(dir.join("track.json"), json(&self.layout)?)?;
        Ok(())
    }
}

mod erased {
    pub trait Json {
        fn to_pretty(&self) -> crate::error::Result<String>;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_pretty(&self) -> crate::error::Result<String> {
            Ok(serde_json::to_string_pretty(self)?)
        }
    }
}

/// The closed loop, one fixed tick per [`Simulation::step`]. Sensor
/// streams are decimated from the tick rate; all randomness comes from
/// per-sensor streams derived from the scenario seed.
pub struct Simulation {
    cfg: ScenarioConfig,
    layout: TrackLayout,
    tree: TransformTree,
    camera_model: CameraModel,
    truth: VehicleState,
    localizer: Localizer,
    tracker: ConeTracker,
    smoother: DepthSmoother,
    map: ConeMap,
    pid: PidState,
    command: ControlCommand,
    rng_imu: SimRng,
    rng_gnss: SimRng,
    rng_lidar: SimRng,
    rng_camera: SimRng,
    every_control: u64,
    every_gnss: u64,
    every_lidar: u64,
    every_camera: u64,
    tick: u64,
    laps: LapCounter,
    mode: DriveMode,
    invalid_plan_ticks: u64,
    half_width: f64,
    lidar_tracks: Vec<ConeObservation>,
    last_lidar_time: Option<f64>,
    last_perception_time: Option<f64>,
    plan: PathPlan,
    lookahead: f64,
    target_v: f64,
    counts: FrameCounts,
    telemetry: Vec<TelemetryRecord>,
    timings: Vec<StageTimings>,
    replay: Option<VecDeque<SensorRecord>>,
    sensor_log: Option<Box<dyn Write + Send>>,
    finished: bool,
}

impl Simulation {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = generate_track(&cfg.track, cfg.seed)?;
        let tree = TransformTree::default();
        let truth = VehicleState::at_pose(layout.start_pose);
        let localizer = Localizer::new(
            NavsatTransform::with_datum(cfg.datum),
            cfg.ekf.clone(),
            &cfg.noise,
            tree.base_to_gnss,
        );
        let camera_model =
            CameraModel::new(&cfg.camera, tree.base_to_lidar, cfg.lidar.mount_height);
        let mut smoother = DepthSmoother::new(cfg.camera.focal_px, cfg.depth.window);
        smoother.gate = cfg.depth.association_gate;
        let s = &cfg.schedule;
        let laps = LapCounter::new(&layout, truth.pose().translation());
        Ok(Self {
            every_control: s.every(s.control_hz),
            every_gnss: s.every(s.gnss_hz),
            every_lidar: s.every(s.lidar_hz),
            every_camera: s.every(s.camera_hz),
            rng_imu: stream(cfg.seed, "imu"),
            rng_gnss: stream(cfg.seed, "gnss"),
            rng_lidar: stream(cfg.seed, "lidar"),
            rng_camera: stream(cfg.seed, "camera"),
            tracker: ConeTracker::new(cfg.tracker),
            map: ConeMap::new(cfg.mapping),
            half_width: cfg.planning.half_width,
            layout,
            tree,
            camera_model,
            truth,
            localizer,
            smoother,
            pid: PidState::default(),
            command: ControlCommand::default(),
            tick: 0,
            laps,
            mode: if cfg.schedule.exploration_laps == 0 {
                DriveMode::PathFollowing
            } else {
                DriveMode::Exploration
            },
            invalid_plan_ticks: 0,
            lidar_tracks: Vec::new(),
            last_lidar_time: None,
            last_perception_time: None,
            plan: PathPlan::invalid(),
            lookahead: cfg.pursuit.l_min,
            target_v: 0.0,
            counts: FrameCounts::default(),
            telemetry: Vec::new(),
            timings: Vec::new(),
            replay: None,
            sensor_log: None,
            finished: false,
            cfg,
        })
    }

    /// Drives the pipeline from a recorded sensor log instead of the
    /// simulated sensors. The vehicle follows the recorded truth.
    pub fn with_replay(cfg: ScenarioConfig, records: Vec<SensorRecord>) -> Result<Self> {
        let mut sim = Self::new(cfg)?;
        sim.replay = Some(records.into());
        Ok(sim)
    }

    pub fn set_sensor_log(&mut self, out: Box<dyn Write + Send>) {
        self.sensor_log = Some(out);
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &TrackLayout {
        &self.layout
    }

    pub fn truth(&self) -> &VehicleState {
        &self.truth
    }

    pub fn map(&self) -> &ConeMap {
        &self.map
    }

    pub fn localizer(&self) -> &Localizer {
        &self.localizer
    }

    pub fn telemetry(&self) -> &[TelemetryRecord] {
        &self.telemetry
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn laps(&self) -> u32 {
        self.laps.laps()
    }

    pub fn mode(&self) -> DriveMode {
        self.mode
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    fn time(&self) -> f64 {
        self.tick as f64 * self.cfg.schedule.tick_dt
    }

    fn perception_dark(&self, t: f64) -> bool {
        self.cfg
            .sensors
            .perception_blackout_at
            .is_some_and(|b| t >= b)
    }

    fn synthesize(&mut self, t: f64) -> Result<SensorRecord> {
        let tick = self.tick;
        let truth = self.truth;
        let cfg = &self.cfg;
        let dark = self.perception_dark(t);
        let imu = Some(at(
            tick,
            "sensors",
            simulate_imu(&truth, &cfg.noise, t, &mut self.rng_imu),
        )?);
        let gnss = if cfg.sensors.gnss && tick.is_multiple_of(self.every_gnss) {
            let fix = simulate_gnss(
                &truth,
                &self.tree.base_to_gnss,
                &cfg.datum,
                &cfg.noise,
                t,
                &mut self.rng_gnss,
            );
            Some(at(tick, "sensors", fix)?)
        } else {
            None
        };
        let lidar = if cfg.sensors.lidar && !dark && tick.is_multiple_of(self.every_lidar) {
            let scan = simulate_lidar(
                &self.layout,
                &truth,
                &self.tree,
                &cfg.lidar,
                &cfg.noise,
                t,
                &mut self.rng_lidar,
            );
            Some(at(tick, "sensors", scan)?)
        } else {
            None
        };
        let camera = if cfg.sensors.camera && !dark && tick.is_multiple_of(self.every_camera) {
            let frame = simulate_camera(
                &self.layout,
                &truth,
                &cfg.camera,
                &cfg.noise,
                t,
                &mut self.rng_camera,
            );
            Some(at(tick, "sensors", frame)?)
        } else {
            None
        };
        Ok(SensorRecord {
            tick,
            time: t,
            truth,
            imu,
            gnss,
            lidar,
            camera,
        })
    }

    /// Advances one tick. Returns `false` once the run is over.
    pub fn step(&mut self) -> Result<bool> {
        if self.finished {
            return Ok(false);
        }
        let tick = self.tick;
        let t = self.time();
        let mut timing = StageTimings {
            tick,
            ..Default::default()
        };

        let clock = Instant::now();
        let record = match self.replay.as_mut() {
            Some(queue) => match queue.pop_front() {
                Some(r) => {
                    self.truth = r.truth;
                    r
                }
                None => {
                    self.finished = true;
                    return Ok(false);
                }
            },
            None => self.synthesize(t)?,
        };
        if let Some(log) = self.sensor_log.as_mut() {
            at(tick, "sensors", write_record(log, &record))?;
        }
        timing.sensors_us = micros(clock);

        let clock = Instant::now();
        if let Some(imu) = &record.imu {
            at(tick, "localization", self.localizer.on_imu(imu))?;
        }
        if let Some(fix) = &record.gnss {
            at(tick, "localization", self.localizer.on_gnss(fix))?;
        }
        timing.localization_us = micros(clock);

        let ekf = self.localizer.state().cloned();
        if let Some(ekf) = &ekf {
            let pose = ekf.pose();
            self.perceive(&record, pose, t, &mut timing);
            if tick.is_multiple_of(self.every_control) {
                let clock = Instant::now();
                at(tick, "control", self.control(pose, ekf.mean[3], t))?;
                timing.control_us = micros(clock);
            }
        }

        let (lateral, completed) = self.laps.update(self.truth.pose().translation());
        if completed && self.laps.laps() >= self.cfg.schedule.exploration_laps {
            self.mode = DriveMode::PathFollowing;
            if self.plan.valid {
                self.target_v = speed_target(self.mode, &self.plan, &self.cfg.speed);
            }
        }
        self.record(&record, ekf.as_ref(), lateral);
        self.timings.push(timing);

        if self.replay.is_none() {
            self.truth = at(
                tick,
                "vehicle",
                step_vehicle(
                    &self.truth,
                    &self.cfg.vehicle,
                    &self.command,
                    self.cfg.schedule.tick_dt,
                ),
            )?;
        }
        self.tick += 1;

        let limits = &self.cfg.limits;
        if limits.laps.is_some_and(|n| self.laps.laps() >= n)
            || limits.ticks.is_some_and(|n| self.tick >= n)
            || self.time() >= limits.max_duration
        {
            self.finished = true;
        }
        Ok(!self.finished)
    }

    fn perceive(&mut self, record: &SensorRecord, pose: Pose2, t: f64, timing: &mut StageTimings) {
        let clock = Instant::now();
        if let Some(scan) = &record.lidar {
            let params = self.cfg.ground.params_for(scan);
            let near = filter_near_ground(scan, &params);
            let pts: Vec<_> = near.iter().map(|p| p.xy()).collect();
            let clusters = cluster_cones(&pts, &self.cfg.cluster);
            let sensor = pose.compose(self.tree.base_to_lidar);
            let obs: Vec<ConeObservation> =
                validate_clusters(&pts, &clusters, &self.cfg.validation)
                    .into_iter()
                    .map(|o| ConeObservation {
                        position: sensor.transform_point(o.position),
                        ..o
                    })
                    .collect();
            self.lidar_tracks = self.tracker.update(&obs);
            self.last_lidar_time = Some(t);
        } else if self
            .last_lidar_time
            .is_some_and(|last| t - last > 2.0 / self.cfg.schedule.lidar_hz)
        {
            self.lidar_tracks.clear();
            self.last_lidar_time = None;
        }
        let camera_obs = match &record.camera {
            Some(frame) => {
                let refined = self
                    .smoother
                    .process(frame, pose.compose(self.cfg.camera.mount));
                camera_observations(&refined, &self.camera_model)
            }
            None => Vec::new(),
        };
        timing.perception_us = micros(clock);

        if record.lidar.is_none() && record.camera.is_none() {
            return;
        }
        self.last_perception_time = Some(t);
        let clock = Instant::now();
        let lidar_base: Vec<ConeObservation> = self
            .lidar_tracks
            .iter()
            .map(|o| ConeObservation {
                position: pose.inverse_transform_point(o.position),
                ..*o
            })
            .collect();
        let ctx = WeightContext {
            ambient_light: self.cfg.environment.ambient_light,
            distance: 0.0,
            consistency: self.cfg.environment.history_consistency,
        };
        let fused = fuse_frame(
            &lidar_base,
            &camera_obs,
            &self.camera_model,
            &ctx,
            &self.cfg.fusion,
        );
        self.counts = FrameCounts {
            lidar: lidar_base.len() as u32,
            camera: camera_obs.len() as u32,
            fused: fused.len() as u32,
            two_source: fused.iter().filter(|f| f.sources.is_fused()).count() as u32,
        };
        timing.fusion_us = micros(clock);

        let clock = Instant::now();
        update_cone_map(&mut self.map, &fused, pose);
        timing.mapping_us = micros(clock);
    }

    fn control(&mut self, pose: Pose2, v_est: f64, t: f64) -> Result<()> {
        let planning = &self.cfg.planning;
        let blind = self
            .last_perception_time
            .is_none_or(|last| t - last > self.cfg.schedule.perception_timeout);
        let local = query_local_cones(&self.map, pose, planning.horizon);
        let (left, right) = if planning.use_chaining {
            chain_boundaries(&local, planning)
        } else {
            classify_boundaries(&local, planning)
        };
        if let Some(hw) = estimate_half_width(&left, &right, planning) {
            self.half_width = hw;
        }
        self.plan = if blind {
            PathPlan::invalid()
        } else {
            midpoint_path(&left, &right, self.half_width, planning)
        };
        self.lookahead = lookahead_distance(v_est.max(0.0), &self.cfg.pursuit);
        let dt = self.every_control as f64 * self.cfg.schedule.tick_dt;
        if self.plan.valid {
            self.invalid_plan_ticks = 0;
            self.command.steer = pure_pursuit_steer(&self.plan, &self.cfg.vehicle, self.lookahead)?;
            self.target_v = speed_target(self.mode, &self.plan, &self.cfg.speed);
        } else {
            self.invalid_plan_ticks += self.every_control;
            if self.invalid_plan_ticks > self.cfg.schedule.stop_patience {
                self.target_v = 0.0;
            }
        }
        self.command.accel = pid_step(
            &mut self.pid,
            &self.cfg.pid,
            self.target_v,
            v_est.max(0.0),
            dt,
        )?;
        Ok(())
    }

    fn record(
        &mut self,
        record: &SensorRecord,
        ekf: Option<&crate::localization::EkfState>,
        lateral: f64,
    ) {
        let truth = record.truth;
        let mean = ekf.map(|e| e.mean);
        let cov = ekf.map(|e| e.covariance_diagonal());
        let m = |i: usize| mean.map(|m| m[i]);
        let c = |i: usize| cov.map(|c| c[i]);
        let gnss = record.gnss.and(self.localizer.last_gnss_local);
        self.telemetry.push(TelemetryRecord {
            tick: record.tick,
            time: record.time,
            truth_x: truth.x,
            truth_y: truth.y,
            truth_yaw: truth.yaw,
            truth_v: truth.v,
            ekf_x: m(0),
            ekf_y: m(1),
            ekf_yaw: m(2),
            ekf_v: m(3),
            ekf_yaw_rate: m(4),
            cov_x: c(0),
            cov_y: c(1),
            cov_yaw: c(2),
            cov_v: c(3),
            cov_yaw_rate: c(4),
            imu_update: record.imu.is_some() as u8,
            gnss_x: gnss.map(|g| g.x),
            gnss_y: gnss.map(|g| g.y),
            lidar_cones: self.counts.lidar,
            camera_cones: self.counts.camera,
            fused_cones: self.counts.fused,
            two_source_cones: self.counts.two_source,
            mapped_cones: self.map.confirmed().count() as u32,
            mode: match self.mode {
                DriveMode::Exploration => "exploration".into(),
                DriveMode::PathFollowing => "path_following".into(),
            },
            plan_valid: self.plan.valid as u8,
            lookahead: self.lookahead,
            steer: self.command.steer,
            target_v: self.target_v,
            measured_v: m(3).unwrap_or(0.0),
            accel_cmd: self.command.accel,
            cross_track: lateral.abs(),
            lap: self.laps.laps(),
            waypoints: format_waypoints(&self.plan.waypoints),
        });
    }

    /// Goal point of the current plan in base_link, if the plan is valid.
    pub fn goal(&self) -> Option<crate::geometry::Vec2> {
        goal_point(&self.plan, self.lookahead).ok()
    }

    pub fn current_metrics(&self) -> Result<RunMetrics> {
        compute_metrics(
            &self.telemetry,
            &self.layout,
            &self.map.export(),
            &self.cfg.metrics,
        )
    }

    pub fn finish(mut self) -> Result<RunOutput> {
        if let Some(log) = self.sensor_log.as_mut() {
            log.flush()?;
        }
        let metrics = self.current_metrics()?;
        Ok(RunOutput {
            layout: self.layout,
            telemetry: self.telemetry,
            timings: self.timings,
            map: self.map,
            metrics,
        })
    }
}

pub fn run_scenario(cfg: ScenarioConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(cfg)?;
    while sim.step()? {}
    sim.finish()
}
