//! Scenario configuration, the fixed-step closed loop, telemetry and
//! scoring.

mod config;
mod metrics;
mod sim;
mod telemetry;

pub use config::{
    DepthConfig, EnvironmentConfig, GroundConfig, MetricsConfig, RunLimits, ScenarioConfig,
    ScheduleConfig, SensorToggles,
};
pub use metrics::{compute_metrics, match_cones, LapCounter, RunMetrics};
pub use sim::{run_scenario, ConeMapExport, RunOutput, Simulation};
pub use telemetry::{
    format_waypoints, read_telemetry, write_telemetry, write_timings, StageTimings, TelemetryRecord,
};
