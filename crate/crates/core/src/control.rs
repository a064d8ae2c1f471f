//! Longitudinal speed control and the speed schedule.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::planning::PathPlan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub integral_limit: f64,
    pub output_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 1.2,
            ki: 0.3,
            kd: 0.05,
            integral_limit: 0.2,
            output_limit: 2.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v >= 0.0 && v.is_finite()) {
                errors.push(format!("{prefix}.{name} must be non-negative"));
            }
        }
        for (name, v) in [
            ("integral_limit", self.integral_limit),
            ("output_limit", self.output_limit),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("{prefix}.{name} must be positive"));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
    pub prev_timestamp: f64,
}

/// One PID update; returns the acceleration command.
pub fn pid_step(
    state: &mut PidState,
    gains: &PidGains,
    target_v: f64,
    measured_v: f64,
    dt: f64,
) -> Result<f64> {
    ensure_finite(target_v, "target_v")?;
    ensure_finite(measured_v, "measured_v")?;
    ensure_finite(dt, "dt")?;
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "pid dt {dt} outside (0, 0.5]"
        )));
    }
    if target_v < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "target speed {target_v} is negative"
        )));
    }
    let error = target_v - measured_v;
    state.integral =
        (state.integral + error * dt).clamp(-gains.integral_limit, gains.integral_limit);
    let derivative = state.prev_error.map_or(0.0, |prev| (error - prev) / dt);
    state.prev_error = Some(error);
    state.prev_timestamp += dt;
    let u = gains.kp * error + gains.ki * state.integral + gains.kd * derivative;
    Ok(u.clamp(-gains.output_limit, gains.output_limit))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveMode {
    Exploration,
    PathFollowing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeedParams {
    pub exploration: f64,
    pub follow_max: f64,
    pub follow_min: f64,
    /// Plan curvature at which path following drops to `follow_min`.
    pub curvature_full_slow: f64,
}

impl Default for SpeedParams {
    fn default() -> Self {
        Self {
            exploration: 1.5,
            follow_max: 1.0,
            follow_min: 0.5,
            curvature_full_slow: 1.0 / 6.0,
        }
    }
}

impl SpeedParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.exploration > 0.0) {
            errors.push(format!("{prefix}.exploration must be positive"));
        }
        if !(self.follow_min > 0.0) {
            errors.push(format!("{prefix}.follow_min must be positive"));
        }
        if !(self.follow_max >= self.follow_min) {
            errors.push(format!("{prefix}.follow_max must be at least follow_min"));
        }
        if !(self.curvature_full_slow > 0.0) {
            errors.push(format!("{prefix}.curvature_full_slow must be positive"));
        }
    }
}

/// Speed target for the current mode; zero on an invalid plan.
pub fn speed_target(mode: DriveMode, plan: &PathPlan, params: &SpeedParams) -> f64 {
    if !plan.valid {
        return 0.0;
    }
    match mode {
        DriveMode::Exploration => params.exploration,
        DriveMode::PathFollowing => {
            let k = (plan.max_curvature() / params.curvature_full_slow).clamp(0.0, 1.0);
            params.follow_max - (params.follow_max - params.follow_min) * k
        }
    }
}
