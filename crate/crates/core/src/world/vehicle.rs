use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{normalize_angle, Pose2};

/// Rear-axle referenced kinematic state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub v: f64,
    pub yaw_rate: f64,
    /// Longitudinal acceleration actually realised over the last step.
    pub accel: f64,
}

impl VehicleState {
    pub fn at_pose(pose: Pose2) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            yaw: pose.yaw,
            ..Default::default()
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleGeometry {
    pub wheelbase: f64,
    pub max_steer: f64,
    pub max_accel: f64,
    pub max_decel: f64,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        Self {
            wheelbase: 1.53,
            max_steer: 0.45,
            max_accel: 2.0,
            max_decel: 4.0,
        }
    }
}

impl VehicleGeometry {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.wheelbase > 0.0 && self.wheelbase.is_finite()) {
            errors.push(format!("{prefix}.wheelbase: must be > 0"));
        }
        if !(self.max_steer > 0.0 && self.max_steer < std::f64::consts::FRAC_PI_2) {
            errors.push(format!("{prefix}.max_steer: must lie in (0, pi/2)"));
        }
        if !(self.max_accel > 0.0) {
            errors.push(format!("{prefix}.max_accel: must be > 0"));
        }
        if !(self.max_decel > 0.0) {
            errors.push(format!("{prefix}.max_decel: must be > 0"));
        }
    }
}

/// Steering angle (rad) and longitudinal acceleration (m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub steer: f64,
    pub accel: f64,
}

/// One explicit-Euler step of the kinematic bicycle. Commands are clamped to
/// the actuator limits and the speed never goes negative.
pub fn step_vehicle(
    state: &VehicleState,
    geom: &VehicleGeometry,
    cmd: &ControlCommand,
    dt: f64,
) -> Result<VehicleState> {
    for (v, what) in [
        (state.x, "state.x"),
        (state.y, "state.y"),
        (state.yaw, "state.yaw"),
        (state.v, "state.v"),
        (cmd.steer, "cmd.steer"),
        (cmd.accel, "cmd.accel"),
        (dt, "dt"),
    ] {
        ensure_finite(v, what)?;
    }
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(Error::InvalidArgument(format!("dt {dt} outside (0, 0.1]")));
    }
    let steer = cmd.steer.clamp(-geom.max_steer, geom.max_steer);
    let accel = cmd.accel.clamp(-geom.max_decel, geom.max_accel);
    let v = state.v.max(0.0);
    let yaw_rate = v / geom.wheelbase * steer.tan();
    let v_next = (v + accel * dt).max(0.0);
    Ok(VehicleState {
        x: state.x + v * state.yaw.cos() * dt,
        y: state.y + v * state.yaw.sin() * dt,
        yaw: normalize_angle(state.yaw + yaw_rate * dt),
        v: v_next,
        yaw_rate,
        accel: (v_next - v) / dt,
    })
}
