use serde::{Deserialize, Serialize};

use super::PathPlan;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::world::VehicleGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PursuitParams {
    pub k_ld: f64,
    pub l_fc: f64,
    pub l_min: f64,
    pub l_max: f64,
}

impl Default for PursuitParams {
    fn default() -> Self {
        Self {
            k_ld: 0.5,
            l_fc: 2.5,
            l_min: 2.5,
            l_max: 5.0,
        }
    }
}

impl PursuitParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.k_ld >= 0.0) {
            errors.push(format!("{prefix}.k_ld must be non-negative"));
        }
        if !(self.l_min > 0.0) {
            errors.push(format!("{prefix}.l_min must be positive"));
        }
        if !(self.l_max >= self.l_min) {
            errors.push(format!("{prefix}.l_max must be at least l_min"));
        }
        if !(self.l_fc >= self.l_min) {
            errors.push(format!("{prefix}.l_fc must be at least l_min"));
        }
    }
}

/// `clamp(k_ld·v + l_fc, l_min, l_max)`.
pub fn lookahead_distance(v: f64, params: &PursuitParams) -> f64 {
    (params.k_ld * v.max(0.0) + params.l_fc).clamp(params.l_min, params.l_max)
}

/// `atan(2L·sin α / L_d)`, unclamped.
pub fn steering_for_alpha(alpha: f64, wheelbase: f64, lookahead: f64) -> f64 {
    (2.0 * wheelbase * alpha.sin() / lookahead).atan()
}

/// Point at arc length `lookahead` along rear axle → waypoints, or the last
/// waypoint when the path is shorter.
pub fn goal_point(plan: &PathPlan, lookahead: f64) -> Result<Vec2> {
    if !plan.valid || plan.waypoints.is_empty() {
        return Err(Error::InvalidPlan);
    }
    let mut prev = Vec2::ZERO;
    let mut walked = 0.0;
    for w in &plan.waypoints {
        let seg = prev.dist(*w);
        if walked + seg >= lookahead && seg > 0.0 {
            return Ok(prev.lerp(*w, (lookahead - walked) / seg));
        }
        walked += seg;
        prev = *w;
    }
    Ok(prev)
}

/// Steering angle toward the goal point, clamped to the steering limit.
pub fn pure_pursuit_steer(
    plan: &PathPlan,
    geometry: &VehicleGeometry,
    lookahead: f64,
) -> Result<f64> {
    let goal = goal_point(plan, lookahead)?;
    let alpha = goal.y.atan2(goal.x);
    Ok(steering_for_alpha(alpha, geometry.wheelbase, lookahead)
        .clamp(-geometry.max_steer, geometry.max_steer))
}
