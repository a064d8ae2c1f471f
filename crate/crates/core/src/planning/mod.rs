//! Boundary estimation, midpoint path and Pure Pursuit steering. All
//! inputs and outputs are in base_link with the rear axle at the origin.

mod boundaries;
mod chaining;
mod pursuit;

pub use boundaries::{
    classify_boundaries, estimate_half_width, midpoint_path, PathPlan, PlanningParams,
};
pub use chaining::chain_boundaries;
pub use pursuit::{
    goal_point, lookahead_distance, pure_pursuit_steer, steering_for_alpha, PursuitParams,
};
