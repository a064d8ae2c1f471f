//! LiDAR cone extraction and camera depth refinement.
//!
//! LiDAR path: near-ground band filter, DBSCAN on the ground-plane
//! projection, size validation with density-based confidence, then
//! multi-frame tracking to suppress one-off clusters. Camera path: a
//! per-cone sliding window of depths blended with the box-height estimate.

mod dbscan;
mod depth;
mod ground;
mod tracker;
mod validate;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::world::ConeColor;

pub use dbscan::{cluster_cones, dbscan_labels, ClusterParams};
pub use depth::{estimate_depth, DepthEstimate, DepthGeometry, DepthSmoother, RefinedDetection};
pub use ground::{estimate_ground_height, filter_near_ground, GroundFilterParams};
pub use tracker::{track_cones, ConeTrack, ConeTracker, TrackerParams};
pub use validate::{validate_clusters, ValidationParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Lidar,
    Camera,
    Fused,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeObservation {
    pub position: Vec2,
    pub color: ConeColor,
    pub confidence: f64,
    pub source: Source,
    pub point_count: usize,
}
