use serde::{Deserialize, Serialize};

use super::{ConeObservation, Source};
use crate::geometry::Vec2;
use crate::world::ConeColor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationParams {
    pub min_points: usize,
    pub max_points: usize,
    /// Upper bound on the largest pairwise distance inside a cluster.
    pub max_extent: f64,
    pub nominal_diameter: f64,
    /// Point count at which the density score reaches 1.
    pub saturation_count: usize,
}

impl Default for ValidationParams {
    fn default() -> Self {
        Self {
            min_points: 5,
            max_points: 500,
            max_extent: 0.5,
            nominal_diameter: 0.3,
            saturation_count: 20,
        }
    }
}

impl ValidationParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if self.min_points == 0 {
            errors.push(format!("{prefix}.min_points must be positive"));
        }
        if self.max_points < self.min_points {
            errors.push(format!("{prefix}.max_points must be at least min_points"));
        }
        if !(self.nominal_diameter > 0.0) {
            errors.push(format!("{prefix}.nominal_diameter must be positive"));
        }
        if !(self.max_extent > self.nominal_diameter) {
            errors.push(format!("{prefix}.max_extent must exceed nominal_diameter"));
        }
        if self.saturation_count == 0 {
            errors.push(format!("{prefix}.saturation_count must be positive"));
        }
    }
}

fn extent(points: &[Vec2]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(a.dist(*b));
        }
    }
    best
}

fn confidence(count: usize, ext: f64, params: &ValidationParams) -> f64 {
    let density = (count as f64 / params.saturation_count as f64).min(1.0);
    let size = if ext <= params.nominal_diameter {
        1.0
    } else {
        let span = params.max_extent - params.nominal_diameter;
        (1.0 - (ext - params.nominal_diameter) / span).max(0.0)
    };
    density * size
}

/// Turns clusters (index lists into `points`) into cone candidates at the
/// cluster centroid. Clusters outside the point-count or extent bounds are
/// rejected.
pub fn validate_clusters(
    points: &[Vec2],
    clusters: &[Vec<usize>],
    params: &ValidationParams,
) -> Vec<ConeObservation> {
    let mut out = Vec::new();
    for cluster in clusters {
        let n = cluster.len();
        if n < params.min_points || n > params.max_points {
            continue;
        }
        let pts: Vec<Vec2> = cluster.iter().map(|&i| points[i]).collect();
        let ext = extent(&pts);
        if ext > params.max_extent {
            continue;
        }
        let sum = pts.iter().fold(Vec2::ZERO, |acc, p| acc + *p);
        out.push(ConeObservation {
            position: sum * (1.0 / n as f64),
            color: ConeColor::Unknown,
            confidence: confidence(n, ext, params),
            source: Source::Lidar,
            point_count: n,
        });
    }
    out
}
