//! Persistent cone map in the map frame, built by radius association of
//! fused detections.

use serde::{Deserialize, Serialize};

use crate::fusion::{FusedCone, SourceSet};
use crate::geometry::{Pose2, Vec2};
use crate::world::{Cone, ConeColor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MappingParams {
    pub merge_radius: f64,
    /// Fused cones below this confidence may refine existing entries but
    /// never create new ones.
    pub min_insert_confidence: f64,
    /// Observations needed before an entry is exported or scored.
    pub min_export_count: u32,
    /// Observations needed before an entry is handed to the planner.
    pub min_query_count: u32,
    /// LiDAR-backed observations needed before an entry is exported or
    /// handed to the planner.
    pub min_lidar_hits: u32,
}

impl Default for MappingParams {
    fn default() -> Self {
        Self {
            merge_radius: 1.0,
            min_insert_confidence: 0.25,
            min_export_count: 3,
            min_query_count: 2,
            min_lidar_hits: 1,
        }
    }
}

impl MappingParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.merge_radius > 0.0) {
            errors.push(format!("{prefix}.merge_radius must be positive"));
        }
        if !(0.0..=1.0).contains(&self.min_insert_confidence) {
            errors.push(format!("{prefix}.min_insert_confidence must be in [0, 1]"));
        }
        if self.min_export_count == 0 {
            errors.push(format!("{prefix}.min_export_count must be at least 1"));
        }
        if self.min_query_count == 0 {
            errors.push(format!("{prefix}.min_query_count must be at least 1"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCone {
    pub position: Vec2,
    pub color: ConeColor,
    pub observation_count: u32,
    pub confidence: f64,
    /// Accumulated confidence per colour code.
    pub color_scores: [f64; 5],
    #[serde(default)]
    pub lidar_hits: u32,
}

impl MapCone {
    fn new(position: Vec2, cone: &FusedCone) -> Self {
        let mut color_scores = [0.0; 5];
        color_scores[cone.color.index()] += cone.confidence;
        let lidar_hits = cone.sources.lidar as u32;
        Self {
            position,
            color: cone.color,
            observation_count: 1,
            confidence: cone.confidence,
            color_scores,
            lidar_hits,
        }
    }

    fn absorb(&mut self, position: Vec2, cone: &FusedCone) {
        let n = self.observation_count as f64;
        self.position = self.position.lerp(position, 1.0 / (n + 1.0));
        self.confidence += (cone.confidence - self.confidence) / (n + 1.0);
        self.observation_count += 1;
        self.lidar_hits += cone.sources.lidar as u32;
        self.color_scores[cone.color.index()] += cone.confidence;
        self.refresh_color();
    }

    fn merge(&mut self, other: &MapCone) {
        let (a, b) = (
            self.observation_count as f64,
            other.observation_count as f64,
        );
        self.position = self.position.lerp(other.position, b / (a + b));
        self.confidence = (self.confidence * a + other.confidence * b) / (a + b);
        self.observation_count += other.observation_count;
        self.lidar_hits += other.lidar_hits;
        for (s, o) in self.color_scores.iter_mut().zip(other.color_scores) {
            *s += o;
        }
        self.refresh_color();
    }

    /// Known colour with the largest accumulated confidence; unknown only
    /// if no known colour was ever reported.
    fn refresh_color(&mut self) {
        let mut best = ConeColor::Unknown;
        let mut best_score = 0.0;
        for c in ConeColor::ALL.into_iter().filter(|c| c.is_known()) {
            if self.color_scores[c.index()] > best_score {
                best = c;
                best_score = self.color_scores[c.index()];
            }
        }
        self.color = best;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConeMap {
    pub params: MappingParams,
    pub cones: Vec<MapCone>,
}

impl ConeMap {
    pub fn new(params: MappingParams) -> Self {
        Self {
            params,
            cones: Vec::new(),
        }
    }

    fn nearest(&self, p: Vec2, skip: Option<usize>) -> Option<(usize, f64)> {
        self.cones
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(i, c)| (i, c.position.dist(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Entries seen often enough to be reported.
    pub fn confirmed(&self) -> impl Iterator<Item = &MapCone> {
        let p = self.params;
        self.cones.iter().filter(move |c| {
            c.observation_count >= p.min_export_count && c.lidar_hits >= p.min_lidar_hits
        })
    }

    /// Confirmed entries in the track-layout cone schema.
    pub fn export(&self) -> Vec<Cone> {
        self.confirmed()
            .map(|c| Cone::new(c.position, c.color))
            .collect()
    }

    pub fn check_invariants(&self) -> bool {
        self.cones.iter().all(|c| c.observation_count >= 1)
            && self.cones.iter().enumerate().all(|(i, a)| {
                self.cones[i + 1..]
                    .iter()
                    .all(|b| a.position.dist(b.position) > self.params.merge_radius)
            })
    }
}

/// Folds one frame of base_link detections into the map using `ego` as
/// the map←base_link transform.
pub fn update_cone_map(map: &mut ConeMap, fused: &[FusedCone], ego: Pose2) {
    let radius = map.params.merge_radius;
    for cone in fused {
        let p = ego.transform_point(cone.position);
        if !p.is_finite() {
            continue;
        }
        match map.nearest(p, None) {
            Some((mut i, d)) if d <= radius => {
                map.cones[i].absorb(p, cone);
                // the moved entry may now crowd a neighbour
                while let Some((j, d)) = map.nearest(map.cones[i].position, Some(i)) {
                    if d > radius {
                        break;
                    }
                    let other = map.cones.remove(j);
                    if j < i {
                        i -= 1;
                    }
                    map.cones[i].merge(&other);
                }
            }
            _ if cone.confidence >= map.params.min_insert_confidence => {
                map.cones.push(MapCone::new(p, cone))
            }
            _ => {}
        }
    }
}

/// Map entries within `radius` of the ego position, in base_link, nearest
/// first.
pub fn query_local_cones(map: &ConeMap, ego: Pose2, radius: f64) -> Vec<FusedCone> {
    let mut out: Vec<(f64, FusedCone)> = map
        .cones
        .iter()
        .filter(|c| {
            c.observation_count >= map.params.min_query_count
                && c.lidar_hits >= map.params.min_lidar_hits
        })
        .filter_map(|c| {
            let d = c.position.dist(ego.translation());
            (d <= radius).then(|| {
                (
                    d,
                    FusedCone {
                        position: ego.inverse_transform_point(c.position),
                        color: c.color,
                        confidence: c.confidence,
                        sources: SourceSet::default(),
                        weights: None,
                    },
                )
            })
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.into_iter().map(|(_, c)| c).collect()
}
