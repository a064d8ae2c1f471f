//! LiDAR–camera association and confidence-weighted position fusion.
//!
//! Everything here is a pure function of its inputs. Positions are in
//! base_link; bearings and depths for gating are measured in the camera
//! frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose2, Vec2};
use crate::perception::{ConeObservation, RefinedDetection, Source};
use crate::sensors::{CameraConfig, LidarPoint};
use crate::world::ConeColor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub focal_px: f64,
    pub image_width_px: f64,
    pub image_height_px: f64,
    pub base_to_camera: Pose2,
    pub base_to_lidar: Pose2,
    pub camera_height: f64,
    pub lidar_height: f64,
}

impl CameraModel {
    pub fn new(camera: &CameraConfig, base_to_lidar: Pose2, lidar_height: f64) -> Self {
        Self {
            focal_px: camera.focal_px,
            image_width_px: camera.image_width_px,
            image_height_px: camera.image_height_px,
            base_to_camera: camera.mount,
            base_to_lidar,
            camera_height: camera.mount_height,
            lidar_height,
        }
    }

    pub fn lidar_to_camera(&self) -> Pose2 {
        self.base_to_camera.inverse().compose(self.base_to_lidar)
    }

    /// Bearing (left positive) and depth along the optical axis of a
    /// base_link point.
    pub fn bearing_depth(&self, p: Vec2) -> (f64, f64) {
        let c = self.base_to_camera.inverse_transform_point(p);
        (c.y.atan2(c.x), c.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

/// Pinhole projection of lidar_link points. `u` grows to the right and `v`
/// downwards, so a point left of the optical axis lands left of centre.
/// Points behind the camera or outside the image give `None`.
pub fn project_to_image(points: &[LidarPoint], model: &CameraModel) -> Vec<Option<Pixel>> {
    let to_cam = model.lidar_to_camera();
    let (cx, cy) = (model.image_width_px / 2.0, model.image_height_px / 2.0);
    points
        .iter()
        .map(|p| {
            let c = to_cam.transform_point(p.xy());
            let z = p.z + model.lidar_height - model.camera_height;
            if !(c.x > 0.0) {
                return None;
            }
            let u = cx - model.focal_px * c.y / c.x;
            let v = cy - model.focal_px * z / c.x;
            let inside = (0.0..=model.image_width_px).contains(&u)
                && (0.0..=model.image_height_px).contains(&v);
            inside.then_some(Pixel { u, v })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DepthCorrection {
    pub a: f64,
    pub b: f64,
}

impl Default for DepthCorrection {
    fn default() -> Self {
        Self { a: 1.0, b: 0.0 }
    }
}

impl DepthCorrection {
    pub fn apply(&self, depth: f64) -> f64 {
        self.a * depth + self.b
    }

    /// Corrects the range of `p` as seen from a sensor at `sensor` (both in
    /// the same frame), keeping the bearing.
    pub fn apply_from(&self, sensor: Pose2, p: Vec2) -> Vec2 {
        let local = sensor.inverse_transform_point(p);
        let r = local.norm();
        if r <= 0.0 {
            return p;
        }
        sensor.transform_point(local * (self.apply(r) / r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionParams {
    pub bearing_gate_deg: f64,
    pub depth_gate: f64,
    pub w_angle: f64,
    pub w_depth: f64,
    pub w_confidence: f64,
    pub agreement_radius: f64,
    pub agreement_bonus: f64,
    pub unmatched_penalty: f64,
    pub light_gain: f64,
    pub distance_gain: f64,
    pub crossover_distance: f64,
    pub min_weight: f64,
    pub lidar_correction: DepthCorrection,
    pub camera_correction: DepthCorrection,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            bearing_gate_deg: 3.0,
            depth_gate: 1.5,
            w_angle: 1.0 / 3f64.to_radians(),
            w_depth: 1.0 / 1.5,
            w_confidence: 0.1,
            agreement_radius: 0.3,
            agreement_bonus: 0.1,
            unmatched_penalty: 0.6,
            light_gain: 10.0,
            distance_gain: 1.0,
            crossover_distance: 10.0,
            min_weight: 1e-3,
            lidar_correction: DepthCorrection::default(),
            camera_correction: DepthCorrection::default(),
        }
    }
}

impl FusionParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        for (name, v) in [
            ("bearing_gate_deg", self.bearing_gate_deg),
            ("depth_gate", self.depth_gate),
        ] {
            if !(v > 0.0) {
                errors.push(format!("{prefix}.{name} must be positive"));
            }
        }
        for (name, v) in [
            ("w_angle", self.w_angle),
            ("w_depth", self.w_depth),
            ("w_confidence", self.w_confidence),
        ] {
            if !(v >= 0.0) {
                errors.push(format!("{prefix}.{name} must be non-negative"));
            }
        }
        if !(self.unmatched_penalty > 0.0 && self.unmatched_penalty < 1.0) {
            errors.push(format!("{prefix}.unmatched_penalty must be in (0, 1)"));
        }
        if !(self.min_weight > 0.0 && self.min_weight < 0.5) {
            errors.push(format!("{prefix}.min_weight must be in (0, 0.5)"));
        }
        for (name, c) in [
            ("lidar_correction", self.lidar_correction),
            ("camera_correction", self.camera_correction),
        ] {
            if !(c.a > 0.0 && c.b.is_finite()) {
                errors.push(format!("{prefix}.{name}.a must be positive"));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionMatch {
    pub lidar_index: usize,
    pub camera_index: usize,
    pub lidar_obs: ConeObservation,
    pub camera_det: ConeObservation,
    /// Angular plus depth mismatch, always non-negative.
    pub distance_score: f64,
    /// Ranking cost: `distance_score` minus the confidence reward.
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub matches: Vec<FusionMatch>,
    pub unmatched_lidar: Vec<usize>,
    pub unmatched_camera: Vec<usize>,
}

/// Candidate pairs passing both gates, as `(cost, distance_score, li, ci)`.
fn gated_pairs(
    lidar: &[ConeObservation],
    camera: &[ConeObservation],
    model: &CameraModel,
    params: &FusionParams,
) -> Vec<(f64, f64, usize, usize)> {
    let gate = params.bearing_gate_deg.to_radians();
    let cam: Vec<(f64, f64)> = camera
        .iter()
        .map(|c| model.bearing_depth(c.position))
        .collect();
    let mut pairs = Vec::new();
    for (li, l) in lidar.iter().enumerate() {
        let (lb, ld) = model.bearing_depth(l.position);
        if ld <= 0.0 {
            continue;
        }
        for (ci, c) in camera.iter().enumerate() {
            let (cb, cd) = cam[ci];
            let db = crate::geometry::normalize_angle(lb - cb).abs();
            let dd = (ld - cd).abs();
            if db > gate || dd > params.depth_gate {
                continue;
            }
            let score = params.w_angle * db + params.w_depth * dd;
            let cost = score - params.w_confidence * (c.confidence + l.confidence);
            pairs.push((cost, score, li, ci));
        }
    }
    pairs
}

/// Greedy gated assignment: repeatedly takes the cheapest remaining pair.
pub fn associate(
    lidar: &[ConeObservation],
    camera: &[ConeObservation],
    model: &CameraModel,
    params: &FusionParams,
) -> Association {
    let mut pairs = gated_pairs(lidar, camera, model, params);
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    let mut lidar_used = vec![false; lidar.len()];
    let mut camera_used = vec![false; camera.len()];
    let mut matches = Vec::new();
    for (cost, score, li, ci) in pairs {
        if lidar_used[li] || camera_used[ci] {
            continue;
        }
        lidar_used[li] = true;
        camera_used[ci] = true;
        matches.push(FusionMatch {
            lidar_index: li,
            camera_index: ci,
            lidar_obs: lidar[li],
            camera_det: camera[ci],
            distance_score: score,
            cost,
        });
    }
    matches.sort_by_key(|m| m.lidar_index);
    Association {
        matches,
        unmatched_lidar: (0..lidar.len()).filter(|&i| !lidar_used[i]).collect(),
        unmatched_camera: (0..camera.len()).filter(|&i| !camera_used[i]).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceSet {
    pub lidar: bool,
    pub camera: bool,
}

impl SourceSet {
    pub fn is_fused(self) -> bool {
        self.lidar && self.camera
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusedCone {
    pub position: Vec2,
    pub color: ConeColor,
    pub confidence: f64,
    pub sources: SourceSet,
    /// `(w_camera, w_lidar)` actually used, for fused cones.
    pub weights: Option<(f64, f64)>,
}

impl FusedCone {
    pub fn observation(&self) -> ConeObservation {
        ConeObservation {
            position: self.position,
            color: self.color,
            confidence: self.confidence,
            source: match (self.sources.lidar, self.sources.camera) {
                (true, true) => Source::Fused,
                (false, true) => Source::Camera,
                _ => Source::Lidar,
            },
            point_count: 0,
        }
    }
}

/// Weighted position average of a matched pair. Colour comes from the
/// camera. Confidence is the weighted mean plus an agreement bonus, and
/// never below the stronger of the two sources.
pub fn fuse_position(
    m: &FusionMatch,
    weights: (f64, f64),
    params: &FusionParams,
) -> Result<FusedCone> {
    let (wc, wl) = weights;
    if !(wc >= 0.0 && wl >= 0.0) || !(wc + wl > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let total = wc + wl;
    let (pc, pl) = (m.camera_det.position, m.lidar_obs.position);
    // stepping from the LiDAR point keeps w_camera = 0 exact
    let position = pl + (pc - pl) * (wc / total);
    let (cc, cl) = (m.camera_det.confidence, m.lidar_obs.confidence);
    let mean = (cc * wc + cl * wl) / total;
    let bonus = if pc.dist(pl) < params.agreement_radius {
        params.agreement_bonus
    } else {
        0.0
    };
    let confidence = (mean + bonus).max(cc.max(cl)).clamp(0.0, 1.0);
    Ok(FusedCone {
        position,
        color: m.camera_det.color,
        confidence,
        sources: SourceSet {
            lidar: true,
            camera: true,
        },
        weights: Some((wc / total, wl / total)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightContext {
    pub ambient_light: f64,
    pub distance: f64,
    /// Detection-history consistency of the LiDAR side.
    pub consistency: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `(w_camera, w_lidar)`, strictly positive and summing to one. Camera
/// weight grows with light; LiDAR weight grows with distance past the
/// crossover and with consistency.
pub fn adaptive_weights(ctx: &WeightContext, params: &FusionParams) -> (f64, f64) {
    let light = sigmoid(params.light_gain * (ctx.ambient_light.clamp(0.0, 1.0) - 0.5));
    let far = sigmoid(params.distance_gain * (ctx.distance - params.crossover_distance));
    let raw_camera = light * (1.0 - far);
    let raw_lidar =
        ((1.0 - light) * (1.0 - far) + far) * (0.5 + 0.5 * ctx.consistency.clamp(0.0, 1.0));
    let wc = raw_camera.max(params.min_weight);
    let wl = raw_lidar.max(params.min_weight);
    let wc = wc / (wc + wl);
    (wc, 1.0 - wc)
}

fn single_source(obs: &ConeObservation, lidar: bool, params: &FusionParams) -> FusedCone {
    FusedCone {
        position: obs.position,
        color: if lidar { ConeColor::Unknown } else { obs.color },
        confidence: (obs.confidence * params.unmatched_penalty).clamp(0.0, 1.0),
        sources: SourceSet {
            lidar,
            camera: !lidar,
        },
        weights: None,
    }
}

/// Camera detections as base_link observations at their refined depth.
pub fn camera_observations(dets: &[RefinedDetection], model: &CameraModel) -> Vec<ConeObservation> {
    dets.iter()
        .map(|d| ConeObservation {
            position: model.base_to_camera.transform_point(d.position),
            color: d.detection.color,
            confidence: d.detection.confidence,
            source: Source::Camera,
            point_count: 0,
        })
        .collect()
}

/// One tick of fusion: depth corrections, association, weighted averaging of matches,
/// and penalised pass-through of everything left over. Output order is
/// matches by LiDAR index, then unmatched LiDAR, then unmatched camera.
pub fn fuse_frame(
    lidar: &[ConeObservation],
    camera: &[ConeObservation],
    model: &CameraModel,
    ctx: &WeightContext,
    params: &FusionParams,
) -> Vec<FusedCone> {
    let lidar: Vec<ConeObservation> = lidar
        .iter()
        .map(|o| ConeObservation {
            position: params
                .lidar_correction
                .apply_from(model.base_to_lidar, o.position),
            ..*o
        })
        .collect();
    let camera: Vec<ConeObservation> = camera
        .iter()
        .map(|o| ConeObservation {
            position: params
                .camera_correction
                .apply_from(model.base_to_camera, o.position),
            ..*o
        })
        .collect();
    let assoc = associate(&lidar, &camera, model, params);
    let mut out = Vec::with_capacity(lidar.len() + camera.len());
    for m in &assoc.matches {
        let (_, depth) = model.bearing_depth(m.lidar_obs.position);
        let weights = adaptive_weights(
            &WeightContext {
                distance: depth,
                ..*ctx
            },
            params,
        );
        if let Ok(f) = fuse_position(m, weights, params) {
            out.push(f);
        }
    }
    out.extend(
        assoc
            .unmatched_lidar
            .iter()
            .map(|&i| single_source(&lidar[i], true, params)),
    );
    out.extend(
        assoc
            .unmatched_camera
            .iter()
            .map(|&i| single_source(&camera[i], false, params)),
    );
    out
}

#[cfg(test)]
mod tests;
