use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose2, Vec2};
use crate::sensors::{CameraDetection, CameraFrame};
use crate::world::ConeDimensions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    pub smoothed_depth: f64,
    pub position_depth: f64,
    pub final_depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthGeometry {
    pub focal_px: f64,
    pub cone_height: f64,
    pub window: usize,
}

impl DepthGeometry {
    pub fn for_detection(focal_px: f64, detection: &CameraDetection, window: usize) -> Self {
        Self {
            focal_px,
            cone_height: ConeDimensions::for_color(detection.color).height,
            window,
        }
    }
}

/// Sliding-window mean of the last `window` raw depths blended 50/50 with
/// the pinhole depth implied by the box height.
pub fn estimate_depth(
    history: &[f64],
    detection: &CameraDetection,
    geometry: &DepthGeometry,
) -> Result<DepthEstimate> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    if !(detection.bbox_height_px > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bbox height {} must be positive",
            detection.bbox_height_px
        )));
    }
    let w = geometry.window.max(1).min(history.len());
    let recent = &history[history.len() - w..];
    let smoothed_depth = recent.iter().sum::<f64>() / w as f64;
    let position_depth = geometry.focal_px * geometry.cone_height / detection.bbox_height_px;
    Ok(DepthEstimate {
        smoothed_depth,
        position_depth,
        final_depth: 0.5 * smoothed_depth + 0.5 * position_depth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedDetection {
    pub detection: CameraDetection,
    pub depth: DepthEstimate,
    /// Refined position in the camera frame.
    pub position: Vec2,
}

#[derive(Debug, Clone)]
struct DepthTrack {
    position: Vec2,
    samples: VecDeque<Vec2>,
    last_seen: u64,
}

/// Keeps per-cone depth histories across camera frames. Samples are stored
/// as fixed-frame points and re-expressed as depths from the current camera
/// pose, so the window stays consistent while the vehicle moves.
#[derive(Debug, Clone)]
pub struct DepthSmoother {
    pub focal_px: f64,
    pub window: usize,
    pub gate: f64,
    pub max_age: u64,
    tracks: Vec<DepthTrack>,
    frame: u64,
}

impl DepthSmoother {
    pub fn new(focal_px: f64, window: usize) -> Self {
        Self {
            focal_px,
            window: window.max(1),
            gate: 1.0,
            max_age: 10,
            tracks: Vec::new(),
            frame: 0,
        }
    }

    pub fn track_count(&self) -> usize {
        self.tracks.len()
    }

    pub fn process(&mut self, frame: &CameraFrame, camera_pose: Pose2) -> Vec<RefinedDetection> {
        self.frame += 1;
        let raw: Vec<Vec2> = frame
            .detections
            .iter()
            .map(|d| camera_pose.transform_point(d.position_at_depth(d.raw_depth)))
            .collect();

        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in self.tracks.iter().enumerate() {
            for (di, p) in raw.iter().enumerate() {
                let d = t.position.dist(*p);
                if d <= self.gate {
                    pairs.push((d, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut owner: Vec<Option<usize>> = vec![None; raw.len()];
        let mut taken = vec![false; self.tracks.len()];
        for (_, ti, di) in pairs {
            if !taken[ti] && owner[di].is_none() {
                taken[ti] = true;
                owner[di] = Some(ti);
            }
        }

        let mut out = Vec::with_capacity(raw.len());
        for (di, det) in frame.detections.iter().enumerate() {
            let ti = match owner[di] {
                Some(ti) => ti,
                None => {
                    self.tracks.push(DepthTrack {
                        position: raw[di],
                        samples: VecDeque::new(),
                        last_seen: 0,
                    });
                    self.tracks.len() - 1
                }
            };
            let track = &mut self.tracks[ti];
            track.samples.push_back(raw[di]);
            while track.samples.len() > self.window {
                track.samples.pop_front();
            }
            track.last_seen = self.frame;
            let history: Vec<f64> = track
                .samples
                .iter()
                .map(|p| camera_pose.inverse_transform_point(*p).x)
                .collect();
            let geometry = DepthGeometry::for_detection(self.focal_px, det, self.window);
            let Ok(depth) = estimate_depth(&history, det, &geometry) else {
                continue;
            };
            let position = det.position_at_depth(depth.final_depth);
            track.position = camera_pose.transform_point(position);
            out.push(RefinedDetection {
                detection: *det,
                depth,
                position,
            });
        }
        let (now, age) = (self.frame, self.max_age);
        self.tracks.retain(|t| now - t.last_seen <= age);
        out
    }
}
