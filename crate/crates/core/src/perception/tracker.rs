use serde::{Deserialize, Serialize};

use super::{ConeObservation, Source};
use crate::geometry::Vec2;
use crate::world::ConeColor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerParams {
    pub gate: f64,
    /// Weight of the new observation in the position update.
    pub alpha: f64,
    pub confirm_hits: u32,
    pub max_misses: u32,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            gate: 0.8,
            alpha: 0.5,
            confirm_hits: 2,
            max_misses: 3,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.gate > 0.0) {
            errors.push(format!("{prefix}.gate must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            errors.push(format!("{prefix}.alpha must be in (0, 1]"));
        }
        if self.confirm_hits == 0 {
            errors.push(format!("{prefix}.confirm_hits must be positive"));
        }
        if self.max_misses == 0 {
            errors.push(format!("{prefix}.max_misses must be positive"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeTrack {
    pub id: u64,
    pub position: Vec2,
    pub color: ConeColor,
    pub confidence: f64,
    pub hit_count: u32,
    pub miss_count: u32,
    pub point_count: usize,
}

impl ConeTrack {
    pub fn is_confirmed(&self, params: &TrackerParams) -> bool {
        self.hit_count >= params.confirm_hits
    }
}

/// Nearest-neighbour multi-frame tracker. Observations must all be in one
/// fixed frame.
#[derive(Debug, Clone, Default)]
pub struct ConeTracker {
    pub params: TrackerParams,
    tracks: Vec<ConeTrack>,
    next_id: u64,
}

impl ConeTracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            tracks: Vec::new(),
            next_id: 0,
        }
    }

    pub fn tracks(&self) -> &[ConeTrack] {
        &self.tracks
    }

    /// Associates one frame of observations and returns the confirmed tracks
    /// as observations.
    pub fn update(&mut self, observations: &[ConeObservation]) -> Vec<ConeObservation> {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in self.tracks.iter().enumerate() {
            for (oi, o) in observations.iter().enumerate() {
                let d = t.position.dist(o.position);
                if d <= self.params.gate {
                    pairs.push((d, ti, oi));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut track_hit = vec![false; self.tracks.len()];
        let mut obs_used = vec![false; observations.len()];
        for (_, ti, oi) in pairs {
            if track_hit[ti] || obs_used[oi] {
                continue;
            }
            track_hit[ti] = true;
            obs_used[oi] = true;
            let a = self.params.alpha;
            let o = &observations[oi];
            let t = &mut self.tracks[ti];
            t.position = t.position.lerp(o.position, a);
            t.confidence = t.confidence + a * (o.confidence - t.confidence);
            t.hit_count += 1;
            t.miss_count = 0;
            t.point_count = o.point_count;
        }
        for (t, hit) in self.tracks.iter_mut().zip(&track_hit) {
            if !hit {
                t.miss_count += 1;
            }
        }
        let max_misses = self.params.max_misses;
        self.tracks.retain(|t| t.miss_count < max_misses);

        for (o, used) in observations.iter().zip(&obs_used) {
            if !used {
                self.tracks.push(ConeTrack {
                    id: self.next_id,
                    position: o.position,
                    color: o.color,
                    confidence: o.confidence,
                    hit_count: 1,
                    miss_count: 0,
                    point_count: o.point_count,
                });
                self.next_id += 1;
            }
        }
        self.confirmed()
    }

    pub fn confirmed(&self) -> Vec<ConeObservation> {
        self.tracks
            .iter()
            .filter(|t| t.is_confirmed(&self.params) && t.miss_count == 0)
            .map(|t| ConeObservation {
                position: t.position,
                color: t.color,
                confidence: t.confidence,
                source: Source::Lidar,
                point_count: t.point_count,
            })
            .collect()
    }
}

/// Functional wrapper over [`ConeTracker::update`].
pub fn track_cones(
    tracker: &mut ConeTracker,
    observations: &[ConeObservation],
) -> Vec<ConeObservation> {
    tracker.update(observations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(x: f64, y: f64) -> ConeObservation {
        ConeObservation {
            position: Vec2::new(x, y),
            color: ConeColor::Unknown,
            confidence: 0.8,
            source: Source::Lidar,
            point_count: 10,
        }
    }

    #[test]
    fn confirms_on_second_frame() {
        let mut t = ConeTracker::new(TrackerParams::default());
        assert!(t.update(&[obs(5.0, 1.0)]).is_empty());
        assert_eq!(t.update(&[obs(5.02, 1.0)]).len(), 1);
    }

    #[test]
    fn single_frame_clutter_never_published() {
        let mut t = ConeTracker::new(TrackerParams::default());
        t.update(&[obs(5.0, 1.0)]);
        for _ in 0..5 {
            assert!(t.update(&[]).is_empty());
        }
        assert!(t.tracks().is_empty());
    }

    #[test]
    fn jitter_keeps_one_track_near_mean() {
        let mut t = ConeTracker::new(TrackerParams::default());
        let mut out = Vec::new();
        for k in 0..10 {
            let dx = if k % 2 == 0 { 0.05 } else { -0.05 };
            out = t.update(&[obs(5.0 + dx, 1.0)]);
        }
        assert_eq!(t.tracks().len(), 1);
        assert_eq!(out.len(), 1);
        assert!(out[0].position.dist(Vec2::new(5.0, 1.0)) <= 0.05);
    }

    #[test]
    fn dropped_after_max_misses() {
        let mut t = ConeTracker::new(TrackerParams::default());
        t.update(&[obs(5.0, 1.0)]);
        t.update(&[obs(5.0, 1.0)]);
        t.update(&[]);
        t.update(&[]);
        assert_eq!(t.tracks().len(), 1);
        t.update(&[]);
        assert!(t.tracks().is_empty());
    }

    #[test]
    fn outside_gate_spawns_new_track() {
        let mut t = ConeTracker::new(TrackerParams::default());
        t.update(&[obs(5.0, 1.0)]);
        t.update(&[obs(6.0, 1.0)]);
        assert_eq!(t.tracks().len(), 2);
    }
}
