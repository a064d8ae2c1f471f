use serde::{Deserialize, Serialize};

use super::config::MetricsConfig;
use super::telemetry::TelemetryRecord;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::world::{Cone, TrackLayout, TrackProjector};

/// Unwrapped arc-length progress along the centerline. A lap completes each
/// time progress passes another multiple of the track length, so reversing
/// over the start line never counts.
#[derive(Debug, Clone)]
pub struct LapCounter {
    projector: TrackProjector,
    last_s: f64,
    progress: f64,
    laps: u32,
}

impl LapCounter {
    pub fn new(layout: &TrackLayout, start: Vec2) -> Self {
        let projector = TrackProjector::new(&layout.centerline);
        let s = projector.project(start).s;
        let len = projector.length();
        let progress = if s > 0.5 * len { s - len } else { s };
        Self {
            projector,
            last_s: s,
            progress,
            laps: 0,
        }
    }

    /// Feeds one position; returns the lateral offset and whether a lap
    /// completed on this sample.
    pub fn update(&mut self, p: Vec2) -> (f64, bool) {
        let proj = self.projector.project(p);
        let len = self.projector.length();
        let mut delta = proj.s - self.last_s;
        if delta > 0.5 * len {
            delta -= len;
        } else if delta < -0.5 * len {
            delta += len;
        }
        self.last_s = proj.s;
        self.progress += delta;
        let done = (self.progress / len).floor().max(0.0) as u32;
        let completed = done > self.laps;
        if completed {
            self.laps = done;
        }
        (proj.lateral, completed)
    }

    pub fn laps(&self) -> u32 {
        self.laps
    }

    pub fn progress(&self) -> f64 {
        self.progress
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub ticks: u64,
    pub duration: f64,
    pub laps_completed: u32,
    pub lap_times: Vec<f64>,
    pub max_cross_track: f64,
    pub mean_cross_track: f64,
    pub boundary_violations: u32,
    pub precision: f64,
    pub recall: f64,
    pub map_cones: usize,
    pub true_cones_in_range: usize,
    pub ekf_rmse: f64,
    pub gnss_rmse: f64,
    pub gnss_updates: u64,
    pub imu_updates: u64,
}

/// One-to-one greedy matching of `estimated` to `truth` within `radius`;
/// returns the number of matched pairs.
pub fn match_cones(estimated: &[Vec2], truth: &[Vec2], radius: f64) -> usize {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, e) in estimated.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let d = e.dist(*t);
            if d <= radius {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; estimated.len()];
    let mut used_t = vec![false; truth.len()];
    let mut matched = 0;
    for (_, i, j) in pairs {
        if !used_e[i] && !used_t[j] {
            used_e[i] = true;
            used_t[j] = true;
            matched += 1;
        }
    }
    matched
}

fn rmse(errors: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = errors.fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Scores a run from its telemetry, the true layout and the exported map.
pub fn compute_metrics(
    telemetry: &[TelemetryRecord],
    layout: &TrackLayout,
    map: &[Cone],
    cfg: &MetricsConfig,
) -> Result<RunMetrics> {
    let first = telemetry.first().ok_or(Error::EmptyTelemetry)?;
    let mut laps = LapCounter::new(layout, first.truth_position());
    let mut lap_times = Vec::new();
    let mut lap_start = first.time;
    let mut outside = false;
    let mut violations = 0;
    let (mut max_ct, mut sum_ct) = (0.0f64, 0.0);
    for r in telemetry {
        let (lateral, completed) = laps.update(r.truth_position());
        if completed {
            lap_times.push(r.time - lap_start);
            lap_start = r.time;
        }
        let ct = lateral.abs();
        max_ct = max_ct.max(ct);
        sum_ct += ct;
        let out = ct > layout.half_width;
        if out && !outside {
            violations += 1;
        }
        outside = out;
    }

    let cones: Vec<Vec2> = layout.cones().map(|c| c.position).collect();
    let mut in_range = vec![false; cones.len()];
    for r in telemetry.iter().step_by(10) {
        let p = r.truth_position();
        for (flag, c) in in_range.iter_mut().zip(&cones) {
            *flag |= c.dist(p) <= cfg.sensor_range;
        }
    }
    let visible: Vec<Vec2> = cones
        .iter()
        .zip(&in_range)
        .filter(|(_, f)| **f)
        .map(|(c, _)| *c)
        .collect();
    let estimated: Vec<Vec2> = map.iter().map(|c| c.position).collect();
    let tp = match_cones(&estimated, &visible, cfg.match_radius);
    let precision = if estimated.is_empty() {
        1.0
    } else {
        tp as f64 / estimated.len() as f64
    };
    let recall = if visible.is_empty() {
        1.0
    } else {
        tp as f64 / visible.len() as f64
    };

    let ekf_rmse = rmse(
        telemetry
            .iter()
            .filter_map(|r| Some(r.ekf_position()?.dist(r.truth_position()))),
    );
    let gnss_rmse = rmse(
        telemetry
            .iter()
            .filter_map(|r| Some(r.gnss_position()?.dist(r.truth_position()))),
    );

    let last = telemetry.last().expect("non-empty");
    Ok(RunMetrics {
        ticks: telemetry.len() as u64,
        duration: last.time - first.time,
        laps_completed: laps.laps(),
        lap_times,
        max_cross_track: max_ct,
        mean_cross_track: sum_ct / telemetry.len() as f64,
        boundary_violations: violations,
        precision,
        recall,
        map_cones: estimated.len(),
        true_cones_in_range: visible.len(),
        ekf_rmse,
        gnss_rmse,
        gnss_updates: telemetry.iter().filter(|r| r.gnss_x.is_some()).count() as u64,
        imu_updates: telemetry.iter().map(|r| r.imu_update as u64).sum(),
    })
}
