use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, segments_intersect, Pose2, Vec2};
use crate::rng;

use super::cone::{Cone, ConeColor};

/// Centerline resampling step (m).
const CENTERLINE_STEP: f64 = 0.25;
/// Required gap between non-adjacent parts of the track (m), on top of the
/// track width.
const TRACK_CLEARANCE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackShape {
    Circle {
        radius: f64,
    },
    /// Closed spline through jittered control points around a circle.
    Random {
        control_points: usize,
        mean_radius: f64,
        radial_jitter: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackSpec {
    pub shape: TrackShape,
    pub half_width: f64,
    pub cone_spacing: f64,
    /// Smallest admissible centerline turn radius for random tracks (m).
    pub min_turn_radius: f64,
    pub max_attempts: usize,
}

impl Default for TrackSpec {
    fn default() -> Self {
        Self {
            shape: TrackShape::Random {
                control_points: 10,
                mean_radius: 20.0,
                radial_jitter: 0.25,
            },
            half_width: 1.75,
            cone_spacing: 4.0,
            min_turn_radius: 6.0,
            max_attempts: 200,
        }
    }
}

impl TrackSpec {
    pub fn circle(radius: f64, half_width: f64, cone_spacing: f64) -> Self {
        Self {
            shape: TrackShape::Circle { radius },
            half_width,
            cone_spacing,
            ..Default::default()
        }
    }

    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            errors.push(format!("{prefix}.half_width: must be > 0"));
        }
        if !(2.0..=6.0).contains(&self.cone_spacing) {
            errors.push(format!("{prefix}.cone_spacing: must lie in [2, 6] m"));
        }
        if self.max_attempts == 0 {
            errors.push(format!("{prefix}.max_attempts: must be >= 1"));
        }
        match self.shape {
            TrackShape::Circle { radius } => {
                if !(radius > self.half_width + 0.2) {
                    errors.push(format!("{prefix}.shape.radius: must exceed half_width"));
                }
            }
            TrackShape::Random {
                control_points,
                mean_radius,
                radial_jitter,
            } => {
                if control_points < 8 {
                    errors.push(format!("{prefix}.shape.control_points: need at least 8"));
                }
                if !(mean_radius > 0.0 && mean_radius.is_finite()) {
                    errors.push(format!("{prefix}.shape.mean_radius: must be > 0"));
                }
                if !(0.0..1.0).contains(&radial_jitter) {
                    errors.push(format!("{prefix}.shape.radial_jitter: must lie in [0, 1)"));
                }
                if !(self.min_turn_radius > self.half_width + 0.2) {
                    errors.push(format!("{prefix}.min_turn_radius: must exceed half_width"));
                }
            }
        }
    }
}

/// Closed cone circuit, driven counter-clockwise: left is the interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackLayout {
    pub half_width: f64,
    pub start_pose: Pose2,
    pub centerline: Vec<Vec2>,
    pub left_cones: Vec<Cone>,
    pub right_cones: Vec<Cone>,
}

impl TrackLayout {
    pub fn cones(&self) -> impl Iterator<Item = &Cone> {
        self.left_cones.iter().chain(self.right_cones.iter())
    }

    pub fn cone_count(&self) -> usize {
        self.left_cones.len() + self.right_cones.len()
    }

    /// Closed-loop centerline length.
    pub fn length(&self) -> f64 {
        closed_segments(&self.centerline)
            .map(|(a, b)| a.dist(b))
            .sum()
    }

    /// Checks the layout invariants; returns the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let proj = TrackProjector::new(&self.centerline);
        for (side, cones, expected, sign) in [
            ("left", &self.left_cones, ConeColor::Blue, 1.0),
            ("right", &self.right_cones, ConeColor::Yellow, -1.0),
        ] {
            for (i, c) in cones.iter().enumerate() {
                if !c.position.is_finite() {
                    return Err(format!("{side} cone {i} not finite"));
                }
                if c.color != expected && c.color != ConeColor::LargeOrange {
                    return Err(format!("{side} cone {i} has color {:?}", c.color));
                }
                let p = proj.project(c.position);
                let d = p.lateral * sign;
                if d < self.half_width - 0.2 || d > self.half_width + 0.2 {
                    return Err(format!(
                        "{side} cone {i} at lateral offset {:.3}",
                        p.lateral
                    ));
                }
            }
            for (i, (a, b)) in closed_segments_of(cones).enumerate() {
                let gap = a.position.dist(b.position);
                if !(2.0..=6.0).contains(&gap) {
                    return Err(format!("{side} cone spacing {gap:.3} at {i}"));
                }
            }
        }
        Ok(())
    }
}

fn closed_segments(pts: &[Vec2]) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
    (0..pts.len()).map(move |i| (pts[i], pts[(i + 1) % pts.len()]))
}

fn closed_segments_of(cones: &[Cone]) -> impl Iterator<Item = (Cone, Cone)> + '_ {
    (0..cones.len()).map(move |i| (cones[i], cones[(i + 1) % cones.len()]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackProjection {
    /// Arc length of the closest centerline point from the start.
    pub s: f64,
    /// Signed offset, positive to the left of the driving direction.
    pub lateral: f64,
}

/// Nearest-point queries against a layout's closed centerline.
#[derive(Debug, Clone)]
pub struct TrackProjector {
    points: Vec<Vec2>,
    arc: Vec<f64>,
    length: f64,
}

impl TrackProjector {
    pub fn new(centerline: &[Vec2]) -> Self {
        let mut arc = Vec::with_capacity(centerline.len() + 1);
        let mut acc = 0.0;
        arc.push(0.0);
        for (a, b) in closed_segments(centerline) {
            acc += a.dist(b);
            arc.push(acc);
        }
        Self {
            points: centerline.to_vec(),
            arc,
            length: acc,
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn project(&self, p: Vec2) -> TrackProjection {
        let n = self.points.len();
        let mut best = (f64::INFINITY, 0usize, 0.0);
        for i in 0..n {
            let (d, t) = point_segment_distance(p, self.points[i], self.points[(i + 1) % n]);
            if d < best.0 {
                best = (d, i, t);
            }
        }
        let (d, i, t) = best;
        let a = self.points[i];
        let b = self.points[(i + 1) % n];
        let side = if (b - a).cross(p - a) >= 0.0 {
            1.0
        } else {
            -1.0
        };
        TrackProjection {
            s: self.arc[i] + t * (self.arc[i + 1] - self.arc[i]),
            lateral: side * d,
        }
    }

    pub fn point_at(&self, s: f64) -> (Vec2, Vec2) {
        let s = s.rem_euclid(self.length);
        let i = match self.arc.binary_search_by(|a| a.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.points.len() - 1),
            Err(i) => i - 1,
        };
        let n = self.points.len();
        let a = self.points[i];
        let b = self.points[(i + 1) % n];
        let seg = self.arc[i + 1] - self.arc[i];
        let t = if seg > 0.0 {
            (s - self.arc[i]) / seg
        } else {
            0.0
        };
        (a.lerp(b, t), (b - a).normalized())
    }
}

/// Builds a closed cone circuit. Identical `(spec, seed)` inputs produce
/// bit-identical layouts.
pub fn generate_track(spec: &TrackSpec, seed: u64) -> Result<TrackLayout> {
    let mut errors = Vec::new();
    spec.validate(&mut errors, "track");
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    match spec.shape {
        TrackShape::Circle { radius } => {
            let layout = circle_layout(radius, spec);
            layout
                .check_invariants()
                .map_err(|reason| Error::TrackGeneration {
                    attempts: 1,
                    reason,
                })?;
            Ok(layout)
        }
        TrackShape::Random {
            control_points,
            mean_radius,
            radial_jitter,
        } => {
            let mut last = String::new();
            for attempt in 0..spec.max_attempts {
                let mut rng = rng::stream(seed, &format!("track/{attempt}"));
                let ctrl =
                    random_control_points(&mut rng, control_points, mean_radius, radial_jitter);
                let dense = catmull_rom_closed(&ctrl, 32);
                let centerline = resample_closed(
                    &smooth_closed(&resample_closed(&dense, CENTERLINE_STEP), 16, 3),
                    CENTERLINE_STEP,
                );
                if let Err(reason) = check_centerline(&centerline, spec) {
                    last = reason;
                    continue;
                }
                let layout = cones_along(centerline, spec);
                match layout.check_invariants() {
                    Ok(()) => return Ok(layout),
                    Err(reason) => last = reason,
                }
            }
            Err(Error::TrackGeneration {
                attempts: spec.max_attempts,
                reason: last,
            })
        }
    }
}

fn circle_layout(radius: f64, spec: &TrackSpec) -> TrackLayout {
    let n_dense = ((TAU * radius) / CENTERLINE_STEP).ceil() as usize;
    let centerline = (0..n_dense)
        .map(|i| Vec2::from_polar(radius, TAU * i as f64 / n_dense as f64))
        .collect();
    let n = ((TAU * radius) / spec.cone_spacing).round().max(3.0) as usize;
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for k in 0..n {
        let theta = TAU * k as f64 / n as f64;
        let (lc, rc) = station_colors(k);
        left.push(Cone::new(
            Vec2::from_polar(radius - spec.half_width, theta),
            lc,
        ));
        right.push(Cone::new(
            Vec2::from_polar(radius + spec.half_width, theta),
            rc,
        ));
    }
    TrackLayout {
        half_width: spec.half_width,
        start_pose: Pose2::new(radius, 0.0, PI / 2.0),
        centerline,
        left_cones: left,
        right_cones: right,
    }
}

fn station_colors(k: usize) -> (ConeColor, ConeColor) {
    if k == 0 {
        (ConeColor::LargeOrange, ConeColor::LargeOrange)
    } else {
        (ConeColor::Blue, ConeColor::Yellow)
    }
}

fn random_control_points(
    rng: &mut rng::SimRng,
    n: usize,
    mean_radius: f64,
    jitter: f64,
) -> Vec<Vec2> {
    let step = TAU / n as f64;
    (0..n)
        .map(|i| {
            let theta = step * i as f64 + rng.gen_range(-0.2..=0.2) * step;
            let r = mean_radius
                * (1.0
                    + if jitter > 0.0 {
                        rng.gen_range(-jitter..=jitter)
                    } else {
                        0.0
                    });
            Vec2::from_polar(r, theta)
        })
        .collect()
}

/// Centripetal Catmull-Rom through a closed control polygon.
fn catmull_rom_closed(ctrl: &[Vec2], samples_per_segment: usize) -> Vec<Vec2> {
    let n = ctrl.len();
    let knot = |a: Vec2, b: Vec2| a.dist(b).sqrt().max(1e-9);
    let mut out = Vec::with_capacity(n * samples_per_segment);
    for i in 0..n {
        let p0 = ctrl[(i + n - 1) % n];
        let p1 = ctrl[i];
        let p2 = ctrl[(i + 1) % n];
        let p3 = ctrl[(i + 2) % n];
        let t0 = 0.0;
        let t1 = t0 + knot(p0, p1);
        let t2 = t1 + knot(p1, p2);
        let t3 = t2 + knot(p2, p3);
        for k in 0..samples_per_segment {
            let t = t1 + (t2 - t1) * k as f64 / samples_per_segment as f64;
            let a1 = p0 * ((t1 - t) / (t1 - t0)) + p1 * ((t - t0) / (t1 - t0));
            let a2 = p1 * ((t2 - t) / (t2 - t1)) + p2 * ((t - t1) / (t2 - t1));
            let a3 = p2 * ((t3 - t) / (t3 - t2)) + p3 * ((t - t2) / (t3 - t2));
            let b1 = a1 * ((t2 - t) / (t2 - t0)) + a2 * ((t - t0) / (t2 - t0));
            let b2 = a2 * ((t3 - t) / (t3 - t1)) + a3 * ((t - t1) / (t3 - t1));
            out.push(b1 * ((t2 - t) / (t2 - t1)) + b2 * ((t - t1) / (t2 - t1)));
        }
    }
    out
}

/// Circular moving average; removes the curvature kinks the spline leaves
/// at its knots.
fn smooth_closed(pts: &[Vec2], half_window: usize, passes: usize) -> Vec<Vec2> {
    let n = pts.len();
    let mut cur = pts.to_vec();
    let w = (2 * half_window + 1) as f64;
    for _ in 0..passes {
        cur = (0..n)
            .map(|i| {
                let sum = (0..=2 * half_window)
                    .map(|k| cur[(i + n + k - half_window) % n])
                    .fold(Vec2::ZERO, |a, p| a + p);
                sum * (1.0 / w)
            })
            .collect();
    }
    cur
}

/// Resamples a closed polyline at (nearly) uniform arc-length spacing.
fn resample_closed(pts: &[Vec2], step: f64) -> Vec<Vec2> {
    let proj = TrackProjector::new(pts);
    let n = (proj.length() / step).round().max(3.0) as usize;
    let ds = proj.length() / n as f64;
    (0..n).map(|k| proj.point_at(k as f64 * ds).0).collect()
}

fn check_centerline(c: &[Vec2], spec: &TrackSpec) -> std::result::Result<(), String> {
    let n = c.len();
    // curvature over ~1 m chords
    let k = ((1.0 / CENTERLINE_STEP).round() as usize).max(1);
    for i in 0..n {
        let a = c[(i + n - k) % n];
        let b = c[i];
        let d = c[(i + k) % n];
        let curvature = 2.0 * (b - a).cross(d - b).abs() / (a.dist(b) * b.dist(d) * a.dist(d));
        if curvature * spec.min_turn_radius > 1.0 {
            return Err(format!(
                "turn radius {:.2} m below minimum",
                1.0 / curvature
            ));
        }
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(c[i], c[(i + 1) % n], c[j], c[(j + 1) % n]) {
                return Err("self-intersecting centerline".to_string());
            }
        }
    }
    let min_gap = 2.0 * spec.half_width + TRACK_CLEARANCE;
    let min_arc = 4.0 * (spec.half_width + TRACK_CLEARANCE);
    let arc_steps = (min_arc / CENTERLINE_STEP).ceil() as usize;
    for i in 0..n {
        for j in (i + arc_steps)..n {
            if n - j + i < arc_steps {
                break;
            }
            if c[i].dist(c[j]) < min_gap {
                return Err("track sections too close".to_string());
            }
        }
    }
    Ok(())
}

fn cones_along(centerline: Vec<Vec2>, spec: &TrackSpec) -> TrackLayout {
    let proj = TrackProjector::new(&centerline);
    let n = (proj.length() / spec.cone_spacing).round().max(3.0) as usize;
    let ds = proj.length() / n as f64;
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let tangent_at = |s: f64| {
        let (p0, _) = proj.point_at(s - 0.5);
        let (p1, _) = proj.point_at(s + 0.5);
        (p1 - p0).normalized()
    };
    for k in 0..n {
        let s = k as f64 * ds;
        let (p, _) = proj.point_at(s);
        let normal = tangent_at(s).perp();
        let (lc, rc) = station_colors(k);
        left.push(Cone::new(p + normal * spec.half_width, lc));
        right.push(Cone::new(p - normal * spec.half_width, rc));
    }
    let start = centerline[0];
    let yaw = tangent_at(0.0).angle();
    TrackLayout {
        half_width: spec.half_width,
        start_pose: Pose2::new(start.x, start.y, yaw),
        centerline,
        left_cones: left,
        right_cones: right,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_matches_circumference_over_spacing() {
        let spec = TrackSpec::circle(20.0, 2.0, 4.0);
        let layout = generate_track(&spec, 7).unwrap();
        // 2π·20/4 ≈ 31.4
        assert_eq!(layout.left_cones.len(), 31);
        assert_eq!(layout.right_cones.len(), 31);
        for c in &layout.left_cones {
            assert!((c.position.norm() - 18.0).abs() < 1e-9);
        }
        for c in &layout.right_cones {
            assert!((c.position.norm() - 22.0).abs() < 1e-9);
        }
        layout.check_invariants().unwrap();
    }

    #[test]
    fn same_seed_same_layout() {
        let spec = TrackSpec::default();
        let a = generate_track(&spec, 11).unwrap();
        let b = generate_track(&spec, 11).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = generate_track(&spec, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_half_width_rejected() {
        let spec = TrackSpec {
            half_width: 0.0,
            ..TrackSpec::circle(20.0, 2.0, 4.0)
        };
        assert!(matches!(generate_track(&spec, 1), Err(Error::Config(_))));
    }

    #[test]
    fn too_few_control_points_rejected() {
        let spec = TrackSpec {
            shape: TrackShape::Random {
                control_points: 5,
                mean_radius: 20.0,
                radial_jitter: 0.2,
            },
            ..TrackSpec::default()
        };
        assert!(generate_track(&spec, 1).is_err());
    }

    #[test]
    fn impossible_curvature_reports_generation_failure() {
        let spec = TrackSpec {
            shape: TrackShape::Random {
                control_points: 12,
                mean_radius: 6.0,
                radial_jitter: 0.5,
            },
            min_turn_radius: 30.0,
            max_attempts: 5,
            ..TrackSpec::default()
        };
        assert!(matches!(
            generate_track(&spec, 3),
            Err(Error::TrackGeneration { attempts: 5, .. })
        ));
    }

    #[test]
    fn random_tracks_satisfy_invariants() {
        for seed in 0..25 {
            let layout = generate_track(&TrackSpec::default(), seed).unwrap();
            layout.check_invariants().unwrap();
            assert_eq!(layout.left_cones[0].color, ConeColor::LargeOrange);
            assert!(layout.left_cones[1..]
                .iter()
                .all(|c| c.color == ConeColor::Blue));
            assert!(layout.right_cones[1..]
                .iter()
                .all(|c| c.color == ConeColor::Yellow));
            let proj = TrackProjector::new(&layout.centerline);
            let p = proj.project(layout.start_pose.translation());
            assert!(p.lateral.abs() < 1e-9);
        }
    }

    #[test]
    fn projection_signs_left_positive() {
        let layout = generate_track(&TrackSpec::circle(15.0, 2.0, 4.0), 0).unwrap();
        let proj = TrackProjector::new(&layout.centerline);
        let inside = proj.project(Vec2::new(14.0, 0.0));
        assert!((inside.lateral - 1.0).abs() < 1e-3);
        let outside = proj.project(Vec2::new(0.0, 16.0));
        assert!((outside.lateral + 1.0).abs() < 1e-3);
        assert!((outside.s - proj.length() / 4.0).abs() < 0.05);
    }
}
