use serde::{Deserialize, Serialize};

use crate::fusion::FusedCone;
use crate::geometry::Vec2;
use crate::world::ConeColor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanningParams {
    pub horizon: f64,
    pub dedupe_radius: f64,
    /// Fallback half width used until both sides have been seen together.
    pub half_width: f64,
    /// Left/right pairs further apart than this are not paired.
    pub max_pair_distance: f64,
    /// The path is cut at the first jump longer than this.
    pub max_waypoint_gap: f64,
    /// Cone-to-cone radius used when classifying by neighbour chaining.
    pub chain_link_distance: f64,
    pub use_chaining: bool,
}

impl Default for PlanningParams {
    fn default() -> Self {
        Self {
            horizon: 15.0,
            dedupe_radius: 0.5,
            half_width: 1.75,
            max_pair_distance: 6.0,
            max_waypoint_gap: 6.0,
            chain_link_distance: 6.0,
            use_chaining: false,
        }
    }
}

impl PlanningParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        for (name, v) in [
            ("horizon", self.horizon),
            ("dedupe_radius", self.dedupe_radius),
            ("half_width", self.half_width),
            ("max_pair_distance", self.max_pair_distance),
            ("max_waypoint_gap", self.max_waypoint_gap),
            ("chain_link_distance", self.chain_link_distance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("{prefix}.{name} must be positive"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathPlan {
    pub waypoints: Vec<Vec2>,
    pub valid: bool,
}

impl PathPlan {
    pub fn invalid() -> Self {
        Self {
            waypoints: Vec::new(),
            valid: false,
        }
    }

    /// Largest turning curvature over consecutive waypoint triples,
    /// starting from the rear axle.
    pub fn max_curvature(&self) -> f64 {
        let mut pts = vec![Vec2::ZERO];
        pts.extend(&self.waypoints);
        pts.windows(3)
            .map(|w| {
                let (a, b, c) = (w[0], w[1], w[2]);
                let denom = a.dist(b) * b.dist(c) * a.dist(c);
                if denom <= 1e-12 {
                    0.0
                } else {
                    2.0 * (b - a).cross(c - a).abs() / denom
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn length(&self) -> f64 {
        let mut prev = Vec2::ZERO;
        let mut total = 0.0;
        for w in &self.waypoints {
            total += prev.dist(*w);
            prev = *w;
        }
        total
    }
}

fn sort_by_x(cones: &mut [FusedCone]) {
    cones.sort_by(|a, b| {
        a.position
            .x
            .total_cmp(&b.position.x)
            .then(a.position.y.total_cmp(&b.position.y))
    });
}

/// Splits cones ahead of the vehicle and within the horizon into left and
/// right boundaries. Blue goes left and yellow right. Any other colour is
/// sided against the blue/yellow pair whose midpoint is nearest, or by the
/// sign of its lateral offset when no such pair exists. Both lists are
/// sorted by longitudinal distance.
pub fn classify_boundaries(
    cones: &[FusedCone],
    params: &PlanningParams,
) -> (Vec<FusedCone>, Vec<FusedCone>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut other = Vec::new();
    for c in cones
        .iter()
        .filter(|c| c.position.x > 0.0 && c.position.norm() <= params.horizon)
    {
        match c.color {
            ConeColor::Blue => left.push(*c),
            ConeColor::Yellow => right.push(*c),
            _ => other.push(*c),
        }
    }
    // (midpoint, direction toward the left boundary)
    let mut gates: Vec<(Vec2, Vec2)> = Vec::new();
    for (from, to, sign) in [(&left, &right, 1.0), (&right, &left, -1.0)] {
        for c in from.iter() {
            if let Some(p) =
                nearest(c.position, to).filter(|p| p.dist(c.position) <= params.max_pair_distance)
            {
                gates.push((c.position.lerp(p, 0.5), (c.position - p) * sign));
            }
        }
    }
    for c in other {
        let is_left = match gates
            .iter()
            .min_by(|a, b| a.0.dist(c.position).total_cmp(&b.0.dist(c.position)))
        {
            Some((mid, dir)) => (c.position - *mid).dot(*dir) >= 0.0,
            None => c.position.y >= 0.0,
        };
        if is_left {
            left.push(c);
        } else {
            right.push(c);
        }
    }
    sort_by_x(&mut left);
    sort_by_x(&mut right);
    (left, right)
}

fn nearest(p: Vec2, others: &[FusedCone]) -> Option<Vec2> {
    others
        .iter()
        .map(|c| c.position)
        .min_by(|a, b| a.dist(p).total_cmp(&b.dist(p)))
}

/// Half of the median left/right pair distance, if any pair exists.
pub fn estimate_half_width(
    left: &[FusedCone],
    right: &[FusedCone],
    params: &PlanningParams,
) -> Option<f64> {
    let mut widths: Vec<f64> = left
        .iter()
        .filter_map(|l| nearest(l.position, right).map(|r| r.dist(l.position)))
        .filter(|d| *d <= params.max_pair_distance)
        .collect();
    if widths.is_empty() {
        return None;
    }
    widths.sort_by(f64::total_cmp);
    Some(0.5 * widths[widths.len() / 2])
}

/// Offsets one boundary toward the track interior. `side` is +1 for the
/// left boundary and -1 for the right.
fn offset_side(cones: &[FusedCone], side: f64, half_width: f64) -> Vec<Vec2> {
    let pts: Vec<Vec2> = cones.iter().map(|c| c.position).collect();
    (0..pts.len())
        .map(|i| {
            let tangent = if pts.len() < 2 {
                Vec2::new(1.0, 0.0)
            } else {
                let (a, b) = (pts[i.saturating_sub(1)], pts[(i + 1).min(pts.len() - 1)]);
                let t = (b - a).normalized();
                if t.x < 0.0 {
                    -t
                } else {
                    t
                }
            };
            // interior lies to the right of the left boundary, and vice versa
            pts[i] - tangent.perp() * (side * half_width)
        })
        .collect()
}

/// Midpoints of nearest left/right pairs, deduplicated and ordered by
/// longitudinal distance. With only one side visible the waypoints are that
/// side shifted inward by `half_width`.
pub fn midpoint_path(
    left: &[FusedCone],
    right: &[FusedCone],
    half_width: f64,
    params: &PlanningParams,
) -> PathPlan {
    let mut candidates: Vec<Vec2> = match (left.is_empty(), right.is_empty()) {
        (true, true) => return PathPlan::invalid(),
        (false, true) => offset_side(left, 1.0, half_width),
        (true, false) => offset_side(right, -1.0, half_width),
        (false, false) => {
            let mut mids = Vec::new();
            for (from, to) in [(left, right), (right, left)] {
                for c in from {
                    if let Some(other) = nearest(c.position, to) {
                        if other.dist(c.position) <= params.max_pair_distance {
                            mids.push(c.position.lerp(other, 0.5));
                        }
                    }
                }
            }
            mids
        }
    };
    candidates.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));

    let mut waypoints: Vec<Vec2> = Vec::new();
    for p in candidates {
        if p.x <= 0.0 || waypoints.iter().any(|w| w.dist(p) <= params.dedupe_radius) {
            continue;
        }
        if let Some(last) = waypoints.last() {
            if last.dist(p) > params.max_waypoint_gap {
                break;
            }
        }
        waypoints.push(p);
    }
    let valid = !waypoints.is_empty();
    PathPlan { waypoints, valid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::SourceSet;

    pub(crate) fn cone(x: f64, y: f64, color: ConeColor) -> FusedCone {
        FusedCone {
            position: Vec2::new(x, y),
            color,
            confidence: 0.9,
            sources: SourceSet::default(),
            weights: None,
        }
    }

    #[test]
    fn color_split() {
        let cones = [
            cone(5.0, 1.5, ConeColor::Blue),
            cone(9.0, 1.5, ConeColor::Blue),
            cone(5.0, -1.5, ConeColor::Yellow),
            cone(9.0, -1.5, ConeColor::Yellow),
        ];
        let (l, r) = classify_boundaries(&cones, &PlanningParams::default());
        assert_eq!((l.len(), r.len()), (2, 2));
        assert!(l.iter().all(|c| c.color == ConeColor::Blue));
    }

    #[test]
    fn unknown_goes_by_lateral_sign() {
        let (l, r) = classify_boundaries(
            &[cone(5.0, 1.5, ConeColor::Unknown)],
            &PlanningParams::default(),
        );
        assert_eq!((l.len(), r.len()), (1, 0));
    }

    #[test]
    fn orange_sided_by_nearest_gate_on_a_bend() {
        // left bend about (0, 8): the outer orange cone has y > 0 but is on the right
        let on = |r: f64, th: f64| (r * th.sin(), 8.0 - r * th.cos());
        let (bx, by) = on(6.25, 0.5);
        let (yx, yy) = on(9.75, 0.5);
        let (ox, oy) = on(9.75, 0.8);
        let (ix, iy) = on(6.25, 0.8);
        let cones = [
            cone(bx, by, ConeColor::Blue),
            cone(yx, yy, ConeColor::Yellow),
            cone(ox, oy, ConeColor::Orange),
            cone(ix, iy, ConeColor::LargeOrange),
        ];
        assert!(oy > 0.0);
        let (l, r) = classify_boundaries(&cones, &PlanningParams::default());
        assert_eq!(
            l.iter().map(|c| c.color).collect::<Vec<_>>(),
            vec![ConeColor::Blue, ConeColor::LargeOrange]
        );
        assert_eq!(
            r.iter().map(|c| c.color).collect::<Vec<_>>(),
            vec![ConeColor::Yellow, ConeColor::Orange]
        );
    }

    #[test]
    fn behind_is_ignored() {
        let cones = [
            cone(-3.0, 1.5, ConeColor::Blue),
            cone(-1.0, -1.5, ConeColor::Yellow),
            cone(20.0, 0.0, ConeColor::Blue),
        ];
        let (l, r) = classify_boundaries(&cones, &PlanningParams::default());
        assert!(l.is_empty() && r.is_empty());
    }

    #[test]
    fn midpoint_examples() {
        let p = PlanningParams::default();
        let plan = midpoint_path(
            &[cone(5.0, 1.5, ConeColor::Blue)],
            &[cone(5.0, -1.5, ConeColor::Yellow)],
            1.75,
            &p,
        );
        assert!(plan.valid);
        assert_eq!(plan.waypoints, vec![Vec2::new(5.0, 0.0)]);

        let plan = midpoint_path(
            &[
                cone(5.0, 1.5, ConeColor::Blue),
                cone(10.0, 1.6, ConeColor::Blue),
            ],
            &[
                cone(5.0, -1.5, ConeColor::Yellow),
                cone(10.0, -1.4, ConeColor::Yellow),
            ],
            1.75,
            &p,
        );
        assert_eq!(plan.waypoints.len(), 2);
        assert!(plan.waypoints[0].dist(Vec2::new(5.0, 0.0)) < 1e-12);
        assert!(plan.waypoints[1].dist(Vec2::new(10.0, 0.1)) < 1e-12);

        assert!(!midpoint_path(&[], &[], 1.75, &p).valid);
    }

    #[test]
    fn single_side_fallback() {
        let p = PlanningParams::default();
        let left = [
            cone(4.0, 1.75, ConeColor::Blue),
            cone(8.0, 1.75, ConeColor::Blue),
        ];
        let plan = midpoint_path(&left, &[], 1.75, &p);
        assert_eq!(
            plan.waypoints,
            vec![Vec2::new(4.0, 0.0), Vec2::new(8.0, 0.0)]
        );
        let right = [cone(4.0, -1.75, ConeColor::Yellow)];
        let plan = midpoint_path(&[], &right, 1.5, &p);
        assert_eq!(plan.waypoints, vec![Vec2::new(4.0, -0.25)]);
    }

    #[test]
    fn waypoints_strictly_advance() {
        let p = PlanningParams::default();
        let left: Vec<FusedCone> = (1..4)
            .map(|i| cone(4.0 * i as f64, 1.75, ConeColor::Blue))
            .collect();
        let right: Vec<FusedCone> = (1..4)
            .map(|i| cone(4.0 * i as f64 + 0.2, -1.75, ConeColor::Yellow))
            .collect();
        let plan = midpoint_path(&left, &right, 1.75, &p);
        assert!(plan.valid);
        assert!(plan
            .waypoints
            .windows(2)
            .all(|w| w[1].x > w[0].x && w[0].dist(w[1]) > 0.5));
        assert_eq!(
            estimate_half_width(&left, &right, &p).map(|h| (h * 1e6).round()),
            Some((0.5 * (3.5f64.hypot(0.2)) * 1e6).round())
        );
    }

    #[test]
    fn gap_cuts_path() {
        let p = PlanningParams::default();
        let left = [
            cone(3.0, 1.75, ConeColor::Blue),
            cone(14.0, 1.75, ConeColor::Blue),
        ];
        let right = [
            cone(3.0, -1.75, ConeColor::Yellow),
            cone(14.0, -1.75, ConeColor::Yellow),
        ];
        let plan = midpoint_path(&left, &right, 1.75, &p);
        assert_eq!(plan.waypoints, vec![Vec2::new(3.0, 0.0)]);
    }

    #[test]
    fn straight_plan_has_zero_curvature() {
        let plan = PathPlan {
            waypoints: vec![
                Vec2::new(2.0, 0.0),
                Vec2::new(4.0, 0.0),
                Vec2::new(6.0, 0.0),
            ],
            valid: true,
        };
        assert_eq!(plan.max_curvature(), 0.0);
        let r = 10.0;
        let arc: Vec<Vec2> = (1..5)
            .map(|i| Vec2::new(r * (i as f64 * 0.2).sin(), r - r * (i as f64 * 0.2).cos()))
            .collect();
        let k = PathPlan {
            waypoints: arc,
            valid: true,
        }
        .max_curvature();
        assert!((k - 1.0 / r).abs() < 1e-9);
    }
}
