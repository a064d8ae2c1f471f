use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose2, Vec2};
use crate::rng::SimRng;
use crate::world::{ConeDimensions, TrackLayout, TransformTree, VehicleState};

use super::{gaussian, SensorNoiseConfig};

/// One return in `lidar_link`. The frame is planar with its origin on the
/// ground directly below the optical centre, so `z` is height above ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl LidarPoint {
    pub fn xy(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub timestamp: f64,
    pub points: Vec<LidarPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarConfig {
    /// Elevation of each beam (deg). Exactly 16 beams.
    pub beam_elevations_deg: Vec<f64>,
    pub azimuth_resolution_deg: f64,
    pub max_range: f64,
    pub mount_height: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            // dense just below the horizon so small cones stay resolvable at 30+ m
            beam_elevations_deg: vec![
                -0.40, -0.55, -0.70, -0.85, -1.0, -1.2, -1.45, -1.75, -2.1, -2.6, -3.2, -4.0, -5.0,
                -6.5, -9.0, -13.0,
            ],
            azimuth_resolution_deg: 0.2,
            max_range: 35.0,
            mount_height: 0.5,
        }
    }
}

pub const LIDAR_BEAMS: usize = 16;

impl LidarConfig {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if self.beam_elevations_deg.len() != LIDAR_BEAMS {
            errors.push(format!(
                "{prefix}.beam_elevations_deg: need exactly {LIDAR_BEAMS} beams"
            ));
        }
        if self.beam_elevations_deg.iter().any(|e| !(e.abs() < 90.0)) {
            errors.push(format!(
                "{prefix}.beam_elevations_deg: elevations must lie in (-90, 90)"
            ));
        }
        if !(self.azimuth_resolution_deg > 0.0 && self.azimuth_resolution_deg <= 10.0) {
            errors.push(format!(
                "{prefix}.azimuth_resolution_deg: must lie in (0, 10]"
            ));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            errors.push(format!("{prefix}.max_range: must be > 0"));
        }
        if !(self.mount_height > 0.0 && self.mount_height.is_finite()) {
            errors.push(format!("{prefix}.mount_height: must be > 0"));
        }
    }

    pub fn azimuth_count(&self) -> usize {
        (360.0 / self.azimuth_resolution_deg).round() as usize
    }
}

/// Cone as seen from the sensor: planar centre in `lidar_link`, cylinder size.
#[derive(Debug, Clone, Copy)]
struct LocalCylinder {
    center: Vec2,
    dims: ConeDimensions,
}

/// Horizontal distance at which a ray (unit horizontal direction `u`,
/// elevation slope `tan_el`, origin height `h`) first meets the cylinder,
/// together with the hit height; `None` on a miss.
fn ray_cylinder(u: Vec2, tan_el: f64, h: f64, cyl: &LocalCylinder) -> Option<(f64, f64)> {
    let c = cyl.center;
    let r = cyl.dims.radius;
    let along = u.dot(c);
    let perp_sq = c.norm_sq() - along * along;
    let disc = r * r - perp_sq;
    if disc < 0.0 {
        return None;
    }
    let half = disc.sqrt();
    let s_in = along - half;
    let s_out = along + half;
    if s_out <= 0.0 {
        return None;
    }
    let s_in = s_in.max(0.0);
    let z_in = h + s_in * tan_el;
    if (0.0..=cyl.dims.height).contains(&z_in) {
        return Some((s_in, z_in));
    }
    // entering through the top cap of the cylinder
    if z_in > cyl.dims.height && tan_el < 0.0 {
        let s_top = (cyl.dims.height - h) / tan_el;
        if s_top >= s_in && s_top <= s_out {
            return Some((s_top, cyl.dims.height));
        }
    }
    None
}

/// Casts every beam × azimuth ray against the cone cylinders and the flat
/// ground; the first surface along each ray produces the return.
pub fn simulate_lidar(
    layout: &TrackLayout,
    truth: &VehicleState,
    tree: &TransformTree,
    lidar: &LidarConfig,
    noise: &SensorNoiseConfig,
    timestamp: f64,
    rng: &mut SimRng,
) -> Result<LidarScan> {
    let base = truth.pose();
    if !base.is_finite() {
        return Err(Error::NonFinite("vehicle pose"));
    }
    let sensor: Pose2 = base.compose(tree.base_to_lidar);
    let h = lidar.mount_height;
    let n_az = lidar.azimuth_count();
    let az_step = std::f64::consts::TAU / n_az as f64;

    let cones: Vec<LocalCylinder> = layout
        .cones()
        .map(|c| LocalCylinder {
            center: sensor.inverse_transform_point(c.position),
            dims: ConeDimensions::for_color(c.color),
        })
        .filter(|c| c.center.norm() - c.dims.radius <= lidar.max_range)
        .collect();

    let beams: Vec<(f64, f64, f64)> = lidar
        .beam_elevations_deg
        .iter()
        .map(|e| {
            let el = e.to_radians();
            (el.cos(), el.sin(), el.tan())
        })
        .collect();

    // (horizontal distance, height) of the first hit per ray, ground first
    let mut hits: Vec<Option<(f64, f64)>> = Vec::with_capacity(beams.len() * n_az);
    for &(cos_el, _, tan_el) in &beams {
        let ground = if tan_el < 0.0 {
            let s = -h / tan_el;
            (s / cos_el <= lidar.max_range).then_some((s, 0.0))
        } else {
            None
        };
        hits.extend(std::iter::repeat_n(ground, n_az));
    }

    for cyl in &cones {
        let dist = cyl.center.norm();
        let half_angle = if dist > cyl.dims.radius {
            (cyl.dims.radius / dist).asin()
        } else {
            std::f64::consts::PI
        };
        let center_az = cyl.center.angle();
        let lo = ((center_az - half_angle) / az_step).floor() as i64;
        let hi = ((center_az + half_angle) / az_step).ceil() as i64;
        let span = (hi - lo).min(n_az as i64 - 1);
        for k in lo..=lo + span {
            let idx = k.rem_euclid(n_az as i64) as usize;
            let u = Vec2::from_polar(1.0, idx as f64 * az_step);
            for (b, &(cos_el, _, tan_el)) in beams.iter().enumerate() {
                if let Some((s, z)) = ray_cylinder(u, tan_el, h, cyl) {
                    if s / cos_el > lidar.max_range {
                        continue;
                    }
                    let slot = &mut hits[b * n_az + idx];
                    if slot.is_none_or(|(best, _)| s < best) {
                        *slot = Some((s, z));
                    }
                }
            }
        }
    }

    let mut points = Vec::new();
    for (b, &(cos_el, sin_el, _)) in beams.iter().enumerate() {
        for idx in 0..n_az {
            let Some((s, z)) = hits[b * n_az + idx] else {
                continue;
            };
            let range = s / cos_el;
            let noisy = range + gaussian(rng, noise.lidar_sigma);
            if noisy <= 0.0 || noisy > lidar.max_range {
                continue;
            }
            let u = Vec2::from_polar(1.0, idx as f64 * az_step);
            let horiz = if noise.lidar_sigma > 0.0 {
                noisy * cos_el
            } else {
                s
            };
            let height = if noise.lidar_sigma > 0.0 {
                h + noisy * sin_el
            } else {
                z
            };
            points.push(LidarPoint {
                x: u.x * horiz,
                y: u.y * horiz,
                z: height,
            });
        }
    }
    Ok(LidarScan { timestamp, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;
    use crate::rng;
    use crate::world::{Cone, ConeColor};

    fn layout_with(cones: Vec<Cone>) -> TrackLayout {
        TrackLayout {
            half_width: 1.75,
            start_pose: Pose2::IDENTITY,
            centerline: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
            ],
            left_cones: cones,
            right_cones: vec![],
        }
    }

    fn tree_at_origin() -> TransformTree {
        TransformTree {
            base_to_lidar: Pose2::IDENTITY,
            ..Default::default()
        }
    }

    fn scan(
        layout: &TrackLayout,
        noise: &SensorNoiseConfig,
        cfg: &LidarConfig,
        seed: u64,
    ) -> LidarScan {
        simulate_lidar(
            layout,
            &VehicleState::default(),
            &tree_at_origin(),
            cfg,
            noise,
            0.0,
            &mut rng::stream(seed, "t"),
        )
        .unwrap()
    }

    /// Independent oracle: march along the ray in small steps until the
    /// first sample inside a cylinder or below the ground.
    fn march(
        u: Vec2,
        el: f64,
        h: f64,
        cones: &[(Vec2, ConeDimensions)],
        max_range: f64,
    ) -> Option<f64> {
        let step = 0.0005;
        let dir = (u.x * el.cos(), u.y * el.cos(), el.sin());
        let mut t = 0.0;
        while t <= max_range {
            let p = (dir.0 * t, dir.1 * t, h + dir.2 * t);
            if p.2 <= 0.0 {
                return Some(t);
            }
            for (c, d) in cones {
                if Vec2::new(p.0, p.1).dist(*c) <= d.radius && p.2 <= d.height {
                    return Some(t);
                }
            }
            t += step;
        }
        None
    }

    #[test]
    fn single_cone_ahead_noiseless() {
        let layout = layout_with(vec![Cone::new(Vec2::new(5.0, 0.0), ConeColor::Blue)]);
        let s = scan(
            &layout,
            &SensorNoiseConfig::noiseless(),
            &LidarConfig::default(),
            1,
        );
        let cone_pts: Vec<_> = s.points.iter().filter(|p| p.z > 0.0).collect();
        assert!(cone_pts.len() >= 5);
        for p in &cone_pts {
            assert!(p.z > 0.0 && p.z <= 0.325 + 1e-12);
            assert!(p.y.abs() <= 0.15 + 1e-9);
            assert!(p.x >= 4.85 - 1e-9 && p.x <= 5.0 + 1e-9);
        }
        let ys: Vec<f64> = cone_pts.iter().map(|p| p.y).collect();
        let spread = ys.iter().cloned().fold(f64::MIN, f64::max)
            - ys.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 0.30);
    }

    #[test]
    fn cone_beyond_range_returns_nothing() {
        let layout = layout_with(vec![Cone::new(Vec2::new(40.0, 0.0), ConeColor::Blue)]);
        let s = scan(
            &layout,
            &SensorNoiseConfig::default(),
            &LidarConfig::default(),
            2,
        );
        assert!(s.points.iter().all(|p| p.z < 0.05));
        assert!(s
            .points
            .iter()
            .all(|p| (p.x.hypot(p.y).hypot(p.z - 0.5)) <= 35.0));
    }

    #[test]
    fn empty_scene_is_ground_only() {
        let noise = SensorNoiseConfig::default();
        let s = scan(&layout_with(vec![]), &noise, &LidarConfig::default(), 3);
        assert!(!s.points.is_empty());
        assert!(s
            .points
            .iter()
            .all(|p| p.z.abs() <= 3.0 * noise.lidar_sigma));
    }

    #[test]
    fn exactly_sixteen_beams() {
        let cfg = LidarConfig::default();
        assert_eq!(cfg.beam_elevations_deg.len(), 16);
        let s = scan(
            &layout_with(vec![]),
            &SensorNoiseConfig::noiseless(),
            &cfg,
            4,
        );
        let mut heights: Vec<i64> = s
            .points
            .iter()
            .map(|p| (p.x.hypot(p.y) * 1e6).round() as i64)
            .collect();
        heights.sort();
        heights.dedup();
        assert!(heights.len() <= 16);
    }

    #[test]
    fn seeded_determinism() {
        let layout = layout_with(vec![Cone::new(Vec2::new(8.0, 1.0), ConeColor::Yellow)]);
        let a = scan(
            &layout,
            &SensorNoiseConfig::default(),
            &LidarConfig::default(),
            9,
        );
        let b = scan(
            &layout,
            &SensorNoiseConfig::default(),
            &LidarConfig::default(),
            9,
        );
        assert_eq!(a, b);
    }

    #[test]
    fn occlusion_matches_ray_march_oracle() {
        let cones = vec![
            Cone::new(Vec2::new(4.0, 0.0), ConeColor::Blue),
            Cone::new(Vec2::new(7.0, 0.1), ConeColor::Yellow),
            Cone::new(Vec2::new(6.0, 2.0), ConeColor::LargeOrange),
        ];
        let layout = layout_with(cones.clone());
        let cfg = LidarConfig {
            azimuth_resolution_deg: 1.0,
            max_range: 12.0,
            ..Default::default()
        };
        let s = scan(&layout, &SensorNoiseConfig::noiseless(), &cfg, 5);
        let oracle_cones: Vec<_> = cones
            .iter()
            .map(|c| (c.position, ConeDimensions::for_color(c.color)))
            .collect();
        // check every ray that points at the cones
        let mut checked = 0;
        for el_deg in &cfg.beam_elevations_deg {
            let el = el_deg.to_radians();
            for k in -30..=30 {
                let az = (k as f64).to_radians();
                let u = Vec2::from_polar(1.0, az);
                let expected = march(u, el, cfg.mount_height, &oracle_cones, cfg.max_range);
                let got = s.points.iter().find(|p| {
                    let a = p.y.atan2(p.x);
                    (a - az).abs() < 1e-9
                        && ((p.z - cfg.mount_height) / p.x.hypot(p.y) - el.tan()).abs() < 1e-9
                });
                match (expected, got) {
                    (None, None) => {}
                    (Some(t), Some(p)) => {
                        let r = p.x.hypot(p.y).hypot(p.z - cfg.mount_height);
                        assert!((r - t).abs() < 2e-3, "el {el_deg} az {k}: {r} vs {t}");
                        checked += 1;
                    }
                    (e, g) => panic!("el {el_deg} az {k}: oracle {e:?} vs scan {g:?}"),
                }
            }
        }
        assert!(checked > 100);
    }
}
