use rand::Rng;
use rand_distr::{Distribution, Poisson, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose2, Vec2};
use crate::rng::SimRng;
use crate::world::{ConeColor, ConeDimensions, TrackLayout, VehicleState};

use super::{gaussian, SensorNoiseConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraConfig {
    pub focal_px: f64,
    pub image_width_px: f64,
    pub image_height_px: f64,
    pub fov_deg: f64,
    pub max_depth: f64,
    /// Optical centre pose in `base_link`, x forward.
    pub mount: Pose2,
    pub mount_height: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            focal_px: 640.0,
            image_width_px: 1280.0,
            image_height_px: 720.0,
            fov_deg: 90.0,
            max_depth: 20.0,
            mount: Pose2::new(0.9, 0.0, 0.0),
            mount_height: 0.9,
        }
    }
}

impl CameraConfig {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.focal_px > 0.0) {
            errors.push(format!("{prefix}.focal_px: must be > 0"));
        }
        if !(self.image_width_px > 0.0) {
            errors.push(format!("{prefix}.image_width_px: must be > 0"));
        }
        if !(self.image_height_px > 0.0) {
            errors.push(format!("{prefix}.image_height_px: must be > 0"));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            errors.push(format!("{prefix}.fov_deg: must lie in (0, 180)"));
        }
        if !(self.max_depth > 0.0) {
            errors.push(format!("{prefix}.max_depth: must be > 0"));
        }
    }

    fn confidence_at(depth: f64) -> f64 {
        // 0.95 at 2 m falling linearly to 0.5 at 20 m
        let t = ((depth - 2.0) / 18.0).clamp(0.0, 1.0);
        0.95 - 0.45 * t
    }
}

/// Detection-level camera output: bearing positive to the left, depth along
/// the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraDetection {
    pub bearing: f64,
    pub raw_depth: f64,
    pub bbox_height_px: f64,
    pub color: ConeColor,
    pub confidence: f64,
}

impl CameraDetection {
    /// Position in the camera frame for a given depth.
    pub fn position_at_depth(&self, depth: f64) -> Vec2 {
        Vec2::new(depth, depth * self.bearing.tan())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub timestamp: f64,
    pub detections: Vec<CameraDetection>,
}

pub fn simulate_camera(
    layout: &TrackLayout,
    truth: &VehicleState,
    camera: &CameraConfig,
    noise: &SensorNoiseConfig,
    timestamp: f64,
    rng: &mut SimRng,
) -> Result<CameraFrame> {
    let base = truth.pose();
    if !base.is_finite() {
        return Err(Error::NonFinite("vehicle pose"));
    }
    let cam = base.compose(camera.mount);
    let half_fov = camera.fov_deg.to_radians() / 2.0;

    struct Visible {
        local: Vec2,
        bearing: f64,
        dims: ConeDimensions,
        color: ConeColor,
    }
    let mut visible: Vec<Visible> = layout
        .cones()
        .filter_map(|c| {
            let local = cam.inverse_transform_point(c.position);
            let bearing = local.y.atan2(local.x);
            (local.x > 0.0 && local.x <= camera.max_depth && bearing.abs() <= half_fov).then(|| {
                Visible {
                    local,
                    bearing,
                    dims: ConeDimensions::for_color(c.color),
                    color: c.color,
                }
            })
        })
        .collect();
    visible.sort_by(|a, b| a.local.norm().total_cmp(&b.local.norm()));

    let mut detections = Vec::new();
    for (i, cone) in visible.iter().enumerate() {
        let occluded = visible[..i].iter().any(|near| {
            let half = (near.dims.radius / near.local.norm()).min(1.0).asin();
            (near.bearing - cone.bearing).abs() < half
        });
        if occluded {
            continue;
        }
        if noise.false_negative_rate > 0.0 && rng.gen::<f64>() < noise.false_negative_rate {
            continue;
        }
        let color = sample_color(rng, noise.confusion_row(cone.color));
        let depth = cone.local.x;
        let raw_depth = (depth * (1.0 + gaussian(rng, noise.camera_depth_sigma_rel)))
            .clamp(1e-3, camera.max_depth);
        let bbox = (camera.focal_px * cone.dims.height / depth
            + gaussian(rng, noise.camera_bbox_sigma_px))
        .max(1.0);
        let bearing = cone.bearing + gaussian(rng, noise.camera_bearing_sigma);
        detections.push(CameraDetection {
            bearing,
            raw_depth,
            bbox_height_px: bbox,
            color,
            confidence: CameraConfig::confidence_at(depth),
        });
    }

    if noise.false_positive_rate > 0.0 {
        let n = Poisson::new(noise.false_positive_rate)
            .map(|p| p.sample(rng) as usize)
            .unwrap_or(0);
        for _ in 0..n {
            let depth = rng.gen_range(2.0..camera.max_depth);
            detections.push(CameraDetection {
                bearing: rng.gen_range(-half_fov..half_fov),
                raw_depth: depth,
                bbox_height_px: camera.focal_px * ConeDimensions::SMALL.height / depth,
                color: ConeColor::Unknown,
                confidence: rng.gen_range(0.2..0.5),
            });
        }
    }
    Ok(CameraFrame {
        timestamp,
        detections,
    })
}

fn sample_color(rng: &mut SimRng, row: &[f64; 5]) -> ConeColor {
    if let Some(i) = row.iter().position(|p| *p == 1.0) {
        return ConeColor::ALL[i];
    }
    WeightedIndex::new(row)
        .map(|w| ConeColor::ALL[w.sample(rng)])
        .unwrap_or(ConeColor::Unknown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::world::Cone;

    fn scene(cones: Vec<Cone>) -> TrackLayout {
        TrackLayout {
            half_width: 1.75,
            start_pose: Pose2::IDENTITY,
            centerline: vec![],
            left_cones: cones,
            right_cones: vec![],
        }
    }

    fn cam() -> CameraConfig {
        CameraConfig {
            mount: Pose2::IDENTITY,
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_cone_ahead() {
        let layout = scene(vec![Cone::new(Vec2::new(10.0, 0.0), ConeColor::Blue)]);
        let f = simulate_camera(
            &layout,
            &VehicleState::default(),
            &cam(),
            &SensorNoiseConfig::noiseless(),
            0.0,
            &mut rng::stream(1, "c"),
        )
        .unwrap();
        assert_eq!(f.detections.len(), 1);
        let d = f.detections[0];
        assert_eq!(d.bearing, 0.0);
        assert_eq!(d.raw_depth, 10.0);
        assert_eq!(d.color, ConeColor::Blue);
        assert!((d.bbox_height_px - 640.0 * 0.325 / 10.0).abs() < 1e-12);
        assert!((d.confidence - (0.95 - 0.45 * 8.0 / 18.0)).abs() < 1e-12);
    }

    #[test]
    fn beyond_depth_envelope() {
        let layout = scene(vec![Cone::new(Vec2::new(25.0, 0.0), ConeColor::Blue)]);
        let f = simulate_camera(
            &layout,
            &VehicleState::default(),
            &cam(),
            &SensorNoiseConfig::noiseless(),
            0.0,
            &mut rng::stream(1, "c"),
        )
        .unwrap();
        assert!(f.detections.is_empty());
    }

    #[test]
    fn outside_fov_and_occluded() {
        let layout = scene(vec![
            Cone::new(Vec2::new(2.0, 5.0), ConeColor::Blue),
            Cone::new(Vec2::new(5.0, 0.0), ConeColor::Blue),
            Cone::new(Vec2::new(10.0, 0.0), ConeColor::Yellow),
        ]);
        let f = simulate_camera(
            &layout,
            &VehicleState::default(),
            &cam(),
            &SensorNoiseConfig::noiseless(),
            0.0,
            &mut rng::stream(1, "c"),
        )
        .unwrap();
        assert_eq!(f.detections.len(), 1);
        assert_eq!(f.detections[0].raw_depth, 5.0);
    }

    #[test]
    fn identity_confusion_never_mislabels() {
        let layout = scene(vec![Cone::new(Vec2::new(6.0, 1.0), ConeColor::Blue)]);
        let mut noise = SensorNoiseConfig::noiseless();
        noise.camera_depth_sigma_rel = 0.05;
        let mut rng = rng::stream(3, "c");
        let mut blue = 0;
        for _ in 0..10_000 {
            let f = simulate_camera(
                &layout,
                &VehicleState::default(),
                &cam(),
                &noise,
                0.0,
                &mut rng,
            )
            .unwrap();
            blue += f
                .detections
                .iter()
                .filter(|d| d.color == ConeColor::Blue)
                .count();
        }
        assert_eq!(blue, 10_000);
    }

    #[test]
    fn confusion_sampling_follows_row() {
        let layout = scene(vec![Cone::new(Vec2::new(6.0, 0.0), ConeColor::Orange)]);
        let noise = SensorNoiseConfig {
            false_negative_rate: 0.0,
            false_positive_rate: 0.0,
            ..Default::default()
        };
        let mut rng = rng::stream(4, "c");
        let mut counts = [0usize; 5];
        let n = 20_000;
        for _ in 0..n {
            let f = simulate_camera(
                &layout,
                &VehicleState::default(),
                &cam(),
                &noise,
                0.0,
                &mut rng,
            )
            .unwrap();
            counts[f.detections[0].color.index()] += 1;
        }
        let orange = counts[0] as f64 / n as f64;
        let large = counts[3] as f64 / n as f64;
        assert!((orange - 0.90).abs() < 0.01, "{orange}");
        assert!((large - 0.08).abs() < 0.01, "{large}");
    }

    #[test]
    fn raw_depth_within_envelope_and_confidence_in_range() {
        let cones = (1..=19)
            .map(|i| Cone::new(Vec2::new(i as f64, 0.3 * i as f64), ConeColor::Yellow))
            .collect();
        let layout = scene(cones);
        let noise = SensorNoiseConfig {
            camera_depth_sigma_rel: 0.2,
            false_positive_rate: 3.0,
            ..Default::default()
        };
        let mut rng = rng::stream(5, "c");
        for _ in 0..200 {
            let f = simulate_camera(
                &layout,
                &VehicleState::default(),
                &cam(),
                &noise,
                0.0,
                &mut rng,
            )
            .unwrap();
            for d in f.detections {
                assert!(d.raw_depth > 0.0 && d.raw_depth <= 20.0);
                assert!((0.0..=1.0).contains(&d.confidence));
            }
        }
    }
}
