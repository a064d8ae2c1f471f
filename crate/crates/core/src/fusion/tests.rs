use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn model() -> CameraModel {
    CameraModel {
        focal_px: 500.0,
        image_width_px: 1280.0,
        image_height_px: 720.0,
        base_to_camera: Pose2::IDENTITY,
        base_to_lidar: Pose2::IDENTITY,
        camera_height: 0.5,
        lidar_height: 0.5,
    }
}

fn obs(x: f64, y: f64, conf: f64, source: Source) -> ConeObservation {
    let color = if source == Source::Camera {
        ConeColor::Blue
    } else {
        ConeColor::Unknown
    };
    ConeObservation {
        position: Vec2::new(x, y),
        color,
        confidence: conf,
        source,
        point_count: 0,
    }
}

fn lid(x: f64, y: f64) -> ConeObservation {
    obs(x, y, 0.8, Source::Lidar)
}

fn cam_at(bearing_deg: f64, depth: f64) -> ConeObservation {
    let b = bearing_deg.to_radians();
    obs(depth, depth * b.tan(), 0.9, Source::Camera)
}

fn pair(pc: Vec2, pl: Vec2) -> FusionMatch {
    FusionMatch {
        lidar_index: 0,
        camera_index: 0,
        lidar_obs: obs(pl.x, pl.y, 0.7, Source::Lidar),
        camera_det: obs(pc.x, pc.y, 0.9, Source::Camera),
        distance_score: 0.0,
        cost: 0.0,
    }
}

#[test]
fn projection_examples() {
    let m = model();
    let px = project_to_image(
        &[
            LidarPoint {
                x: 5.0,
                y: 0.0,
                z: 0.0,
            },
            LidarPoint {
                x: -5.0,
                y: 0.0,
                z: 0.0,
            },
            LidarPoint {
                x: 10.0,
                y: 1.0,
                z: 0.0,
            },
        ],
        &m,
    );
    assert_eq!(px[0], Some(Pixel { u: 640.0, v: 360.0 }));
    assert_eq!(px[1], None);
    let p = px[2].unwrap();
    assert!((p.u - (640.0 - 50.0)).abs() < 1e-9);
}

#[test]
fn projection_outside_image() {
    let px = project_to_image(
        &[LidarPoint {
            x: 1.0,
            y: 5.0,
            z: 0.0,
        }],
        &model(),
    );
    assert_eq!(px[0], None);
}

#[test]
fn association_examples() {
    let p = FusionParams::default();
    let a = associate(&[lid(10.0, 0.0)], &[cam_at(0.0, 10.0)], &model(), &p);
    assert_eq!(a.matches.len(), 1);

    let a = associate(&[lid(10.0, 0.0)], &[cam_at(20.0, 10.0)], &model(), &p);
    assert!(a.matches.is_empty());
    assert_eq!((a.unmatched_lidar.len(), a.unmatched_camera.len()), (1, 1));

    let a = associate(
        &[lid(8.0, 0.0), lid(12.0, 0.0)],
        &[cam_at(0.0, 8.2)],
        &model(),
        &p,
    );
    assert_eq!(a.matches.len(), 1);
    assert_eq!(a.matches[0].lidar_index, 0);
    assert_eq!(a.unmatched_lidar, vec![1]);
}

#[test]
fn association_exhaustive_cost_comparison() {
    // both pairings within gates: the cheaper one must win
    let p = FusionParams {
        depth_gate: 10.0,
        ..Default::default()
    };
    let lidar = [lid(8.0, 0.0), lid(12.0, 0.0)];
    let cam = [cam_at(0.0, 8.2)];
    let costs: Vec<f64> = lidar
        .iter()
        .map(|l| p.w_depth * (l.position.x - 8.2).abs() - p.w_confidence * (0.9 + l.confidence))
        .collect();
    let best = if costs[0] <= costs[1] { 0 } else { 1 };
    let a = associate(&lidar, &cam, &model(), &p);
    assert_eq!(a.matches[0].lidar_index, best);
    assert!((a.matches[0].cost - costs[best]).abs() < 1e-12);
}

#[test]
fn eq3_examples() {
    let p = FusionParams::default();
    let f = fuse_position(
        &pair(Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)),
        (0.6, 0.4),
        &p,
    )
    .unwrap();
    assert!((f.position.x - 1.4).abs() < 1e-12 && f.position.y == 0.0);
    assert_eq!(f.color, ConeColor::Blue);

    let f = fuse_position(
        &pair(Vec2::new(1.0, 2.0), Vec2::new(3.0, 4.0)),
        (0.5, 0.5),
        &p,
    )
    .unwrap();
    assert!(f.position.dist(Vec2::new(2.0, 3.0)) < 1e-12);

    let f = fuse_position(
        &pair(Vec2::new(1.0, 2.0), Vec2::new(3.0, 4.0)),
        (0.0, 0.7),
        &p,
    )
    .unwrap();
    assert_eq!(f.position, Vec2::new(3.0, 4.0));

    assert!(matches!(
        fuse_position(&pair(Vec2::ZERO, Vec2::ZERO), (0.0, 0.0), &p),
        Err(Error::ZeroWeight)
    ));
}

#[test]
fn agreement_bonus() {
    let p = FusionParams::default();
    let close = fuse_position(
        &pair(Vec2::new(5.0, 0.0), Vec2::new(5.1, 0.0)),
        (0.5, 0.5),
        &p,
    )
    .unwrap();
    let far = fuse_position(
        &pair(Vec2::new(5.0, 0.0), Vec2::new(5.5, 0.0)),
        (0.5, 0.5),
        &p,
    )
    .unwrap();
    assert!((close.confidence - 0.9).abs() < 1e-12);
    assert!((far.confidence - 0.9).abs() < 1e-12);
    let m = pair(Vec2::new(5.0, 0.0), Vec2::new(5.1, 0.0));
    let heavy_lidar = fuse_position(&m, (0.1, 0.9), &p).unwrap();
    assert!((heavy_lidar.confidence - (0.1f64 * 0.9 + 0.9 * 0.7 + 0.1).max(0.9)).abs() < 1e-12);
}

#[test]
fn weight_examples() {
    let p = FusionParams::default();
    let w = |light, distance| {
        adaptive_weights(
            &WeightContext {
                ambient_light: light,
                distance,
                consistency: 1.0,
            },
            &p,
        )
    };
    let (c, l) = w(1.0, 3.0);
    assert!(c > l);
    let (c, l) = w(0.0, 3.0);
    assert!(l > c);
    assert!(w(0.5, 30.0).1 > w(0.5, 3.0).1);
}

#[test]
fn fuse_frame_examples() {
    let p = FusionParams::default();
    let ctx = WeightContext {
        ambient_light: 0.8,
        distance: 0.0,
        consistency: 1.0,
    };
    let lidar = [lid(5.0, 1.0), lid(7.0, -1.0), lid(9.0, 1.5)];
    let out = fuse_frame(&lidar, &[], &model(), &ctx, &p);
    assert_eq!(out.len(), 3);
    for (o, l) in out.iter().zip(&lidar) {
        assert!(!o.sources.is_fused() && o.sources.lidar);
        assert_eq!(o.color, ConeColor::Unknown);
        assert!((o.confidence - 0.8 * 0.6).abs() < 1e-12);
        assert_eq!(o.position, l.position);
    }

    let cams: Vec<ConeObservation> = lidar
        .iter()
        .map(|l| obs(l.position.x, l.position.y, 0.9, Source::Camera))
        .collect();
    let out = fuse_frame(&lidar, &cams, &model(), &ctx, &p);
    assert_eq!(out.len(), 3);
    assert!(out
        .iter()
        .all(|o| o.sources.is_fused() && o.color == ConeColor::Blue));

    let out = fuse_frame(&[lid(5.0, 0.0)], &[cam_at(-30.0, 15.0)], &model(), &ctx, &p);
    assert_eq!(out.len(), 2);
    assert!(out.iter().all(|o| !o.sources.is_fused()));
    assert!((out[0].confidence - 0.48).abs() < 1e-12 && (out[1].confidence - 0.54).abs() < 1e-12);
}

#[test]
fn lidar_range_correction() {
    let c = DepthCorrection { a: 1.0, b: 0.1 };
    let q = c.apply_from(Pose2::new(1.0, 0.0, 0.0), Vec2::new(4.0, 4.0));
    assert!(q.dist(Vec2::new(1.0, 0.0) + Vec2::new(3.0, 4.0) * (5.1 / 5.0)) < 1e-12);
}

/// Maximum-cardinality, then minimum-cost matching by enumeration.
fn brute_force(pairs: &[(f64, f64, usize, usize)], nl: usize, nc: usize) -> (usize, f64) {
    fn go(
        pairs: &[(f64, f64, usize, usize)],
        k: usize,
        lu: &mut Vec<bool>,
        cu: &mut Vec<bool>,
    ) -> (usize, f64) {
        if k == pairs.len() {
            return (0, 0.0);
        }
        let mut best = go(pairs, k + 1, lu, cu);
        let (cost, _, l, c) = pairs[k];
        if !lu[l] && !cu[c] {
            lu[l] = true;
            cu[c] = true;
            let (n, s) = go(pairs, k + 1, lu, cu);
            lu[l] = false;
            cu[c] = false;
            if n + 1 > best.0 || (n + 1 == best.0 && s + cost < best.1) {
                best = (n + 1, s + cost);
            }
        }
        best
    }
    go(pairs, 0, &mut vec![false; nl], &mut vec![false; nc])
}

#[test]
fn greedy_matches_brute_force_on_sparse_scenes() {
    let p = FusionParams::default();
    let m = model();
    for seed in 0..200u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let nl = rng.gen_range(0..=6);
        let lidar: Vec<ConeObservation> = (0..nl)
            .map(|i| {
                lid(
                    4.0 + 2.5 * i as f64,
                    if i % 2 == 0 { 1.6 } else { -1.6 } + rng.gen_range(-0.2..0.2),
                )
            })
            .collect();
        let keep: Vec<bool> = (0..nl).map(|_| rng.gen_bool(0.8)).collect();
        let mut cams: Vec<ConeObservation> = lidar
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(l, _)| {
                let mut c =
                    l.position + Vec2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.05..0.05));
                c.x = c.x.max(0.5);
                obs(c.x, c.y, rng.gen_range(0.5..1.0), Source::Camera)
            })
            .collect();
        while cams.len() < 6 && rng.gen_bool(0.3) {
            cams.push(obs(
                rng.gen_range(2.0..20.0),
                rng.gen_range(-6.0..6.0),
                0.3,
                Source::Camera,
            ));
        }
        let assoc = associate(&lidar, &cams, &m, &p);
        let pairs = gated_pairs(&lidar, &cams, &m, &p);
        let (n, cost) = brute_force(&pairs, lidar.len(), cams.len());
        let greedy: f64 = assoc.matches.iter().map(|x| x.cost).sum();
        assert_eq!(assoc.matches.len(), n, "seed {seed}");
        assert!(
            (greedy - cost).abs() < 1e-9,
            "seed {seed}: {greedy} vs {cost}"
        );
    }
}

proptest! {
    #[test]
    fn eq3_convexity(ax in -20.0..20.0f64, ay in -20.0..20.0f64, bx in -20.0..20.0f64, by in -20.0..20.0f64,
                     wc in 0.0..1.0f64, wl in 0.001..1.0f64) {
        let (pc, pl) = (Vec2::new(ax, ay), Vec2::new(bx, by));
        let f = fuse_position(&pair(pc, pl), (wc, wl), &FusionParams::default()).unwrap();
        let (d, _) = crate::geometry::point_segment_distance(f.position, pc, pl);
        prop_assert!(d <= 1e-12 * (1.0 + pc.norm() + pl.norm()));
        prop_assert!((0.0..=1.0).contains(&f.confidence));
    }

    #[test]
    fn weights_positive_and_normalised(light in 0.0..=1.0f64, d in 0.0..100.0f64, c in 0.0..=1.0f64) {
        let (wc, wl) = adaptive_weights(&WeightContext { ambient_light: light, distance: d, consistency: c }, &FusionParams::default());
        prop_assert!(wc > 0.0 && wl > 0.0);
        prop_assert!((wc + wl - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn weights_monotone(l1 in 0.0..=1.0f64, l2 in 0.0..=1.0f64, d1 in 0.0..40.0f64, d2 in 0.0..40.0f64) {
        let p = FusionParams::default();
        let w = |light, distance| adaptive_weights(&WeightContext { ambient_light: light, distance, consistency: 1.0 }, &p);
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        prop_assert!(w(hi, 5.0).0 >= w(lo, 5.0).0 - 1e-12);
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(w(0.5, far).1 >= w(0.5, near).1 - 1e-12);
    }

    #[test]
    fn degradation_never_fuses(xs in proptest::collection::vec((1.0..20.0f64, -5.0..5.0f64), 0..8), lidar_only in any::<bool>()) {
        let p = FusionParams::default();
        let ctx = WeightContext { ambient_light: 0.8, distance: 0.0, consistency: 1.0 };
        let o: Vec<ConeObservation> = xs.iter().map(|&(x, y)| lid(x, y)).collect();
        let out = if lidar_only {
            fuse_frame(&o, &[], &model(), &ctx, &p)
        } else {
            fuse_frame(&[], &o, &model(), &ctx, &p)
        };
        prop_assert_eq!(out.len(), o.len());
        prop_assert!(out.iter().all(|f| !f.sources.is_fused()));
    }

    #[test]
    fn assignment_is_disjoint(l in proptest::collection::vec((1.0..15.0f64, -4.0..4.0f64), 0..6),
                              c in proptest::collection::vec((1.0..15.0f64, -4.0..4.0f64), 0..6)) {
        let lidar: Vec<ConeObservation> = l.iter().map(|&(x, y)| lid(x, y)).collect();
        let cams: Vec<ConeObservation> = c.iter().map(|&(x, y)| obs(x, y, 0.9, Source::Camera)).collect();
        let a = associate(&lidar, &cams, &model(), &FusionParams::default());
        let mut li: Vec<usize> = a.matches.iter().map(|m| m.lidar_index).chain(a.unmatched_lidar.iter().copied()).collect();
        let mut ci: Vec<usize> = a.matches.iter().map(|m| m.camera_index).chain(a.unmatched_camera.iter().copied()).collect();
        li.sort_unstable();
        ci.sort_unstable();
        prop_assert_eq!(li, (0..lidar.len()).collect::<Vec<_>>());
        prop_assert_eq!(ci, (0..cams.len()).collect::<Vec<_>>());
        prop_assert!(a.matches.iter().all(|m| m.distance_score >= 0.0));
    }
}
