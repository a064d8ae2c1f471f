use crate::fusion::FusedCone;
use crate::geometry::Vec2;

use super::PlanningParams;

/// Nearest-neighbour boundary chaining, kept as a baseline for
/// [`super::classify_boundaries`]. Each side starts from the nearest cone
/// on its side of the heading and repeatedly grows by the globally closest
/// (chain tail, free cone) link within `chain_link_distance` that turns at
/// most 60° from the chain's current direction. Quadratic in the number of
/// cones.
pub fn chain_boundaries(
    cones: &[FusedCone],
    params: &PlanningParams,
) -> (Vec<FusedCone>, Vec<FusedCone>) {
    let mut free: Vec<FusedCone> = cones
        .iter()
        .filter(|c| c.position.x > 0.0 && c.position.norm() <= params.horizon)
        .copied()
        .collect();
    let mut chains: [Vec<FusedCone>; 2] = [Vec::new(), Vec::new()];
    for (side, chain) in chains.iter_mut().enumerate() {
        let seed = free
            .iter()
            .enumerate()
            .filter(|(_, c)| (c.position.y >= 0.0) == (side == 0))
            .min_by(|a, b| a.1.position.norm().total_cmp(&b.1.position.norm()))
            .map(|(i, _)| i);
        if let Some(i) = seed {
            chain.push(free.remove(i));
        }
    }
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (side, chain) in chains.iter().enumerate() {
            let Some(tail) = chain.last() else { continue };
            let heading = match chain.len() {
                1 => Vec2::new(1.0, 0.0),
                n => (chain[n - 1].position - chain[n - 2].position).normalized(),
            };
            for (i, c) in free.iter().enumerate() {
                let link = c.position - tail.position;
                let d = link.norm();
                let forward = link.dot(heading) >= 0.5 * d;
                if forward && d <= params.chain_link_distance && best.is_none_or(|b| d < b.0) {
                    best = Some((d, side, i));
                }
            }
        }
        let Some((_, side, i)) = best else { break };
        chains[side].push(free.remove(i));
    }
    let [mut left, mut right] = chains;
    for side in [&mut left, &mut right] {
        side.sort_by(|a, b| {
            a.position
                .x
                .total_cmp(&b.position.x)
                .then(a.position.y.total_cmp(&b.position.y))
        });
    }
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::SourceSet;
    use crate::planning::classify_boundaries;
    use crate::world::ConeColor;
    use std::time::Instant;

    fn corridor(n: usize, curvature: f64) -> Vec<FusedCone> {
        let mut out = Vec::new();
        for i in 0..n {
            let s = 1.0 + 4.0 * i as f64;
            let centre = Vec2::new(s, 0.5 * curvature * s * s);
            let normal = Vec2::new(-curvature * s, 1.0).normalized();
            for side in [1.0, -1.0] {
                out.push(FusedCone {
                    position: centre + normal * (1.75 * side),
                    color: ConeColor::Unknown,
                    confidence: 0.8,
                    sources: SourceSet::default(),
                    weights: None,
                });
            }
        }
        out
    }

    #[test]
    fn agrees_with_classification_on_simple_layouts() {
        let p = PlanningParams::default();
        for k in [0.0, 0.01, -0.01] {
            let cones = corridor(4, k);
            assert_eq!(
                chain_boundaries(&cones, &p),
                classify_boundaries(&cones, &p)
            );
        }
    }

    #[test]
    fn slower_on_large_layouts() {
        let p = PlanningParams {
            horizon: 1e4,
            ..Default::default()
        };
        let cones = corridor(100, 0.0);
        assert_eq!(
            chain_boundaries(&cones, &p),
            classify_boundaries(&cones, &p)
        );
        let time = |f: &dyn Fn()| {
            let t = Instant::now();
            for _ in 0..20 {
                f();
            }
            t.elapsed()
        };
        let chained = time(&|| {
            std::hint::black_box(chain_boundaries(std::hint::black_box(&cones), &p));
        });
        let classified = time(&|| {
            std::hint::black_box(classify_boundaries(std::hint::black_box(&cones), &p));
        });
        assert!(chained > classified * 3, "{chained:?} vs {classified:?}");
    }
}
