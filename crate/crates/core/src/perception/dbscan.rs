use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    pub eps: f64,
    pub min_samples: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            eps: 0.5,
            min_samples: 5,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            errors.push(format!("{prefix}.eps must be positive, got {}", self.eps));
        }
        if self.min_samples == 0 {
            errors.push(format!("{prefix}.min_samples must be at least 1"));
        }
    }
}

/// Uniform grid with `eps`-sized cells; a radius query touches 3×3 cells.
/// Point indices are stored contiguously per cell.
struct Grid {
    cell: f64,
    spans: HashMap<(i64, i64), (usize, usize)>,
    order: Vec<usize>,
}

impl Grid {
    fn new(points: &[Vec2], cell: f64) -> Self {
        let keys: Vec<(i64, i64)> = points.iter().map(|p| Self::key(*p, cell)).collect();
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_unstable_by_key(|&i| (keys[i], i));
        let mut spans = HashMap::new();
        let mut start = 0;
        for k in 1..=order.len() {
            if k == order.len() || keys[order[k]] != keys[order[start]] {
                spans.insert(keys[order[start]], (start, k));
                start = k;
            }
        }
        Self { cell, spans, order }
    }

    fn key(p: Vec2, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Visits every index within `eps` of `points[i]`, `i` included, until
    /// `visit` returns false.
    fn for_each_neighbour(
        &self,
        points: &[Vec2],
        i: usize,
        eps: f64,
        mut visit: impl FnMut(usize) -> bool,
    ) {
        let (cx, cy) = Self::key(points[i], self.cell);
        let eps_sq = eps * eps;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(&(a, b)) = self.spans.get(&(cx + dx, cy + dy)) {
                    for &j in &self.order[a..b] {
                        if (points[j] - points[i]).norm_sq() <= eps_sq && !visit(j) {
                            return;
                        }
                    }
                }
            }
        }
    }
}

/// DBSCAN labels: `Some(cluster)` or `None` for noise.
///
/// A core point has at least `min_samples` points (itself included) within
/// `eps`. Clusters are connected components of core points, numbered in
/// order of their lowest core index. A border point joins the cluster of
/// the lowest-indexed core point in its neighbourhood.
pub fn dbscan_labels(points: &[Vec2], params: &ClusterParams) -> Vec<Option<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let eps = params.eps;
    let grid = Grid::new(points, eps.max(1e-9));
    let core: Vec<bool> = (0..n)
        .map(|i| {
            let mut count = 0;
            grid.for_each_neighbour(points, i, eps, |_| {
                count += 1;
                count < params.min_samples
            });
            count >= params.min_samples
        })
        .collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for seed in 0..n {
        if !core[seed] || labels[seed].is_some() {
            continue;
        }
        labels[seed] = Some(next);
        stack.push(seed);
        while let Some(p) = stack.pop() {
            grid.for_each_neighbour(points, p, eps, |q| {
                if core[q] && labels[q].is_none() {
                    labels[q] = Some(next);
                    stack.push(q);
                }
                true
            });
        }
        next += 1;
    }
    for i in (0..n).filter(|&i| !core[i]) {
        let mut owner: Option<usize> = None;
        grid.for_each_neighbour(points, i, eps, |j| {
            if core[j] && owner.is_none_or(|o| j < o) {
                owner = Some(j);
            }
            true
        });
        labels[i] = owner.and_then(|j| labels[j]);
    }
    labels
}

/// Clusters as ascending index lists, in label order. Noise is dropped.
pub fn cluster_cones(points: &[Vec2], params: &ClusterParams) -> Vec<Vec<usize>> {
    let labels = dbscan_labels(points, params);
    let count = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut clusters = vec![Vec::new(); count];
    for (i, l) in labels.iter().enumerate() {
        if let Some(c) = l {
            clusters[*c].push(i);
        }
    }
    clusters
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Quadratic reference: classic DBSCAN expansion over the full distance
    /// matrix, with the same border tie rule.
    pub fn brute_force(points: &[Vec2], eps: f64, min_samples: usize) -> Vec<Option<usize>> {
        let n = points.len();
        let within = |i: usize, j: usize| points[i].dist(points[j]) <= eps;
        let core: Vec<bool> = (0..n)
            .map(|i| (0..n).filter(|&j| within(i, j)).count() >= min_samples)
            .collect();
        let mut labels = vec![None; n];
        let mut c = 0;
        for i in 0..n {
            if !core[i] || labels[i].is_some() {
                continue;
            }
            let mut frontier = vec![i];
            labels[i] = Some(c);
            let mut k = 0;
            while k < frontier.len() {
                let p = frontier[k];
                k += 1;
                for j in 0..n {
                    if core[j] && labels[j].is_none() && within(p, j) {
                        labels[j] = Some(c);
                        frontier.push(j);
                    }
                }
            }
            c += 1;
        }
        for i in 0..n {
            if !core[i] {
                let owner = (0..n).find(|&j| core[j] && within(i, j));
                labels[i] = owner.and_then(|j| labels[j]);
            }
        }
        labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn blob(center: Vec2, n: usize, spread: f64) -> Vec<Vec2> {
        (0..n)
            .map(|i| center + Vec2::from_polar(spread, i as f64))
            .collect()
    }

    #[test]
    fn five_tight_points_form_one_cluster() {
        let pts = blob(Vec2::new(3.0, 1.0), 5, 0.1);
        assert_eq!(
            cluster_cones(&pts, &ClusterParams::default()),
            vec![vec![0, 1, 2, 3, 4]]
        );
    }

    #[test]
    fn four_points_are_noise() {
        let pts = blob(Vec2::new(3.0, 1.0), 4, 0.1);
        assert!(cluster_cones(&pts, &ClusterParams::default()).is_empty());
        assert!(dbscan_labels(&pts, &ClusterParams::default())
            .iter()
            .all(Option::is_none));
    }

    #[test]
    fn two_distant_groups() {
        let mut pts = blob(Vec2::new(0.0, 0.0), 5, 0.1);
        pts.extend(blob(Vec2::new(10.0, 0.0), 5, 0.1));
        let c = cluster_cones(&pts, &ClusterParams::default());
        assert_eq!(c, vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]);
    }

    #[test]
    fn border_point_goes_to_lowest_core() {
        // the border point (index 10) sees one core point of each group
        let group = |edge: f64, dir: f64| {
            let far = edge + dir * 0.45;
            vec![
                Vec2::new(edge, 0.0),
                Vec2::new(far, 0.0),
                Vec2::new(far, 0.05),
                Vec2::new(far - dir * 0.05, 0.0),
                Vec2::new(far - dir * 0.05, 0.05),
            ]
        };
        let mut pts = group(1.25, 1.0);
        pts.extend(group(0.35, -1.0));
        pts.push(Vec2::new(0.8, 0.0));
        let labels = dbscan_labels(&pts, &ClusterParams::default());
        assert_ne!(labels[0], labels[5]);
        assert_eq!(labels[10], labels[0]);
        assert_eq!(labels, oracle::brute_force(&pts, 0.5, 5));
    }

    #[test]
    fn matches_oracle_on_random_scenes() {
        let params = ClusterParams::default();
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(0..=200);
            let pts: Vec<Vec2> = (0..n)
                .map(|_| Vec2::new(rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0)))
                .collect();
            assert_eq!(
                dbscan_labels(&pts, &params),
                oracle::brute_force(&pts, 0.5, 5),
                "seed {seed}"
            );
        }
    }

    proptest! {
        #[test]
        fn core_partition_is_permutation_invariant(
            pts in proptest::collection::vec((0.0..5.0f64, 0.0..5.0f64), 0..80),
            rot in 0usize..80,
        ) {
            let pts: Vec<Vec2> = pts.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
            let n = pts.len();
            let params = ClusterParams::default();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n.max(1)).collect();
            let shuffled: Vec<Vec2> = perm.iter().map(|&i| pts[i]).collect();
            let a = dbscan_labels(&pts, &params);
            let b = dbscan_labels(&shuffled, &params);
            let core = |p: &[Vec2], i: usize| p.iter().filter(|q| q.dist(p[i]) <= 0.5).count() >= 5;
            // same noise set, and any two core points share a cluster in both or neither
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(a[i].is_none(), b[k].is_none());
            }
            for (k1, &i1) in perm.iter().enumerate() {
                for (k2, &i2) in perm.iter().enumerate() {
                    if core(&pts, i1) && core(&pts, i2) {
                        prop_assert_eq!(a[i1] == a[i2], b[k1] == b[k2]);
                    }
                }
            }
        }
    }
}
