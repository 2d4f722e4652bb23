//! Exact fixed-radius neighbor search.
//!
//! Uniform grid hashing for d <= 3 (cell size chosen at build, usually the
//! dominant query radius), a k-d tree above, and a plain scan for tiny sets.
//! Exactness, not approximation, is the contract: `within` returns exactly
//! the points at distance <= r, in ascending index order.

use crate::point::{dist, Point};
use std::collections::HashMap;

#[derive(Debug)]
pub struct SpatialIndex {
    points: Vec<Point>,
    dim: usize,
    backend: Backend,
}

#[derive(Debug)]
enum Backend {
    Scan,
    Grid { cell: f64, map: HashMap<[i64; 3], Vec<usize>> },
    Kd { nodes: Vec<KdNode>, root: usize },
}

#[derive(Debug)]
struct KdNode {
    point_index: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

impl SpatialIndex {
    /// Build an index; `cell_hint` sizes the hash cells (typical query
    /// radius). Small sets fall back to a plain scan.
    pub fn build(points: Vec<Point>, cell_hint: f64) -> Self {
        let dim = points.first().map_or(0, |p| p.len());
        let backend = if points.len() < 32 || dim == 0 {
            Backend::Scan
        } else if dim <= 3 && cell_hint > 0.0 && cell_hint.is_finite() {
            let mut map: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
            for (i, p) in points.iter().enumerate() {
                map.entry(cell_of(p, cell_hint)).or_default().push(i);
            }
            Backend::Grid { cell: cell_hint, map }
        } else {
            let mut order: Vec<usize> = (0..points.len()).collect();
            let mut nodes = Vec::with_capacity(points.len());
            let root = build_kd(&points, &mut order[..], 0, dim, &mut nodes).unwrap();
            Backend::Kd { nodes, root }
        };
        SpatialIndex { points, dim, backend }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Indices of all points with `||p - x|| <= r`, ascending.
    pub fn within(&self, x: &[f64], r: f64) -> Vec<usize> {
        debug_assert_eq!(x.len(), self.dim);
        let mut out = match &self.backend {
            Backend::Scan => (0..self.points.len())
                .filter(|&i| dist(&self.points[i], x) <= r)
                .collect(),
            Backend::Grid { cell, map } => {
                let mut found = Vec::new();
                let lo = cell_of(&offset(x, -r), *cell);
                let hi = cell_of(&offset(x, r), *cell);
                let mut key = [0_i64; 3];
                scan_cells(&lo, &hi, self.dim, &mut key, 0, &mut |k| {
                    if let Some(bucket) = map.get(k) {
                        for &i in bucket {
                            if dist(&self.points[i], x) <= r {
                                found.push(i);
                            }
                        }
                    }
                });
                found
            }
            Backend::Kd { nodes, root } => {
                let mut found = Vec::new();
                kd_within(nodes, &self.points, *root, x, r, &mut found);
                found
            }
        };
        out.sort_unstable();
        out
    }

    /// Index and distance of a nearest point; `None` on an empty set.
    pub fn nearest(&self, x: &[f64]) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        match &self.backend {
            Backend::Kd { nodes, root } => {
                let mut best = (usize::MAX, f64::INFINITY);
                kd_nearest(nodes, &self.points, *root, x, &mut best);
                Some(best)
            }
            Backend::Grid { cell, .. } => {
                // Expand the search radius until something is found; the
                // argmin over an exact radius query is the global nearest.
                let mut r = *cell;
                loop {
                    let c = self.within(x, r);
                    if let Some(&i) = c
                        .iter()
                        .min_by(|&&a, &&b| {
                            dist(&self.points[a], x).total_cmp(&dist(&self.points[b], x))
                        })
                    {
                        return Some((i, dist(&self.points[i], x)));
                    }
                    r *= 2.0;
                }
            }
            Backend::Scan => (0..self.points.len())
                .map(|i| (i, dist(&self.points[i], x)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))),
        }
    }
}

fn offset(x: &[f64], delta: f64) -> Point {
    x.iter().map(|v| v + delta).collect()
}

fn cell_of(p: &[f64], cell: f64) -> [i64; 3] {
    let mut key = [0_i64; 3];
    for (i, v) in p.iter().take(3).enumerate() {
        key[i] = (v / cell).floor() as i64;
    }
    key
}

fn scan_cells(
    lo: &[i64; 3],
    hi: &[i64; 3],
    dim: usize,
    key: &mut [i64; 3],
    axis: usize,
    visit: &mut impl FnMut(&[i64; 3]),
) {
    if axis == dim {
        visit(key);
        return;
    }
    for c in lo[axis]..=hi[axis] {
        key[axis] = c;
        scan_cells(lo, hi, dim, key, axis + 1, visit);
    }
}

fn build_kd(
    points: &[Point],
    order: &mut [usize],
    depth: usize,
    dim: usize,
    nodes: &mut Vec<KdNode>,
) -> Option<usize> {
    if order.is_empty() {
        return None;
    }
    let axis = depth % dim;
    order.sort_unstable_by(|&a, &b| {
        points[a][axis]
            .total_cmp(&points[b][axis])
            .then(a.cmp(&b))
    });
    let mid = order.len() / 2;
    let point_index = order[mid];
    let id = nodes.len();
    nodes.push(KdNode { point_index, axis, left: None, right: None });
    let (lo, rest) = order.split_at_mut(mid);
    let hi = &mut rest[1..];
    let left = build_kd(points, lo, depth + 1, dim, nodes);
    let right = build_kd(points, hi, depth + 1, dim, nodes);
    nodes[id].left = left;
    nodes[id].right = right;
    Some(id)
}

fn kd_within(nodes: &[KdNode], points: &[Point], id: usize, x: &[f64], r: f64, out: &mut Vec<usize>) {
    let node = &nodes[id];
    let p = &points[node.point_index];
    if dist(p, x) <= r {
        out.push(node.point_index);
    }
    let delta = x[node.axis] - p[node.axis];
    let (near, far) = if delta <= 0.0 {
        (node.left, node.right)
    } else {
        (node.right, node.left)
    };
    if let Some(n) = near {
        kd_within(nodes, points, n, x, r, out);
    }
    if let Some(f) = far {
        if delta.abs() <= r {
            kd_within(nodes, points, f, x, r, out);
        }
    }
}

fn kd_nearest(nodes: &[KdNode], points: &[Point], id: usize, x: &[f64], best: &mut (usize, f64)) {
    let node = &nodes[id];
    let p = &points[node.point_index];
    let d = dist(p, x);
    if d < best.1 || (d == best.1 && node.point_index < best.0) {
        *best = (node.point_index, d);
    }
    let delta = x[node.axis] - p[node.axis];
    let (near, far) = if delta <= 0.0 {
        (node.left, node.right)
    } else {
        (node.right, node.left)
    };
    if let Some(n) = near {
        kd_nearest(nodes, points, n, x, best);
    }
    if let Some(f) = far {
        if delta.abs() <= best.1 {
            kd_nearest(nodes, points, f, x, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_within(points: &[Point], x: &[f64], r: f64) -> Vec<usize> {
        (0..points.len()).filter(|&i| dist(&points[i], x) <= r).collect()
    }

    #[test]
    fn zero_radius_misses_absent_point() {
        let idx = SpatialIndex::build(vec![vec![0.0], vec![1.0]], 0.5);
        assert!(idx.within(&[0.3], 0.0).is_empty());
        assert_eq!(idx.within(&[1.0], 0.0), vec![1]);
    }

    #[test]
    fn diameter_radius_returns_everything() {
        let pts: Vec<Point> = (0..50).map(|i| vec![i as f64 * 0.1, -(i as f64) * 0.05]).collect();
        let idx = SpatialIndex::build(pts.clone(), 0.2);
        let all = idx.within(&[0.0, 0.0], 100.0);
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn nearest_agrees_with_scan_in_all_backends() {
        for (dim, n) in [(2usize, 200usize), (4, 120), (1, 10)] {
            let mut seedable = 1234u64;
            let pts: Vec<Point> = (0..n)
                .map(|_| {
                    (0..dim)
                        .map(|_| {
                            // Tiny deterministic LCG keeps this test dependency-free.
                            seedable = seedable.wrapping_mul(6364136223846793005).wrapping_add(1);
                            ((seedable >> 33) as f64 / (1u64 << 31) as f64) * 4.0 - 2.0
                        })
                        .collect()
                })
                .collect();
            let idx = SpatialIndex::build(pts.clone(), 0.5);
            let q: Point = vec![0.3; dim];
            let (bi, bd) = idx.nearest(&q).unwrap();
            let (si, sd) = (0..n)
                .map(|i| (i, dist(&pts[i], &q)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert_eq!(bi, si);
            assert!((bd - sd).abs() < 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn radius_queries_match_linear_scan(
            pts in prop::collection::vec(
                prop::collection::vec(-3.0f64..3.0, 2), 1..200),
            q in prop::collection::vec(-3.0f64..3.0, 2),
            r in 0.0f64..2.5,
        ) {
            let idx = SpatialIndex::build(pts.clone(), 0.4);
            prop_assert_eq!(idx.within(&q, r), brute_within(&pts, &q, r));
        }

        #[test]
        fn radius_queries_match_linear_scan_high_dim(
            pts in prop::collection::vec(
                prop::collection::vec(-2.0f64..2.0, 4), 40..160),
            q in prop::collection::vec(-2.0f64..2.0, 4),
            r in 0.0f64..2.0,
        ) {
            let idx = SpatialIndex::build(pts.clone(), 0.4);
            prop_assert_eq!(idx.within(&q, r), brute_within(&pts, &q, r));
        }
    }
}
