//! k-means clustering of matrix columns, used to split the data before
//! conical-hull reduction.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{HsiMatrix, IndexSet};

pub const MAX_LLOYD_ITERATIONS: usize = 100;

/// A partition of `{0..n}` into non-empty, pairwise disjoint groups.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub groups: Vec<IndexSet>,
    /// The group count asked for; larger than `groups.len()` only when the
    /// matrix has fewer distinct columns than requested.
    pub requested: usize,
    /// Within-cluster sum of squares (against each cluster's own mean) after
    /// seeding and after every Lloyd step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Checks that the groups are non-empty, disjoint and cover `{0..n}`.
    pub fn is_valid_for(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for g in &self.groups {
            if g.is_empty() {
                return false;
            }
            for i in g.iter() {
                if i >= n || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Clusters the columns of `a` into `p` groups.
///
/// Seeding is k-means++ driven by a ChaCha8 stream derived from `seed`;
/// Lloyd iterations run until assignments stop changing or
/// [`MAX_LLOYD_ITERATIONS`] is reached. Distances are squared Euclidean and
/// ties go to the lowest centroid index. A cluster that empties out receives
/// the point farthest from its own centroid.
///
/// When `a` has fewer than `p` distinct columns, the group count is reduced
/// to the number of distinct columns (reported via [`Partition::requested`]).
pub fn kmeans_partition(a: &HsiMatrix, p: usize, seed: u64) -> Result<Partition> {
    let n = a.ncols();
    if p == 0 || p > n {
        return Err(Error::InvalidArgument(format!(
            "group count p = {p} must satisfy 1 <= p <= n = {n}"
        )));
    }
    let distinct = count_distinct_columns(a);
    let k = p.min(distinct);
    if k == 1 {
        return Ok(Partition {
            groups: vec![IndexSet::full(n)],
            requested: p,
            objective_trace: vec![wcss(a, &vec![0; n], &[centroid_of(a, 0..n)])],
            iterations: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seeds(a, k, &mut rng);
    let mut assign = assign_all(a, &centroids);
    repair_empty(a, &centroids, &mut assign, k);
    let mut trace = vec![assignment_cost(a, &assign, k)];
    let mut iterations = 0;

    for _ in 0..MAX_LLOYD_ITERATIONS {
        iterations += 1;
        centroids = update_centroids(a, &assign, k);
        let mut next = assign_all(a, &centroids);
        repair_empty(a, &centroids, &mut next, k);
        trace.push(assignment_cost(a, &next, k));
        if next == assign {
            break;
        }
        assign = next;
    }

    let mut members = vec![Vec::new(); k];
    for (i, &c) in assign.iter().enumerate() {
        members[c].push(i);
    }
    Ok(Partition {
        groups: members.into_iter().map(IndexSet::new).collect(),
        requested: p,
        objective_trace: trace,
        iterations,
    })
}

fn count_distinct_columns(a: &HsiMatrix) -> usize {
    a.columns()
        .map(|c| c.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<u64>>())
        .collect::<HashSet<_>>()
        .len()
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn centroid_of(a: &HsiMatrix, idx: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut c = vec![0.0; a.nrows()];
    let mut count = 0usize;
    for i in idx {
        for (ci, v) in c.iter_mut().zip(a.column(i)) {
            *ci += v;
        }
        count += 1;
    }
    c.iter_mut().for_each(|v| *v /= count.max(1) as f64);
    c
}

fn plus_plus_seeds(a: &HsiMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = a.ncols();
    let first = rng.gen_range(0..n);
    let mut centroids = vec![a.column(first).to_vec()];
    let mut dist: Vec<f64> = a.columns().map(|c| sq_dist(c, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in dist.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            if acc > target {
                pick = Some(i);
                break;
            }
        }
        // Rounding can leave `acc` a hair below `target`; fall back to the
        // last point with positive weight.
        let pick = pick
            .or_else(|| dist.iter().rposition(|&w| w > 0.0))
            .expect("k does not exceed the number of distinct columns");
        let c = a.column(pick).to_vec();
        for (i, col) in a.columns().enumerate() {
            dist[i] = dist[i].min(sq_dist(col, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn nearest(col: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(col, cen);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn assign_all(a: &HsiMatrix, centroids: &[Vec<f64>]) -> Vec<usize> {
    (0..a.ncols())
        .into_par_iter()
        .map(|i| nearest(a.column(i), centroids))
        .collect()
}

fn update_centroids(a: &HsiMatrix, assign: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = a.nrows();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (i, &c) in assign.iter().enumerate() {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(a.column(i)) {
            *s += v;
        }
    }
    for (s, &cnt) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= cnt as f64);
    }
    sums
}

/// Moves, for each empty cluster, the point farthest from its centroid
/// (among clusters with more than one member) into the empty cluster.
fn repair_empty(a: &HsiMatrix, centroids: &[Vec<f64>], assign: &mut [usize], k: usize) {
    let mut counts = vec![0usize; k];
    for &c in assign.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &c) in assign.iter().enumerate() {
            if counts[c] < 2 {
                continue;
            }
            let d = sq_dist(a.column(i), &centroids[c]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        if let Some(i) = far {
            counts[assign[i]] -= 1;
            assign[i] = empty;
            counts[empty] = 1;
        }
    }
}

/// Within-cluster sum of squares of an assignment, measured against the
/// means of its own clusters.
fn assignment_cost(a: &HsiMatrix, assign: &[usize], k: usize) -> f64 {
    wcss(a, assign, &update_centroids(a, assign, k))
}

fn wcss(a: &HsiMatrix, assign: &[usize], centroids: &[Vec<f64>]) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(a.column(i), &centroids[c]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(cols: &[[f64; 2]]) -> HsiMatrix {
        HsiMatrix::from_columns(&cols.iter().map(|c| c.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_group() {
        let a = points(&[[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]]);
        let part = kmeans_partition(&a, 1, 7).unwrap();
        assert_eq!(part.groups, vec![IndexSet::full(3)]);
    }

    #[test]
    fn one_group_per_column() {
        let a = points(&[[0.0, 1.0], [1.0, 0.0], [0.5, 0.5], [0.2, 0.9]]);
        let part = kmeans_partition(&a, 4, 3).unwrap();
        assert_eq!(part.len(), 4);
        assert!(part.groups.iter().all(|g| g.len() == 1));
        assert!(part.is_valid_for(4));
    }

    #[test]
    fn group_count_drops_to_distinct_columns() {
        let a = points(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let part = kmeans_partition(&a, 3, 1).unwrap();
        assert_eq!(part.len(), 2);
        assert_eq!(part.requested, 3);
        assert!(part.is_valid_for(3));
    }

    #[test]
    fn rejects_bad_group_count() {
        let a = points(&[[1.0, 0.0]]);
        assert!(kmeans_partition(&a, 0, 1).is_err());
        assert!(kmeans_partition(&a, 2, 1).is_err());
    }

    #[test]
    fn repair_fills_empty_cluster() {
        let a = points(&[[0.0, 0.0], [0.1, 0.0], [5.0, 0.0]]);
        let centroids = vec![vec![0.0, 0.0], vec![100.0, 0.0]];
        let mut assign = vec![0, 0, 0];
        repair_empty(&a, &centroids, &mut assign, 2);
        assert_eq!(assign, vec![0, 0, 1]);
    }
}
