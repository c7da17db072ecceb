//! Embedding-quality metrics: k-means with restarts, clustering accuracy under
//! the best label matching, and plug-in mutual information.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub assignment: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
    /// `k×d`.
    pub centroids: DenseMatrix,
    /// Final inertia of every restart, in restart order.
    pub restart_inertias: Vec<f64>,
}

/// JSON report of the evaluation command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub km_accuracy: f64,
    pub mi: f64,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(p, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, then proportional to squared distance.
fn plus_plus(z: &DenseMatrix, k: usize, rng: &mut SeededRng) -> DenseMatrix {
    let n = z.rows();
    let mut centroids = DenseMatrix::zeros(k, z.cols());
    centroids.row_mut(0).copy_from_slice(z.row(rng.below(n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.uniform() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.below(n)
        };
        centroids.row_mut(c).copy_from_slice(z.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(z.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn recompute_centroids(z: &DenseMatrix, assignment: &[usize], k: usize) -> (DenseMatrix, Vec<usize>) {
    let mut centroids = DenseMatrix::zeros(k, z.cols());
    let mut counts = vec![0usize; k];
    for (i, &a) in assignment.iter().enumerate() {
        counts[a] += 1;
        centroids.row_mut(a).iter_mut().zip(z.row(i)).for_each(|(c, v)| *c += v);
    }
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            centroids.row_mut(c).iter_mut().for_each(|v| *v /= cnt as f64);
        }
    }
    (centroids, counts)
}

fn inertia_of(z: &DenseMatrix, assignment: &[usize], centroids: &DenseMatrix) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(z.row(i), centroids.row(a)))
        .sum()
}

/// Lloyd iterations from the given centroids. Returns the clustering and the
/// inertia recorded after every centroid update.
pub fn lloyd(z: &DenseMatrix, init: DenseMatrix, max_iter: usize) -> Result<(ClusterResult, Vec<f64>)> {
    let (n, k) = (z.rows(), init.rows());
    if init.cols() != z.cols() {
        return Err(Error::Shape(format!(
            "centroids have {} columns, data has {}",
            init.cols(),
            z.cols()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::Config(format!("need 1 <= k <= N, got k = {k}, N = {n}")));
    }
    let mut centroids = init;
    let mut assignment = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for i in 0..n {
            let (c, d) = nearest(z.row(i), &centroids);
            dist[i] = d;
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        let (mut next, mut counts) = recompute_centroids(z, &assignment, k);
        // empty clusters take the point farthest from its current centre
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let far = (0..n)
                .filter(|&i| counts[assignment[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .expect("k <= N leaves a cluster with two points");
            counts[assignment[far]] -= 1;
            assignment[far] = empty;
            counts[empty] = 1;
            dist[far] = 0.0;
            changed = true;
            next = recompute_centroids(z, &assignment, k).0;
        }
        centroids = next;
        trace.push(inertia_of(z, &assignment, &centroids));
        if !changed {
            break;
        }
    }
    let inertia = *trace.last().expect("at least one iteration");
    Ok((
        ClusterResult {
            assignment,
            inertia,
            centroids,
            restart_inertias: vec![inertia],
        },
        trace,
    ))
}

/// Seed of restart `r`, derived so that restarts are independent of each other.
fn restart_seed(seed: u64, r: usize) -> u64 {
    seed ^ (r as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// k-means on the rows of `z` with k-means++ seeding; keeps the restart with
/// the lowest inertia (ties go to the earlier restart).
pub fn kmeans(z: &DenseMatrix, k: usize, restarts: usize, max_iter: usize, seed: u64) -> Result<ClusterResult> {
    let n = z.rows();
    if k == 0 || k > n {
        return Err(Error::Config(format!("need 1 <= k <= N, got k = {k}, N = {n}")));
    }
    if restarts == 0 {
        return Err(Error::Config("restarts must be positive".into()));
    }
    let mut best: Option<ClusterResult> = None;
    let mut inertias = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let mut rng = SeededRng::new(restart_seed(seed, r));
        let (res, _) = lloyd(z, plus_plus(z, k, &mut rng), max_iter)?;
        inertias.push(res.inertia);
        if best.as_ref().is_none_or(|b| res.inertia < b.inertia) {
            best = Some(res);
        }
    }
    let mut best = best.expect("restarts > 0");
    best.restart_inertias = inertias;
    Ok(best)
}

/// Contingency table with rows indexed by distinct assignment values and
/// columns by distinct label values, both in sorted order.
fn contingency(assignment: &[usize], labels: &[usize]) -> Result<Vec<Vec<usize>>> {
    if assignment.len() != labels.len() {
        return Err(Error::Shape(format!(
            "assignment has {} entries, labels {}",
            assignment.len(),
            labels.len()
        )));
    }
    if assignment.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let index = |v: &[usize]| -> BTreeMap<usize, usize> {
        let distinct: BTreeSet<usize> = v.iter().copied().collect();
        distinct.into_iter().enumerate().map(|(i, x)| (x, i)).collect()
    };
    let ra = index(assignment);
    let rl = index(labels);
    let mut table = vec![vec![0usize; rl.len()]; ra.len()];
    for (a, l) in assignment.iter().zip(labels) {
        table[ra[a]][rl[l]] += 1;
    }
    Ok(table)
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method,
/// shortest augmenting path form). Returns the column matched to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials and matching, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Fraction of points whose cluster maps to their label under the best
/// one-to-one matching of cluster ids to label ids.
pub fn clustering_accuracy(assignment: &[usize], labels: &[usize]) -> Result<f64> {
    let table = contingency(assignment, labels)?;
    let size = table.len().max(table[0].len());
    let max = table.iter().flatten().copied().max().unwrap_or(0) as f64;
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| max - table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as f64)
                .collect()
        })
        .collect();
    let matched: usize = hungarian(&cost)
        .iter()
        .enumerate()
        .map(|(i, &j)| table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0))
        .sum();
    Ok(matched as f64 / assignment.len() as f64)
}

/// Plug-in mutual information in nats.
pub fn mutual_info(assignment: &[usize], labels: &[usize]) -> Result<f64> {
    let table = contingency(assignment, labels)?;
    let n = assignment.len() as f64;
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let cols: Vec<f64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum::<usize>() as f64)
        .collect();
    let mut mi = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &c) in r.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] * cols[j])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Empirical entropy in nats.
pub fn entropy(labels: &[usize]) -> f64 {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let n = labels.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Clusters an `N×d` embedding into `k` groups and scores it against labels.
pub fn evaluate_embedding(
    z: &DenseMatrix,
    labels: &[usize],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<EvalReport> {
    if labels.len() != z.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} embedded samples",
            labels.len(),
            z.rows()
        )));
    }
    let res = kmeans(z, k, restarts, 300, seed)?;
    Ok(EvalReport {
        km_accuracy: clustering_accuracy(&res.assignment, labels)?,
        mi: mutual_info(&res.assignment, labels)?,
        inertia: res.inertia,
    })
}
