//! Batch clusterers over weighted snapshot centers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Result};
use crate::types::{squared_distance, BatchAlgo, ClusterSnapshot, RefineParams, WeightedCenter};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centers: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub assignment: Vec<usize>,
    /// Weighted cost after each assignment step.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

fn sample_index<R: Rng>(rng: &mut R, mass: &[f64]) -> usize {
    let total: f64 = mass.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, &m) in mass.iter().enumerate() {
        if m > 0.0 {
            if target < m {
                return i;
            }
            target -= m;
        }
    }
    mass.iter().rposition(|&m| m > 0.0).unwrap_or(0)
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = squared_distance(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding where each point's mass is scaled by its weight.
pub fn kmeans_pp_seed<R: Rng>(points: &[Vec<f64>], weights: &[f64], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centers = vec![points[sample_index(rng, weights)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let mass: Vec<f64> = d2.iter().zip(weights).map(|(d, w)| d * w).collect();
        if mass.iter().all(|&m| m <= 0.0) {
            break;
        }
        let c = points[sample_index(rng, &mass)].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Lloyd iterations on weighted points. Stops after `max_iter` rounds or
/// once no center moves more than `tol`.
pub fn weighted_kmeans<R: Rng>(
    points: &[Vec<f64>],
    weights: &[f64],
    k: usize,
    max_iter: usize,
    tol: f64,
    rng: &mut R,
) -> KMeansResult {
    let mut centers = kmeans_pp_seed(points, weights, k, rng);
    let dim = points[0].len();
    let mut assignment = vec![0; points.len()];
    let mut cost_history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut cost = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centers);
            assignment[i] = j;
            cost += weights[i] * d;
        }
        cost_history.push(cost);
        if iterations == max_iter {
            break;
        }
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut mass = vec![0.0; centers.len()];
        for (i, p) in points.iter().enumerate() {
            let j = assignment[i];
            mass[j] += weights[i];
            for (s, v) in sums[j].iter_mut().zip(p) {
                *s += weights[i] * v;
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..centers.len() {
            if mass[j] <= 0.0 {
                continue;
            }
            let next: Vec<f64> = sums[j].iter().map(|s| s / mass[j]).collect();
            shift = shift.max(squared_distance(&next, &centers[j]).sqrt());
            centers[j] = next;
        }
        if shift <= tol {
            // one more assignment so the reported partition matches the centers
            for (i, p) in points.iter().enumerate() {
                assignment[i] = nearest(p, &centers).0;
            }
            break;
        }
    }
    let mut weights_out = vec![0.0; centers.len()];
    for (i, &j) in assignment.iter().enumerate() {
        weights_out[j] += weights[i];
    }
    KMeansResult {
        centers,
        weights: weights_out,
        assignment,
        cost_history,
        iterations,
    }
}

/// DBSCAN where a point's weight counts toward `min_pts`. Returns a cluster
/// index per point, `None` for noise.
pub fn weighted_dbscan(points: &[Vec<f64>], weights: &[f64], eps: f64, min_pts: f64) -> Vec<Option<usize>> {
    let n = points.len();
    let eps2 = eps * eps;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| squared_distance(&points[i], &points[j]) <= eps2)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbours
        .iter()
        .map(|nb| nb.iter().map(|&j| weights[j]).sum::<f64>() >= min_pts)
        .collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for start in 0..n {
        if labels[start].is_some() || !core[start] {
            continue;
        }
        labels[start] = Some(next);
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &j in &neighbours[i] {
                if labels[j].is_none() {
                    labels[j] = Some(next);
                    if core[j] {
                        stack.push(j);
                    }
                }
            }
        }
        next += 1;
    }
    labels
}

/// Result of refining a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub snapshot: ClusterSnapshot,
    /// Set when the input could not be refined as asked and came back as is.
    pub warning: Option<String>,
}

fn pool(members: &[&WeightedCenter]) -> WeightedCenter {
    let weight: f64 = members.iter().map(|c| c.weight).sum();
    let dim = members[0].centroid.len();
    let mut centroid = vec![0.0; dim];
    for c in members {
        for (s, v) in centroid.iter_mut().zip(&c.centroid) {
            *s += c.weight * v;
        }
    }
    for v in &mut centroid {
        *v /= weight;
    }
    WeightedCenter {
        centroid,
        weight,
        last_update: members.iter().map(|c| c.last_update).max().unwrap_or(0),
    }
}

/// Re-clusters snapshot centers as weighted points. KMeans uses `k` from the
/// parameters, else `k_hint`, else `⌈√n⌉`; DBSCAN noise moves to the
/// snapshot's outliers. The input is left untouched.
pub fn refine(snap: &ClusterSnapshot, params: &RefineParams, k_hint: Option<usize>, seed: u64) -> Result<Refined> {
    let centers: Vec<&WeightedCenter> = snap.centers.iter().filter(|c| c.weight > 0.0).collect();
    if centers.is_empty() {
        return Ok(Refined {
            snapshot: ClusterSnapshot {
                centers: Vec::new(),
                outliers: snap.outliers.clone(),
            },
            warning: None,
        });
    }
    let dim = centers[0].centroid.len();
    for c in &centers {
        check_dim(dim, c.centroid.len())?;
    }
    let points: Vec<Vec<f64>> = centers.iter().map(|c| c.centroid.clone()).collect();
    let weights: Vec<f64> = centers.iter().map(|c| c.weight).collect();
    let groups: Vec<Option<usize>> = match params.algo {
        BatchAlgo::KMeans => {
            let k = params
                .k
                .or(k_hint)
                .unwrap_or_else(|| (centers.len() as f64).sqrt().ceil() as usize)
                .max(1);
            if k > centers.len() {
                return Ok(Refined {
                    snapshot: snap.clone(),
                    warning: Some(format!("k = {k} exceeds the {} available centers", centers.len())),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = weighted_kmeans(&points, &weights, k, params.max_iter, params.tol, &mut rng);
            r.assignment.into_iter().map(Some).collect()
        }
        BatchAlgo::Dbscan => weighted_dbscan(&points, &weights, params.eps, params.min_pts),
    };
    let n_groups = groups.iter().flatten().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<&WeightedCenter>> = vec![Vec::new(); n_groups];
    let mut noise: Vec<WeightedCenter> = snap.outliers.clone().unwrap_or_default();
    let had_outliers = snap.outliers.is_some();
    for (c, g) in centers.iter().zip(&groups) {
        match g {
            Some(g) => members[*g].push(c),
            None => noise.push((*c).clone()),
        }
    }
    let refined: Vec<WeightedCenter> = members.iter().filter(|m| !m.is_empty()).map(|m| pool(m)).collect();
    Ok(Refined {
        snapshot: ClusterSnapshot {
            centers: refined,
            outliers: (had_outliers || !noise.is_empty()).then_some(noise),
        },
        warning: None,
    })
}
