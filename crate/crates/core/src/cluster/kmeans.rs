//! Lloyd's k-means with k-means++ seeding.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: 4,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Centroids chosen by the seeding step.
    pub initial_centroids: Vec<Vec<f64>>,
    pub centroids: Vec<Vec<f64>>,
    /// Nearest-centroid assignment of every input point under `centroids`.
    pub assignments: Vec<usize>,
    /// `inertia_history[i]` is the inertia of the assignment made in Lloyd
    /// iteration `i` against the centroids it was made with; the last entry
    /// is the inertia against the final centroids.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().unwrap_or(&0.0)
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn check_points(points: &[Vec<f64>], k: usize) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::NoFailedGoals);
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(Error::contract(format!(
            "point {bad} has dimension {}, expected {dim}",
            points[bad].len()
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::contract("non-finite coordinate in k-means input"));
    }
    Ok(dim)
}

fn distinct_points(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !out.iter().any(|q| q == p) {
            out.push(p.clone());
        }
    }
    out
}

/// k-means++ seeding. When the input has fewer than `k` distinct points the
/// surplus centroids repeat the distinct points cyclically.
pub fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut SimRng) -> Result<Vec<Vec<f64>>> {
    check_points(points, k)?;
    let distinct = distinct_points(points);
    if distinct.len() <= k {
        return Ok((0..k)
            .map(|i| distinct[i % distinct.len()].clone())
            .collect());
    }
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        // at least k distinct points, so some weight is positive
        let dist = WeightedIndex::new(&d2).expect("positive total weight");
        let next = points[dist.sample(rng)].clone();
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(squared_distance(p, &next));
        }
        centroids.push(next);
    }
    Ok(centroids)
}

/// Lloyd iterations from fixed starting centroids. Stops when no assignment
/// changes, when every centroid moves less than `tol`, or after `max_iters`
/// update steps. A centroid that loses all its points stays where it was.
pub fn lloyd(
    points: &[Vec<f64>],
    init: Vec<Vec<f64>>,
    max_iters: usize,
    tol: f64,
) -> Result<KMeansFit> {
    let dim = check_points(points, init.len())?;
    if init.iter().any(|c| c.len() != dim) {
        return Err(Error::contract("centroid dimension mismatch"));
    }
    let k = init.len();
    let mut centroids = init.clone();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        let mut changed = false;
        let mut inertia = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (i, d) = nearest(p, &centroids);
            changed |= *a != i;
            *a = i;
            inertia += d;
        }
        history.push(inertia);
        if !changed || iterations >= max_iters {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (a, p) in assignments.iter().zip(points) {
            counts[*a] += 1;
            for (s, v) in sums[*a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut max_shift: f64 = 0.0;
        for ((c, s), n) in centroids.iter_mut().zip(&sums).zip(&counts) {
            if *n == 0 {
                continue;
            }
            let mean: Vec<f64> = s.iter().map(|v| v / *n as f64).collect();
            max_shift = max_shift.max(squared_distance(c, &mean).sqrt());
            *c = mean;
        }
        iterations += 1;
        if max_shift < tol {
            // final assignment against the settled centroids
            let mut inertia = 0.0;
            for (a, p) in assignments.iter_mut().zip(points) {
                let (i, d) = nearest(p, &centroids);
                *a = i;
                inertia += d;
            }
            history.push(inertia);
            break;
        }
    }

    Ok(KMeansFit {
        initial_centroids: init,
        centroids,
        assignments,
        inertia_history: history,
        iterations,
    })
}

pub fn kmeans_fit(
    points: &[Vec<f64>],
    params: &KMeansParams,
    rng: &mut SimRng,
) -> Result<KMeansFit> {
    let init = kmeans_plus_plus(points, params.k, rng)?;
    lloyd(points, init, params.max_iters, params.tol)
}
