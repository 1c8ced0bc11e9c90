//! Seeded Lloyd k-means over 2-D points.
//!
//! Initialisation is k-means++ driven by [`SplitMix64`], so a `(points,
//! config)` pair always yields the same labels. A single initialisation is
//! run; there are no restarts.
//!
//! An assignment step that leaves a cluster empty is repaired by moving the
//! point farthest from its own centroid (taken only from clusters with more
//! than one member) into the empty cluster. Iteration stops when labels
//! repeat, when the largest centroid shift drops below
//! `rel_tolerance * span` (span being the larger coordinate extent of the
//! input), or after `max_iterations`. A final assignment against the
//! returned centroids makes every label a nearest-centroid label; that last
//! step may leave a cluster empty again, which callers can detect.

use serde::Serialize;
use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist_sq(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Centroid-shift threshold as a fraction of the input's coordinate span.
    pub rel_tolerance: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            seed: 0,
            max_iterations: 300,
            rel_tolerance: 1e-4,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<(), KMeansError> {
        if self.k == 0 {
            return Err(KMeansError::InvalidConfig("k must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(KMeansError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.rel_tolerance >= 0.0 && self.rel_tolerance.is_finite()) {
            return Err(KMeansError::InvalidConfig(
                "rel_tolerance must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KMeansResult {
    /// Cluster index in `0..k` for each input point.
    pub labels: Vec<usize>,
    pub centroids: Vec<Point2D>,
    /// Within-cluster sum of squares of `labels` against `centroids`.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every update step, then after the final assignment.
    pub inertia_history: Vec<f64>,
    /// True when iteration stopped before hitting `max_iterations`.
    pub converged: bool,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KMeansError {
    #[error("no points to cluster")]
    EmptyInput,
    #[error("cannot seed {k} centroids from {n} points")]
    TooFewPoints { k: usize, n: usize },
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("invalid k-means config: {0}")]
    InvalidConfig(String),
}

/// k-means++ seeding. The first centroid is a uniform pick; each later one
/// is drawn with probability proportional to its squared distance from the
/// nearest centroid chosen so far. When every remaining weight is zero
/// (all points coincide with chosen centroids) the pick is uniform again,
/// so duplicate centroids are possible.
pub fn seed_centroids(points: &[Point2D], k: usize, rng: &mut SplitMix64) -> Result<Vec<Point2D>, KMeansError> {
    if points.is_empty() {
        return Err(KMeansError::EmptyInput);
    }
    if k == 0 || k > points.len() {
        return Err(KMeansError::TooFewPoints { k, n: points.len() });
    }

    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.next_index(points.len())]);
    let mut nearest: Vec<f64> = points.iter().map(|p| p.dist_sq(&centroids[0])).collect();

    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                chosen = Some(i);
                if acc > target {
                    break;
                }
            }
            // Some(_) because total > 0 means at least one positive weight.
            chosen.unwrap_or(0)
        } else {
            rng.next_index(points.len())
        };
        let c = points[pick];
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(p.dist_sq(&c));
        }
        centroids.push(c);
    }
    Ok(centroids)
}

/// Nearest centroid per point; ties go to the lowest centroid index.
pub fn assign(points: &[Point2D], centroids: &[Point2D]) -> Vec<usize> {
    points.iter().map(|p| nearest_centroid(p, centroids)).collect()
}

fn nearest_centroid(p: &Point2D, centroids: &[Point2D]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = p.dist_sq(c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Member mean for each cluster, `None` where a cluster has no members.
pub fn update_centroids(points: &[Point2D], labels: &[usize], k: usize) -> Vec<Option<Point2D>> {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        let s = &mut sums[l];
        s.0 += p.x;
        s.1 += p.y;
        s.2 += 1;
    }
    sums.into_iter()
        .map(|(sx, sy, n)| (n > 0).then(|| Point2D::new(sx / n as f64, sy / n as f64)))
        .collect()
}

/// Sum of squared distances from each point to its labelled centroid.
pub fn inertia(points: &[Point2D], labels: &[usize], centroids: &[Point2D]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| p.dist_sq(&centroids[l]))
        .sum()
}

fn coordinate_span(points: &[Point2D]) -> f64 {
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
    }
    (max_x - min_x).max(max_y - min_y)
}

fn repair_empty(points: &[Point2D], labels: &mut [usize], centroids: &mut [Point2D]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let c = labels[i];
            if counts[c] < 2 {
                continue;
            }
            let d = p.dist_sq(&centroids[c]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        if let Some((i, _)) = donor {
            counts[labels[i]] -= 1;
            labels[i] = j;
            counts[j] = 1;
            centroids[j] = points[i];
        }
    }
}

/// Lloyd's algorithm from k-means++ seeds.
pub fn lloyd(points: &[Point2D], config: &KMeansConfig) -> Result<KMeansResult, KMeansError> {
    config.validate()?;
    if points.is_empty() {
        return Err(KMeansError::EmptyInput);
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(KMeansError::NonFinite(i));
    }

    let k = config.k;
    let mut rng = SplitMix64::new(config.seed);
    let mut centroids = seed_centroids(points, k, &mut rng)?;
    let tolerance = config.rel_tolerance * coordinate_span(points);

    let mut history = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        let mut labels = assign(points, &centroids);
        repair_empty(points, &mut labels, &mut centroids);
        let means: Vec<Point2D> = update_centroids(points, &labels, k)
            .into_iter()
            .zip(&centroids)
            .map(|(m, &old)| m.unwrap_or(old))
            .collect();
        history.push(inertia(points, &labels, &means));
        let shift = centroids
            .iter()
            .zip(&means)
            .map(|(a, b)| a.dist_sq(b).sqrt())
            .fold(0.0, f64::max);
        centroids = means;
        let stable = previous.as_deref() == Some(labels.as_slice());
        previous = Some(labels);
        if stable || shift < tolerance {
            converged = true;
            break;
        }
    }

    let labels = assign(points, &centroids);
    let final_inertia = inertia(points, &labels, &centroids);
    history.push(final_inertia);
    Ok(KMeansResult {
        labels,
        centroids,
        inertia: final_inertia,
        iterations,
        inertia_history: history,
        converged,
    })
}
