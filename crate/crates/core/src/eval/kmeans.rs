//! K-means over per-neuron spike trains (or real activation traces) used to
//! read grouping out of a raster. Restarted Lloyd iterations with D^2
//! seeding; the best run by inertia wins. Everything is seeded and ties
//! break to the lowest index, so results are reproducible bit for bit.

use crate::error::{CoreError, Result};
use crate::raster::SpikeRaster;
use crate::rng::stream;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { k: 2, restarts: 10, seed: 0 }
    }
}

/// Cluster labels for the subset of neurons that were eligible: stimulated
/// by the input and active at least once inside the window.
#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    /// Raster indices of the clustered neurons, ascending.
    pub neuron_ids: Vec<usize>,
    /// Cluster label per entry of `neuron_ids`, in `0..k`.
    pub labels: Vec<usize>,
    /// Sum of squared distances to the winning centroids.
    pub inertia: f64,
}

/// Cluster neurons of `raster` by their spike trains over `[start, end)`.
///
/// `stimulus` masks which neurons carry input; unstimulated neurons and
/// neurons silent in the window are excluded. Errors with
/// `DegenerateClustering` when fewer eligible neurons than clusters remain.
pub fn cluster_raster(
    raster: &SpikeRaster,
    stimulus: &[u8],
    start: usize,
    end: usize,
    cfg: &ClusterConfig,
) -> Result<ClusterAssignment> {
    if stimulus.len() != raster.n() {
        return Err(CoreError::Dimension { expected: raster.n(), got: stimulus.len() });
    }
    if start >= end || end > raster.steps() {
        return Err(CoreError::validation(format!(
            "window [{start}, {end}) out of range for raster of {} steps",
            raster.steps()
        )));
    }
    let mut neuron_ids = Vec::new();
    let mut points = Vec::new();
    for i in 0..raster.n() {
        if stimulus[i] == 0 {
            continue;
        }
        let train: Vec<f64> = (start..end).map(|t| raster.get(t, i) as f64).collect();
        if train.iter().any(|&v| v > 0.0) {
            neuron_ids.push(i);
            points.push(train);
        }
    }
    let labels = cluster_points(&points, cfg)?;
    let inertia = best_inertia(&points, &labels, cfg.k);
    Ok(ClusterAssignment { neuron_ids, labels, inertia })
}

/// Cluster arbitrary per-neuron feature rows (e.g. real-valued activation
/// traces); same eligibility contract as `cluster_raster` but the caller
/// selects the rows.
pub fn cluster_points(points: &[Vec<f64>], cfg: &ClusterConfig) -> Result<Vec<usize>> {
    if cfg.k == 0 {
        return Err(CoreError::validation("k must be positive"));
    }
    if points.len() < cfg.k {
        return Err(CoreError::DegenerateClustering);
    }
    let restarts = cfg.restarts.max(1);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..restarts {
        let mut rng = stream(cfg.seed, "kmeans", r as u64);
        let (labels, inertia) = lloyd(points, cfg.k, &mut rng);
        if best.as_ref().is_none_or(|(bi, _)| inertia < *bi) {
            best = Some((inertia, labels));
        }
    }
    Ok(best.unwrap().1)
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// D^2 seeding followed by Lloyd iterations until the assignment is stable.
fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    let dim = points[0].len();

    // seeding: first centroid uniform, then proportional to squared distance
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| dist_sq(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all points coincide with chosen centroids; any pick works
            rng.random_range(0..n)
        } else {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        };
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist_sq(p, centroids.last().unwrap()));
        }
    }

    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best_j = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = dist_sq(p, c);
                if d < best_d {
                    best_d = d;
                    best_j = j;
                }
            }
            if labels[i] != best_j {
                labels[i] = best_j;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, &v) in sums[labels[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                // revive the empty cluster with the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist_sq(&points[a], &centroids[labels[a]])
                            .partial_cmp(&dist_sq(&points[b], &centroids[labels[b]]))
                            .unwrap()
                    })
                    .unwrap();
                labels[far] = j;
                centroids[j] = points[far].clone();
                changed = true;
            } else {
                for (c, &s) in centroids[j].iter_mut().zip(&sums[j]) {
                    *c = s / counts[j] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let inertia: f64 = points.iter().zip(&labels).map(|(p, &l)| dist_sq(p, &centroids[l])).sum();
    (labels, inertia)
}

/// Inertia of a labeling against the centroids it implies.
fn best_inertia(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let dim = points[0].len();
    let mut sums = vec![vec![0.0f64; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, &v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut inertia = 0.0;
    for (p, &l) in points.iter().zip(labels) {
        if counts[l] == 0 {
            continue;
        }
        let c: Vec<f64> = sums[l].iter().map(|&s| s / counts[l] as f64).collect();
        inertia += dist_sq(p, &c);
    }
    inertia
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assignment_partitions(labels: &[usize], split: usize) -> bool {
        let first = labels[0];
        labels[..split].iter().all(|&l| l == first)
            && labels[split..].iter().all(|&l| l != first)
            && labels[split..].windows(2).all(|w| w[0] == w[1])
    }

    #[test]
    fn separates_two_obvious_blobs() {
        let mut points = Vec::new();
        for i in 0..6 {
            points.push(vec![0.0 + 0.01 * i as f64, 0.0]);
        }
        for i in 0..6 {
            points.push(vec![10.0 + 0.01 * i as f64, 10.0]);
        }
        let cfg = ClusterConfig { k: 2, restarts: 5, seed: 7 };
        let labels = cluster_points(&points, &cfg).unwrap();
        assert!(assignment_partitions(&labels, 6), "labels: {labels:?}");
    }

    #[test]
    fn deterministic_across_calls() {
        let mut rng = stream(3, "pts", 0);
        let points: Vec<Vec<f64>> =
            (0..40).map(|_| (0..8).map(|_| rng.random::<f64>()).collect()).collect();
        let cfg = ClusterConfig { k: 3, restarts: 10, seed: 11 };
        let a = cluster_points(&points, &cfg).unwrap();
        let b = cluster_points(&points, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_points_is_degenerate() {
        let points = vec![vec![0.0], vec![1.0]];
        let cfg = ClusterConfig { k: 3, restarts: 2, seed: 0 };
        assert!(matches!(
            cluster_points(&points, &cfg),
            Err(CoreError::DegenerateClustering)
        ));
    }

    #[test]
    fn raster_clustering_excludes_silent_and_unstimulated() {
        // 5 neurons, 6 steps: neurons 0,1 volley together, neuron 2 is
        // anti-phase, neuron 3 is stimulated but silent, and the stimulus
        // masks out neuron 4 entirely.
        let mut raster = SpikeRaster::new(6, 5);
        for t in 0..6 {
            if t % 2 == 0 {
                raster.set_row(t, &[1, 1, 0, 0, 0]);
            } else {
                raster.set_row(t, &[0, 0, 1, 0, 1]);
            }
        }
        let stimulus = [1u8, 1, 1, 1, 0];
        let cfg = ClusterConfig { k: 2, restarts: 4, seed: 1 };
        let out = cluster_raster(&raster, &stimulus, 0, 6, &cfg).unwrap();
        assert_eq!(out.neuron_ids, vec![0, 1, 2]);
        assert_eq!(out.labels[0], out.labels[1]);
        assert_ne!(out.labels[0], out.labels[2]);
        assert!(out.inertia.abs() < 1e-12);
    }
}
