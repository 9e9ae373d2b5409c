//! Silhouette scores over spike-train distances. With a timing-sensitive
//! cost the silhouette of the ground-truth grouping measures how well
//! synchrony separates objects; with a near-zero cost the same silhouette
//! only sees spike counts, giving a rate-coding control.

use crate::datasets::BinaryImage;
use crate::error::{CoreError, Result};
use crate::eval::vp::vp_distance;
use crate::raster::SpikeRaster;

/// Shift cost per unit time for the synchrony score.
pub const Q_SYNC: f64 = 1.0;
/// Shift cost for the rate score; small enough that timing contributes
/// negligibly and the distance reduces to spike-count differences.
pub const Q_RATE: f64 = 0.001;

/// Mean silhouette of a labeling given a precomputed distance matrix.
///
/// Members of singleton clusters score 0, as does any point whose own- and
/// cross-cluster distances are both 0. Fewer than two clusters is an error.
pub fn silhouette_from_distances(dist: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let n = labels.len();
    if dist.len() != n || dist.iter().any(|r| r.len() != n) {
        return Err(CoreError::validation("distance matrix shape mismatch"));
    }
    let mut clusters: Vec<usize> = labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();
    if clusters.len() < 2 {
        return Err(CoreError::UndefinedScore);
    }
    let size = |c: usize| labels.iter().filter(|&&l| l == c).count();

    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        if size(own) < 2 {
            continue; // singleton scores 0
        }
        let a: f64 = (0..n)
            .filter(|&j| j != i && labels[j] == own)
            .map(|j| dist[i][j])
            .sum::<f64>()
            / (size(own) - 1) as f64;
        let b = clusters
            .iter()
            .filter(|&&c| c != own)
            .map(|&c| {
                (0..n).filter(|&j| labels[j] == c).map(|j| dist[i][j]).sum::<f64>()
                    / size(c) as f64
            })
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Silhouette of the ground-truth grouping under Victor-Purpura distance
/// with shift cost `q`, over neurons that carry stimulus and belong to
/// exactly one object (overlap pixels are ambiguous and excluded).
/// Silent eligible neurons participate with empty trains.
///
/// Errors with `UndefinedScore` unless at least two groups keep two or
/// more eligible members.
pub fn vp_silhouette(
    raster: &SpikeRaster,
    image: &BinaryImage,
    start: usize,
    end: usize,
    q: f64,
) -> Result<f64> {
    if image.pixels.len() != raster.n() {
        return Err(CoreError::Dimension { expected: raster.n(), got: image.pixels.len() });
    }
    if start >= end || end > raster.steps() {
        return Err(CoreError::validation("score window out of raster range"));
    }
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for i in 0..raster.n() {
        if let Some(l) = image.gt_label(i) {
            ids.push(i);
            labels.push(l as usize);
        }
    }
    let mut counts = std::collections::BTreeMap::new();
    for &l in &labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    if counts.values().filter(|&&c| c >= 2).count() < 2 {
        return Err(CoreError::UndefinedScore);
    }

    let trains: Vec<Vec<usize>> = ids.iter().map(|&i| raster.spike_times(i, start, end)).collect();
    let m = ids.len();
    let mut dist = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let d = vp_distance(&trains[i], &trains[j], q);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    silhouette_from_distances(&dist, &labels)
}

pub fn synchrony_score(
    raster: &SpikeRaster,
    image: &BinaryImage,
    start: usize,
    end: usize,
) -> Result<f64> {
    vp_silhouette(raster, image, start, end, Q_SYNC)
}

pub fn rate_score(
    raster: &SpikeRaster,
    image: &BinaryImage,
    start: usize,
    end: usize,
) -> Result<f64> {
    vp_silhouette(raster, image, start, end, Q_RATE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tight_separated_clusters_score_one() {
        // distances: 0 within, 5 across
        let labels = vec![0, 0, 1, 1];
        let mut dist = vec![vec![0.0; 4]; 4];
        for i in 0..2 {
            for j in 2..4 {
                dist[i][j] = 5.0;
                dist[j][i] = 5.0;
            }
        }
        assert_abs_diff_eq!(
            silhouette_from_distances(&dist, &labels).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn equidistant_simplex_scores_zero() {
        let labels = vec![0, 0, 1, 1];
        let mut dist = vec![vec![1.0; 4]; 4];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        assert_abs_diff_eq!(
            silhouette_from_distances(&dist, &labels).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn singletons_and_all_zero_distances_score_zero() {
        let dist = vec![vec![0.0; 3]; 3];
        let s = silhouette_from_distances(&dist, &[0, 1, 1]).unwrap();
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn one_cluster_is_undefined() {
        let dist = vec![vec![0.0; 2]; 2];
        assert!(matches!(
            silhouette_from_distances(&dist, &[0, 0]),
            Err(CoreError::UndefinedScore)
        ));
    }

    /// Two groups volleying in anti-phase with mild count variation:
    /// timing separates them (synchrony near 1) while counts do not
    /// (rate score near 0).
    #[test]
    fn synchrony_sees_antiphase_volleys_and_rate_does_not() {
        let per_group = 10;
        let n = 2 * per_group;
        let t = 24;
        let mut raster = SpikeRaster::new(t, n);
        let mut image = BinaryImage::empty(n, 1);
        let group_a: Vec<(usize, usize)> = (0..per_group).map(|i| (0, i)).collect();
        let group_b: Vec<(usize, usize)> = (per_group..n).map(|i| (0, i)).collect();
        image.add_object(&group_a, 0);
        image.add_object(&group_b, 1);

        for step in 0..t {
            let mut row = vec![0u8; n];
            for i in 0..per_group {
                // group A volleys at 0, 8, 16; every other neuron skips the last
                if step % 8 == 0 && (step < 16 || i % 2 == 0) {
                    row[i] = 1;
                }
                // group B volleys at 4, 12, 20 with the same count pattern
                if step % 8 == 4 && (step < 20 || i % 2 == 0) {
                    row[per_group + i] = 1;
                }
            }
            raster.set_row(step, &row);
        }

        let sync = synchrony_score(&raster, &image, 0, t).unwrap();
        let rate = rate_score(&raster, &image, 0, t).unwrap();
        assert!(sync > 0.8, "synchrony: {sync}");
        assert!(rate.abs() < 0.2, "rate: {rate}");
    }

    #[test]
    fn single_group_image_is_undefined() {
        let mut raster = SpikeRaster::new(4, 4);
        raster.set_row(0, &[1, 1, 0, 0]);
        let mut image = BinaryImage::empty(4, 1);
        image.add_object(&[(0, 0), (0, 1), (0, 2), (0, 3)], 0);
        assert!(matches!(
            synchrony_score(&raster, &image, 0, 4),
            Err(CoreError::UndefinedScore)
        ));
    }
}
