//! Evaluation suite: clustering-based grouping readout, partition and
//! spike-train metrics, factor selectivity, rhythm detection and the
//! benchmark driver that compares models on equal terms.

pub mod ami;
pub mod benchmark;
pub mod features;
pub mod kmeans;
pub mod oscillation;
pub mod silhouette;
pub mod stats;
pub mod vp;

pub use ami::ami;
pub use kmeans::{cluster_points, cluster_raster, ClusterAssignment, ClusterConfig};
pub use oscillation::{detect_oscillation, raster_oscillation, Oscillation};
pub use silhouette::{rate_score, silhouette_from_distances, synchrony_score, vp_silhouette};
pub use stats::{mean, pearson, sample_std, spearman};
pub use vp::vp_distance;

use crate::baselines::ActivationTrace;
use crate::datasets::BinaryImage;
use crate::error::{CoreError, Result};
use crate::raster::SpikeRaster;

/// Shared evaluation knobs. The window is measured from the end of the run;
/// grouping must hold where the dynamics have settled, not on the transient.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Number of trailing steps to score.
    pub window: usize,
    /// K-means restarts.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { window: 120, restarts: 10, seed: 0 }
    }
}

/// Grouping score of a spiking run: cluster spike trains in the trailing
/// window with k = true object count, then AMI between cluster labels and
/// ground truth over the single-object neurons that were clustered.
pub fn raster_ami(raster: &SpikeRaster, image: &BinaryImage, cfg: &EvalConfig) -> Result<f64> {
    let end = raster.steps();
    let start = end.saturating_sub(cfg.window);
    let ccfg = ClusterConfig {
        k: image.n_objects as usize,
        restarts: cfg.restarts,
        seed: cfg.seed,
    };
    let assign = cluster_raster(raster, &image.pixels, start, end, &ccfg)?;
    ami_against_gt(&assign.neuron_ids, &assign.labels, image)
}

/// Grouping score of a real-valued run (folded model): cluster per-neuron
/// activation courses over the trailing window; every stimulated neuron is
/// eligible because activations are defined everywhere.
pub fn activation_ami(
    trace: &ActivationTrace,
    image: &BinaryImage,
    cfg: &EvalConfig,
) -> Result<f64> {
    if trace.n() != image.n() {
        return Err(CoreError::Dimension { expected: image.n(), got: trace.n() });
    }
    let end = trace.steps();
    let start = end.saturating_sub(cfg.window);
    let mut ids = Vec::new();
    let mut points = Vec::new();
    for i in 0..trace.n() {
        if image.pixels[i] == 1 {
            ids.push(i);
            points.push(trace.neuron_course(i, start, end));
        }
    }
    let ccfg = ClusterConfig {
        k: image.n_objects as usize,
        restarts: cfg.restarts,
        seed: cfg.seed,
    };
    let labels = cluster_points(&points, &ccfg)?;
    ami_against_gt(&ids, &labels, image)
}

fn ami_against_gt(neuron_ids: &[usize], labels: &[usize], image: &BinaryImage) -> Result<f64> {
    let mut pred = Vec::new();
    let mut gt = Vec::new();
    for (&i, &l) in neuron_ids.iter().zip(labels) {
        if let Some(g) = image.gt_label(i) {
            pred.push(l);
            gt.push(g as usize);
        }
    }
    if gt.is_empty() {
        return Err(CoreError::UndefinedScore);
    }
    ami(&gt, &pred)
}
