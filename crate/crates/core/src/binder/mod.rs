//! The binding loop: delayed attention feedback wrapped around the spike
//! coding space and the frozen DAE.
//!
//! Per step: the attention row from `tau_delay` steps ago gates Bernoulli
//! firing (scaled by `attn_gain` and clamped), the coincidence detector
//! reads the spike window out, the encoder maps it to a latent, the
//! decoder's softmax becomes the attention row stored for this step.
//! Static, hierarchical (sampled binary latent) and dynamic (recurrent
//! DAE, frame advance per delay period) modes share this skeleton.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dae::{decode, encode, threshold_reconstruction, DaeParams, LatentMode};
use crate::datasets::{BinaryImage, ImageSequence};
use crate::error::{CoreError, Result};
use crate::eval::kmeans::{cluster_raster, ClusterConfig};
use crate::raster::{AttentionTrace, SpikeRaster};
use crate::rng::stream;
use crate::scs::{CdConfig, ScsState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BindingConfig {
    pub tau_delay: usize,
    pub tau_rfr: u32,
    pub cd: CdConfig,
    /// Total loop steps T.
    pub horizon: usize,
    /// Scale applied to the softmax attention before clamping to [0,1];
    /// `None` picks N/16 at run time.
    pub attn_gain: Option<f64>,
    /// Scale for Bernoulli latent sampling in hierarchical mode; `None`
    /// picks K/4.
    pub latent_gain: Option<f64>,
    pub seed: u64,
}

impl Default for BindingConfig {
    fn default() -> Self {
        BindingConfig {
            tau_delay: 40,
            tau_rfr: 8,
            cd: CdConfig::default(),
            horizon: 1000,
            attn_gain: None,
            latent_gain: None,
            seed: 0,
        }
    }
}

impl BindingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_delay < 1 {
            return Err(CoreError::validation("tau_delay must be at least 1"));
        }
        if self.horizon <= self.tau_delay {
            return Err(CoreError::validation("horizon must exceed tau_delay"));
        }
        if let Some(g) = self.attn_gain {
            if g <= 0.0 {
                return Err(CoreError::validation("attn_gain must be positive"));
            }
        }
        if let Some(g) = self.latent_gain {
            if g < 0.0 {
                return Err(CoreError::validation("latent_gain must be non-negative"));
            }
        }
        self.cd.validate()
    }

    pub fn effective_attn_gain(&self, n: usize) -> f64 {
        self.attn_gain.unwrap_or(n as f64 / 16.0)
    }

    pub fn effective_latent_gain(&self, k: usize) -> f64 {
        self.latent_gain.unwrap_or(k as f64 / 4.0)
    }

    /// Short content hash of the configuration, stored in rasters.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        let mut s = String::with_capacity(16);
        for b in &digest[..8] {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

/// Pre-roll rows: |N(0, I)| normalized to sum 1, one per delay slot.
pub(crate) fn init_attention(trace: &mut AttentionTrace, n: usize, tau_delay: usize, seed: u64) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = stream(seed, "attn-init", 0);
    for _ in 0..tau_delay {
        let mut row: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z.abs()
            })
            .collect();
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            for v in &mut row {
                *v /= sum;
            }
        }
        trace.push(row);
    }
}

pub(crate) fn gate(context: &[f64], gain: f64, gamma: &mut [f64]) {
    for (g, &c) in gamma.iter_mut().zip(context) {
        *g = (gain * c).clamp(0.0, 1.0);
    }
}

/// Static binding (Algorithm skeleton above, real softmax latent).
pub fn bind(
    image: &BinaryImage,
    dae: &DaeParams,
    cfg: &BindingConfig,
) -> Result<(SpikeRaster, AttentionTrace)> {
    cfg.validate()?;
    dae.check_input(image.n())?;
    let n = image.n();
    let x = &image.pixels;
    let gain = cfg.effective_attn_gain(n);

    let mut trace = AttentionTrace::new(n, cfg.tau_delay);
    init_attention(&mut trace, n, cfg.tau_delay, cfg.seed);
    let mut scs = ScsState::new(n, cfg.cd.tau_w, stream(cfg.seed, "scs", 0));
    let mut raster = SpikeRaster::new(cfg.horizon, n);
    raster.fingerprint = cfg.fingerprint();

    let mut gamma = vec![0.0; n];
    for t in 0..cfg.horizon {
        let context = trace.at(t as i64 - cfg.tau_delay as i64);
        gate(context, gain, &mut gamma);
        let spikes = scs.step(x, &gamma, cfg.tau_rfr);
        raster.set_row(t, &spikes);
        let cd_out = scs.detect(&cfg.cd);
        let input2dae: Vec<f64> = cd_out.iter().map(|&s| s as f64).collect();
        let latent = encode(dae, &input2dae, None);
        let attn = decode(dae, &latent);
        trace.latent.push(latent);
        trace.push(attn);
    }
    Ok((raster, trace))
}

/// Hierarchical binding: the latent is Bernoulli-sampled from the rescaled
/// encoder softmax, giving a spiking latent layer whose raster is returned
/// alongside the pixel raster.
pub fn bind_hierarchical(
    image: &BinaryImage,
    dae: &DaeParams,
    cfg: &BindingConfig,
) -> Result<(SpikeRaster, SpikeRaster, AttentionTrace)> {
    cfg.validate()?;
    dae.check_input(image.n())?;
    if dae.latent_mode != LatentMode::BinaryBernoulli {
        return Err(CoreError::validation(
            "hierarchical binding needs BinaryBernoulli parameters",
        ));
    }
    let n = image.n();
    let k = dae.latent_size();
    let x = &image.pixels;
    let gain = cfg.effective_attn_gain(n);
    let lgain = cfg.effective_latent_gain(k);

    let mut trace = AttentionTrace::new(n, cfg.tau_delay);
    init_attention(&mut trace, n, cfg.tau_delay, cfg.seed);
    let mut scs = ScsState::new(n, cfg.cd.tau_w, stream(cfg.seed, "scs", 0));
    let mut latent_rng = stream(cfg.seed, "latent", 0);
    let mut raster = SpikeRaster::new(cfg.horizon, n);
    let mut latent_raster = SpikeRaster::new(cfg.horizon, k);
    raster.fingerprint = cfg.fingerprint();
    latent_raster.fingerprint = raster.fingerprint.clone();

    let mut gamma = vec![0.0; n];
    for t in 0..cfg.horizon {
        let context = trace.at(t as i64 - cfg.tau_delay as i64);
        gate(context, gain, &mut gamma);
        let spikes = scs.step(x, &gamma, cfg.tau_rfr);
        raster.set_row(t, &spikes);
        let cd_out = scs.detect(&cfg.cd);
        let input2dae: Vec<f64> = cd_out.iter().map(|&s| s as f64).collect();
        let enc = encode(dae, &input2dae, None);
        // spike sampling of the latent code
        let theta: Vec<u8> = enc
            .iter()
            .map(|&e| {
                let p = (lgain * e).clamp(0.0, 1.0);
                (p > 0.0 && latent_rng.random::<f64>() < p) as u8
            })
            .collect();
        latent_raster.set_row(t, &theta);
        let code = normalize_binary_code(&theta);
        let attn = decode(dae, &code);
        trace.latent.push(theta.iter().map(|&b| b as f64).collect());
        trace.push(attn);
    }
    Ok((raster, latent_raster, trace))
}

/// Binary latent spikes as a decoder input comparable to a softmax code.
fn normalize_binary_code(theta: &[u8]) -> Vec<f64> {
    let total: f64 = theta.iter().map(|&b| b as f64).sum();
    let scale = 1.0 / total.max(1.0);
    theta.iter().map(|&b| b as f64 * scale).collect()
}

/// Decode the OR of a short latent spike window (≤ τ_w steps) into a
/// binary readout image. With an empty window the image is all zero.
pub fn decode_group(window: &[&[u8]], dae: &DaeParams) -> BinaryImage {
    let k = dae.latent_size();
    let mut theta = vec![0u8; k];
    for row in window {
        for (t, &s) in theta.iter_mut().zip(row.iter()) {
            if s == 1 {
                *t = 1;
            }
        }
    }
    let mut img = BinaryImage::empty(dae.meta.width, dae.meta.height);
    if theta.iter().all(|&b| b == 0) {
        return img;
    }
    let out = decode(dae, &normalize_binary_code(&theta));
    let pixels = threshold_reconstruction(&out, dae.meta.mean_object_px);
    let pts: Vec<(usize, usize)> = (0..pixels.len())
        .filter(|&i| pixels[i] == 1)
        .map(|i| (i / dae.meta.width, i % dae.meta.width))
        .collect();
    if !pts.is_empty() {
        img.add_object(&pts, 0);
    }
    img
}

/// Per-delay-period clustering snapshot of a dynamic run.
#[derive(Debug, Clone)]
pub struct DynamicSnapshot {
    /// Frame shown during this period (frames advance once per period).
    pub frame: usize,
    /// Per-pixel persistent object identity, matched across snapshots by
    /// maximal pixel overlap.
    pub labels: Vec<Option<u8>>,
    pub n_clusters: usize,
    /// Too few spiking neurons to form the requested clusters.
    pub degenerate: bool,
}

/// Dynamic binding over a frame sequence: the stimulus advances one frame
/// per delay period while the loop runs continuously; the recurrent latent
/// context makes the decoder anticipate motion. Returns the full raster
/// and one clustering snapshot per period.
pub fn bind_dynamic(
    seq: &ImageSequence,
    dae: &DaeParams,
    cfg: &BindingConfig,
) -> Result<(SpikeRaster, Vec<DynamicSnapshot>)> {
    cfg.validate()?;
    if seq.frames.len() < 2 {
        return Err(CoreError::validation("dynamic binding needs at least 2 frames"));
    }
    if dae.recurrent.is_none() {
        return Err(CoreError::validation(
            "dynamic binding needs recurrent parameters",
        ));
    }
    let n = seq.frames[0].n();
    dae.check_input(n)?;
    let k = dae.latent_size();
    let gain = cfg.effective_attn_gain(n);
    let steps = seq.frames.len() * cfg.tau_delay;

    let mut trace = AttentionTrace::new(n, cfg.tau_delay);
    init_attention(&mut trace, n, cfg.tau_delay, cfg.seed);
    let mut scs = ScsState::new(n, cfg.cd.tau_w, stream(cfg.seed, "scs", 0));
    let mut raster = SpikeRaster::new(steps, n);
    raster.fingerprint = cfg.fingerprint();

    let mut prev_latent = vec![1.0 / k as f64; k];
    let mut gamma = vec![0.0; n];
    let mut snapshots = Vec::with_capacity(seq.frames.len());
    let mut prev_pixel_ids: Vec<Option<u8>> = vec![None; n];
    let mut next_id: u8 = 0;

    for (frame_idx, frame) in seq.frames.iter().enumerate() {
        let x = &frame.pixels;
        let start = frame_idx * cfg.tau_delay;
        for dt in 0..cfg.tau_delay {
            let t = start + dt;
            let context = trace.at(t as i64 - cfg.tau_delay as i64);
            gate(context, gain, &mut gamma);
            let spikes = scs.step(x, &gamma, cfg.tau_rfr);
            raster.set_row(t, &spikes);
            let cd_out = scs.detect(&cfg.cd);
            let input2dae: Vec<f64> = cd_out.iter().map(|&s| s as f64).collect();
            let latent = encode(dae, &input2dae, Some(&prev_latent));
            let attn = decode(dae, &latent);
            prev_latent = latent.clone();
            trace.latent.push(latent);
            trace.push(attn);
        }

        // snapshot: cluster the spikes of this period
        let live = frame.n_objects.max(1) as usize;
        let ccfg = ClusterConfig {
            k: live,
            restarts: 10,
            seed: stream(cfg.seed, "snapshot", frame_idx as u64).random::<u64>(),
        };
        let snapshot = match cluster_raster(&raster, &frame.pixels, start, start + cfg.tau_delay, &ccfg)
        {
            Ok(assign) => {
                let mut current: Vec<Option<usize>> = vec![None; n];
                for (&i, &c) in assign.neuron_ids.iter().zip(&assign.labels) {
                    current[i] = Some(c);
                }
                let ids = match_identities(&current, live, &prev_pixel_ids, &mut next_id);
                let labels: Vec<Option<u8>> = current
                    .iter()
                    .map(|c| c.map(|c| ids[c]))
                    .collect();
                prev_pixel_ids = labels.clone();
                DynamicSnapshot {
                    frame: frame_idx,
                    labels,
                    n_clusters: live,
                    degenerate: false,
                }
            }
            Err(_) => DynamicSnapshot {
                frame: frame_idx,
                labels: vec![None; n],
                n_clusters: 0,
                degenerate: true,
            },
        };
        snapshots.push(snapshot);
    }
    Ok((raster, snapshots))
}

/// Assign persistent ids to current clusters by maximum pixel overlap with
/// the previous snapshot's id map (exact assignment; cluster counts are
/// tiny). Unmatched clusters receive fresh ids.
fn match_identities(
    current: &[Option<usize>],
    n_clusters: usize,
    prev_ids: &[Option<u8>],
    next_id: &mut u8,
) -> Vec<u8> {
    let prev_used: Vec<u8> = {
        let mut v: Vec<u8> = prev_ids.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    // overlap[c][p] = pixels where current cluster c meets previous id p
    let mut overlap = vec![vec![0usize; prev_used.len()]; n_clusters];
    for i in 0..current.len() {
        if let (Some(c), Some(p)) = (current[i], prev_ids[i]) {
            let pi = prev_used.iter().position(|&u| u == p).unwrap();
            overlap[c][pi] += 1;
        }
    }
    let mut best: Vec<Option<usize>> = vec![None; n_clusters];
    let mut best_score = 0usize;
    // DFS over injective partial assignments cluster -> previous id
    fn dfs(
        c: usize,
        overlap: &[Vec<usize>],
        taken: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        score: usize,
        best: &mut Vec<Option<usize>>,
        best_score: &mut usize,
    ) {
        if c == overlap.len() {
            if score > *best_score || best.iter().all(|b| b.is_none()) {
                *best_score = score;
                best.clone_from(cur);
            }
            return;
        }
        dfs(c + 1, overlap, taken, cur, score, best, best_score);
        for p in 0..taken.len() {
            if !taken[p] && overlap[c][p] > 0 {
                taken[p] = true;
                cur[c] = Some(p);
                dfs(c + 1, overlap, taken, cur, score + overlap[c][p], best, best_score);
                cur[c] = None;
                taken[p] = false;
            }
        }
    }
    let mut taken = vec![false; prev_used.len()];
    let mut cur: Vec<Option<usize>> = vec![None; n_clusters];
    dfs(0, &overlap, &mut taken, &mut cur, 0, &mut best, &mut best_score);

    best.iter()
        .map(|assigned| match assigned {
            Some(p) => prev_used[*p],
            None => {
                let id = *next_id;
                *next_id += 1;
                id
            }
        })
        .collect()
}
