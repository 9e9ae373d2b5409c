//! Training loops: static denoising, the contrastive-latent variant and
//! the recurrent next-frame predictor. All three share the same engine;
//! every RNG draw comes from a labeled stream so a (dataset, config, seed)
//! triple always yields the same parameters.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    cross_entropy, forward_batch, init_params, loss_and_grads, threshold_reconstruction, DaeMeta,
    DaeParams, Grads, LatentMode, Optimizer, OptimizerKind,
};
use crate::datasets::{noise::salt_pepper, BinaryImage, ImageSequence};
use crate::error::{CoreError, Result};
use crate::linalg::Mat;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub latent_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub p_noise: f64,
    /// Corruption warm-up: epoch e trains at p_noise · min(1, e / ramp).
    /// 0 disables the ramp. Representations form on easy inputs first;
    /// validation always runs at full p_noise.
    pub noise_ramp_epochs: usize,
    /// Draw each image's corruption level uniformly from [0, p_epoch]
    /// instead of using p_epoch itself. Keeps the model sharp on lightly
    /// corrupted inputs (the binding loop feeds it sparse gated patterns)
    /// while still covering full corruption.
    pub noise_mixture: bool,
    /// λ of the supervised contrastive term; 0 disables it.
    pub contrastive_weight: f64,
    pub contrastive_temp: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_size: 256,
            latent_size: 64,
            learning_rate: 0.1,
            momentum: 0.9,
            optimizer: OptimizerKind::Momentum,
            epochs: 30,
            batch_size: 32,
            p_noise: 0.5,
            noise_ramp_epochs: 0,
            noise_mixture: false,
            contrastive_weight: 0.0,
            contrastive_temp: 0.1,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(CoreError::validation("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(CoreError::validation("batch_size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.p_noise) {
            return Err(CoreError::validation("p_noise out of [0,1]"));
        }
        if self.contrastive_weight < 0.0 {
            return Err(CoreError::validation("contrastive_weight must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Mean IoU of thresholded reconstructions against clean validation
    /// targets at full corruption (NaN when there is no validation split).
    pub val_iou: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
    /// All-zero training images dropped before training.
    pub skipped: usize,
}

pub fn write_loss_csv(path: &Path, log: &TrainLog) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "epoch,train_loss,val_loss,val_iou")?;
    for e in &log.epochs {
        writeln!(f, "{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.val_iou)?;
    }
    Ok(())
}

/// Intersection over union of two binary vectors (1.0 when both empty).
pub fn iou(a: &[u8], b: &[u8]) -> f64 {
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x == 1 && y == 1 {
            inter += 1;
        }
        if x == 1 || y == 1 {
            union += 1;
        }
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Clean image as a target distribution (pixels / foreground count).
fn target_row(img: &BinaryImage) -> Vec<f64> {
    let fg = img.foreground_count() as f64;
    img.pixels.iter().map(|&p| p as f64 / fg).collect()
}

fn check_singles(dataset: &[BinaryImage]) -> Result<()> {
    for (i, img) in dataset.iter().enumerate() {
        if img.n_objects != 1 {
            return Err(CoreError::validation(format!(
                "training image {i} has {} objects; singles required",
                img.n_objects
            )));
        }
    }
    Ok(())
}

/// Train the denoising autoencoder on single-object images. Returns the
/// best-validation-loss snapshot and the per-epoch loss log.
pub fn train(dataset: &[BinaryImage], cfg: &TrainConfig) -> Result<(DaeParams, TrainLog)> {
    train_engine(dataset, None, cfg, LatentMode::RealSoftmax)
}

/// Same engine with the supervised contrastive term on latent
/// pre-activations; `labels` supply the factor identity per image.
pub fn train_contrastive(
    dataset: &[BinaryImage],
    labels: &[u8],
    cfg: &TrainConfig,
) -> Result<(DaeParams, TrainLog)> {
    if cfg.contrastive_weight > 0.0 && labels.len() != dataset.len() {
        return Err(CoreError::validation(
            "contrastive training needs one label per image",
        ));
    }
    train_engine(dataset, Some(labels), cfg, LatentMode::BinaryBernoulli)
}

fn train_engine(
    dataset: &[BinaryImage],
    labels: Option<&[u8]>,
    cfg: &TrainConfig,
    latent_mode: LatentMode,
) -> Result<(DaeParams, TrainLog)> {
    cfg.validate()?;
    check_singles(dataset)?;
    let (width, height) = match dataset.first() {
        Some(img) => (img.width, img.height),
        None => return Err(CoreError::validation("empty training set")),
    };
    let n = width * height;

    let mut usable: Vec<usize> = Vec::new();
    let mut skipped = 0usize;
    for (i, img) in dataset.iter().enumerate() {
        if img.width != width || img.height != height {
            return Err(CoreError::validation("mixed image sizes in training set"));
        }
        if img.foreground_count() == 0 {
            skipped += 1;
        } else {
            usable.push(i);
        }
    }
    if usable.is_empty() {
        return Err(CoreError::validation("no non-empty training images"));
    }

    let mean_px = usable
        .iter()
        .map(|&i| dataset[i].foreground_count() as f64)
        .sum::<f64>()
        / usable.len() as f64;

    let mut order = usable.clone();
    order.shuffle(&mut stream(cfg.seed, "split", 0));
    let n_val = if order.len() >= 10 {
        ((order.len() as f64 * cfg.val_fraction).ceil() as usize).max(1)
    } else {
        0
    };
    let (val_idx, train_idx) = order.split_at(n_val);

    let meta = DaeMeta {
        width,
        height,
        mean_object_px: mean_px,
        train_fingerprint: String::new(),
    };
    let mut params = init_params(
        n,
        cfg.hidden_size,
        cfg.latent_size,
        latent_mode,
        false,
        cfg.seed,
        meta,
    );
    let mut opt = Optimizer::with_kind(&params, cfg.learning_rate, cfg.momentum, cfg.optimizer);

    // fixed validation corruption so epoch losses are comparable
    let mut val_x_rows = Vec::with_capacity(val_idx.len() * n);
    let mut val_y_rows = Vec::with_capacity(val_idx.len() * n);
    for &i in val_idx {
        let mut rng = stream(cfg.seed, "valnoise", i as u64);
        let noisy = salt_pepper(&dataset[i], cfg.p_noise, &mut rng);
        val_x_rows.extend(noisy.pixels.iter().map(|&p| p as f64));
        val_y_rows.extend(target_row(&dataset[i]));
    }
    let val_x = Mat::from_vec(val_idx.len(), n, val_x_rows);
    let val_y = Mat::from_vec(val_idx.len(), n, val_y_rows);

    let mut log = TrainLog { epochs: Vec::new(), skipped };
    let mut best: Option<(f64, DaeParams)> = None;

    for epoch in 0..cfg.epochs {
        let mut idx = train_idx.to_vec();
        idx.shuffle(&mut stream(cfg.seed, "order", epoch as u64));
        let mut noise_rng = stream(cfg.seed, "noise", epoch as u64);
        let p_epoch = if epoch < cfg.noise_ramp_epochs {
            cfg.p_noise * epoch as f64 / cfg.noise_ramp_epochs as f64
        } else {
            cfg.p_noise
        };
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in idx.chunks(cfg.batch_size) {
            let bx = Mat::from_vec(
                chunk.len(),
                n,
                chunk
                    .iter()
                    .flat_map(|&i| {
                        let p_img = if cfg.noise_mixture {
                            p_epoch * noise_rng.random::<f64>()
                        } else {
                            p_epoch
                        };
                        salt_pepper(&dataset[i], p_img, &mut noise_rng)
                            .pixels
                            .iter()
                            .map(|&p| p as f64)
                            .collect::<Vec<f64>>()
                    })
                    .collect(),
            );
            let by = Mat::from_vec(
                chunk.len(),
                n,
                chunk.iter().flat_map(|&i| target_row(&dataset[i])).collect(),
            );
            let blabels: Option<Vec<u8>> =
                labels.map(|ls| chunk.iter().map(|&i| ls[i]).collect());
            let cache = forward_batch(&params, bx, None);
            let (loss, grads) = loss_and_grads(
                &params,
                &cache,
                &by,
                blabels.as_deref(),
                cfg.contrastive_weight,
                cfg.contrastive_temp,
            );
            opt.step(&mut params, &grads);
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = epoch_loss / seen.max(1) as f64;
        let (val_loss, val_iou) = if val_idx.is_empty() {
            (train_loss, f64::NAN)
        } else {
            let cache = forward_batch(&params, val_x.clone(), None);
            let mut iou_sum = 0.0;
            for (r, &i) in val_idx.iter().enumerate() {
                let rec = threshold_reconstruction(cache.out.row(r), mean_px);
                iou_sum += iou(&rec, &dataset[i].pixels);
            }
            (
                cross_entropy(&cache.out, &val_y),
                iou_sum / val_idx.len() as f64,
            )
        };
        log.epochs.push(EpochStats { epoch, train_loss, val_loss, val_iou });
        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, params.clone()));
        }
    }

    let (_, best_params) = best.expect("at least one epoch ran");
    Ok((best_params, log))
}

/// Train the recurrent predictive variant on single-object sequences: the
/// decoder target is the NEXT frame, the latent carries across frames
/// through the recurrent weights (previous state detached).
pub fn train_recurrent(
    sequences: &[ImageSequence],
    cfg: &TrainConfig,
) -> Result<(DaeParams, TrainLog)> {
    cfg.validate()?;
    let first = sequences
        .first()
        .and_then(|s| s.frames.first())
        .ok_or_else(|| CoreError::validation("empty sequence set"))?;
    let (width, height) = (first.width, first.height);
    let n = width * height;
    for (i, seq) in sequences.iter().enumerate() {
        if seq.n_objects() != 1 {
            return Err(CoreError::validation(format!(
                "sequence {i} has {} objects; singles required",
                seq.n_objects()
            )));
        }
        if seq.frames.len() < 2 {
            return Err(CoreError::validation(format!("sequence {i} too short")));
        }
    }

    let mean_px = sequences
        .iter()
        .map(|s| s.frames[0].foreground_count() as f64)
        .sum::<f64>()
        / sequences.len() as f64;

    let mut order: Vec<usize> = (0..sequences.len()).collect();
    order.shuffle(&mut stream(cfg.seed, "split", 0));
    let n_val = if order.len() >= 10 {
        ((order.len() as f64 * cfg.val_fraction).ceil() as usize).max(1)
    } else {
        0
    };
    let (val_idx, train_idx) = order.split_at(n_val);

    let meta = DaeMeta {
        width,
        height,
        mean_object_px: mean_px,
        train_fingerprint: String::new(),
    };
    let mut params = init_params(
        n,
        cfg.hidden_size,
        cfg.latent_size,
        LatentMode::RealSoftmax,
        true,
        cfg.seed,
        meta,
    );
    let mut opt = Optimizer::with_kind(&params, cfg.learning_rate, cfg.momentum, cfg.optimizer);
    let k = cfg.latent_size;
    let uniform = vec![1.0 / k as f64; k];

    let mut log = TrainLog::default();
    let mut best: Option<(f64, DaeParams)> = None;

    // one optimizer step per sequence, gradients averaged over transitions
    let run_sequence = |params: &DaeParams,
                        seq: &ImageSequence,
                        noise_rng: &mut crate::rng::ChaCha8Rng,
                        p_noise: f64,
                        mixture: bool,
                        want_grads: bool|
     -> (f64, usize, f64, Option<Grads>) {
        let mut acc = want_grads.then(|| Grads::zeros_like(params));
        let mut prev = uniform.clone();
        let mut loss_sum = 0.0;
        let mut iou_sum = 0.0;
        let mut count = 0usize;
        for kf in 0..seq.frames.len() - 1 {
            let target = &seq.frames[kf + 1];
            if target.foreground_count() == 0 {
                continue;
            }
            let p_frame = if mixture { p_noise * noise_rng.random::<f64>() } else { p_noise };
            let noisy = salt_pepper(&seq.frames[kf], p_frame, noise_rng);
            let x = Mat::from_vec(1, n, noisy.pixels.iter().map(|&p| p as f64).collect());
            let y = Mat::from_vec(1, n, target_row(target));
            let prev_mat = Mat::from_vec(1, k, prev.clone());
            let cache = forward_batch(params, x, Some(prev_mat));
            prev = cache.latent.row(0).to_vec();
            iou_sum += iou(
                &threshold_reconstruction(cache.out.row(0), mean_px),
                &target.pixels,
            );
            if let Some(acc) = acc.as_mut() {
                let (loss, g) = loss_and_grads(params, &cache, &y, None, 0.0, 1.0);
                add_grads(acc, &g);
                loss_sum += loss;
            } else {
                loss_sum += cross_entropy(&cache.out, &y);
            }
            count += 1;
        }
        if let Some(acc) = acc.as_mut() {
            scale_grads(acc, 1.0 / count.max(1) as f64);
        }
        (loss_sum, count, iou_sum, acc)
    };

    for epoch in 0..cfg.epochs {
        let mut idx = train_idx.to_vec();
        idx.shuffle(&mut stream(cfg.seed, "order", epoch as u64));
        let mut noise_rng = stream(cfg.seed, "noise", epoch as u64);
        let p_epoch = if epoch < cfg.noise_ramp_epochs {
            cfg.p_noise * epoch as f64 / cfg.noise_ramp_epochs as f64
        } else {
            cfg.p_noise
        };
        let mut epoch_loss = 0.0;
        let mut transitions = 0usize;
        for &si in &idx {
            let (loss, count, _, grads) =
                run_sequence(&params, &sequences[si], &mut noise_rng, p_epoch, cfg.noise_mixture, true);
            if let Some(g) = grads {
                opt.step(&mut params, &g);
            }
            epoch_loss += loss;
            transitions += count;
        }
        let train_loss = epoch_loss / transitions.max(1) as f64;
        let (val_loss, val_iou) = if val_idx.is_empty() {
            (train_loss, f64::NAN)
        } else {
            let mut vloss = 0.0;
            let mut viou = 0.0;
            let mut vcount = 0usize;
            for &si in val_idx {
                let mut vrng = stream(cfg.seed, "valnoise", si as u64);
                let (loss, count, iou_sum, _) =
                    run_sequence(&params, &sequences[si], &mut vrng, cfg.p_noise, false, false);
                vloss += loss;
                viou += iou_sum;
                vcount += count;
            }
            (vloss / vcount.max(1) as f64, viou / vcount.max(1) as f64)
        };
        log.epochs.push(EpochStats { epoch, train_loss, val_loss, val_iou });
        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, params.clone()));
        }
    }
    let (_, best_params) = best.expect("at least one epoch ran");
    Ok((best_params, log))
}

fn add_grads(acc: &mut Grads, g: &Grads) {
    acc.w1.add_scaled(&g.w1, 1.0);
    acc.w2.add_scaled(&g.w2, 1.0);
    acc.w3.add_scaled(&g.w3, 1.0);
    acc.w4.add_scaled(&g.w4, 1.0);
    for (a, b) in acc.b1.iter_mut().zip(&g.b1) {
        *a += b;
    }
    for (a, b) in acc.b2.iter_mut().zip(&g.b2) {
        *a += b;
    }
    for (a, b) in acc.b3.iter_mut().zip(&g.b3) {
        *a += b;
    }
    for (a, b) in acc.b4.iter_mut().zip(&g.b4) {
        *a += b;
    }
    if let (Some(a), Some(b)) = (acc.recurrent.as_mut(), g.recurrent.as_ref()) {
        a.add_scaled(b, 1.0);
    }
}

fn scale_grads(g: &mut Grads, s: f64) {
    g.w1.scale(s);
    g.w2.scale(s);
    g.w3.scale(s);
    g.w4.scale(s);
    for v in g.b1.iter_mut() {
        *v *= s;
    }
    for v in g.b2.iter_mut() {
        *v *= s;
    }
    for v in g.b3.iter_mut() {
        *v *= s;
    }
    for v in g.b4.iter_mut() {
        *v *= s;
    }
    if let Some(m) = g.recurrent.as_mut() {
        m.scale(s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, DatasetKind, DatasetSpec, ObjectCount};

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            hidden_size: 32,
            latent_size: 12,
            epochs: 3,
            batch_size: 8,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    fn singles(count: usize) -> Vec<BinaryImage> {
        let spec = DatasetSpec::new(DatasetKind::Shapes, ObjectCount::Fixed(1), count, 31);
        generate(&spec).unwrap()
    }

    #[test]
    fn multi_object_training_set_rejected() {
        let spec = DatasetSpec::new(DatasetKind::Shapes, ObjectCount::Fixed(2), 4, 3);
        let imgs = generate(&spec).unwrap();
        assert!(train(&imgs, &small_cfg()).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let imgs = singles(24);
        let (a, _) = train(&imgs, &small_cfg()).unwrap();
        let (b, _) = train(&imgs, &small_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_weight_contrastive_matches_plain_training() {
        let imgs = singles(24);
        let labels: Vec<u8> = imgs.iter().map(|i| i.object_labels[0]).collect();
        let (plain, _) = train(&imgs, &small_cfg()).unwrap();
        let (con, _) = train_contrastive(&imgs, &labels, &small_cfg()).unwrap();
        assert_eq!(plain.w1, con.w1);
        assert_eq!(plain.w4, con.w4);
        assert_eq!(plain.b4, con.b4);
        assert_eq!(con.latent_mode, LatentMode::BinaryBernoulli);
    }

    #[test]
    fn loss_log_has_one_row_per_epoch() {
        let imgs = singles(16);
        let (_, log) = train(&imgs, &small_cfg()).unwrap();
        assert_eq!(log.epochs.len(), 3);
        assert_eq!(log.skipped, 0);
    }
}
