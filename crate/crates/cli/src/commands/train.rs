//! `train`: fit an autoencoder variant on single-object data, store the
//! best-validation snapshot and the per-epoch loss log. The trained file
//! carries a fingerprint of the data it was fitted on.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dasbe_core::dae::io::save_params;
use dasbe_core::dae::train::{
    train, train_contrastive, train_recurrent, write_loss_csv, TrainConfig, TrainLog,
};
use dasbe_core::datasets::container::{load_dataset, load_sequence};
use dasbe_core::datasets::{generate_moving, BinaryImage, ImageSequence};
use dasbe_core::rng::derive_seed;

use super::util::{effective_seed, out_dir, DatasetCfg};
use crate::config;
use crate::error::{CliError, Result};
use crate::manifest::{ensure_out_dir, RunManifest};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum Variant {
    #[default]
    Static,
    Contrastive,
    Recurrent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainCmdCfg {
    #[serde(default)]
    variant: Variant,
    /// Dataset container file, or a directory of sequence files for the
    /// recurrent variant. Mutually exclusive with `dataset`.
    #[serde(default)]
    dataset_path: Option<PathBuf>,
    /// Generate the training data in memory instead of loading a file.
    #[serde(default)]
    dataset: Option<DatasetCfg>,
    /// Frames per generated sequence (recurrent variant with `dataset`).
    #[serde(default = "default_frames")]
    n_frames: usize,
    #[serde(default)]
    train: TrainConfig,
}

fn default_frames() -> usize {
    8
}

pub fn run(common: &Common) -> Result<()> {
    let raw = config::load(&common.config, &common.set)?;
    let mut cfg: TrainCmdCfg = config::parse(raw)?;
    cfg.train.seed = effective_seed(common, cfg.train.seed);
    if cfg.dataset_path.is_some() && cfg.dataset.is_some() {
        return Err(CliError::validation(
            "config sets both dataset_path and dataset; pick one",
        ));
    }

    let dir = ensure_out_dir(&out_dir(common))?;
    let mut manifest = RunManifest::new("train", serde_json::to_value(&cfg)?);
    manifest.seed(cfg.train.seed);

    let (mut params, log) = match cfg.variant {
        Variant::Static | Variant::Contrastive => {
            let images = load_images(&cfg, &mut manifest)?;
            if cfg.variant == Variant::Static {
                train(&images, &cfg.train)?
            } else {
                let labels: Vec<u8> = images
                    .iter()
                    .map(|im| im.object_labels.first().copied().unwrap_or(0))
                    .collect();
                train_contrastive(&images, &labels, &cfg.train)?
            }
        }
        Variant::Recurrent => {
            let sequences = load_sequences(&cfg, &mut manifest)?;
            train_recurrent(&sequences, &cfg.train)?
        }
    };

    params.meta.train_fingerprint = data_fingerprint(&cfg, &manifest);
    let model_path = dir.join("model.dspm");
    let loss_path = dir.join("loss.csv");
    save_params(&params, &model_path)?;
    write_loss_csv(&loss_path, &log)?;
    manifest.output(&model_path)?;
    manifest.output(&loss_path)?;
    manifest.write(&dir)?;
    report(&log);
    Ok(())
}

fn load_images(cfg: &TrainCmdCfg, manifest: &mut RunManifest) -> Result<Vec<BinaryImage>> {
    match (&cfg.dataset_path, &cfg.dataset) {
        (Some(path), _) => {
            manifest.input(path)?;
            Ok(load_dataset(path)?.1)
        }
        (None, Some(ds)) => ds.materialize(),
        (None, None) => Err(CliError::validation(
            "config needs dataset_path or dataset",
        )),
    }
}

fn load_sequences(cfg: &TrainCmdCfg, manifest: &mut RunManifest) -> Result<Vec<ImageSequence>> {
    match (&cfg.dataset_path, &cfg.dataset) {
        (Some(path), _) => {
            let files = sequence_files(path)?;
            let mut out = Vec::with_capacity(files.len());
            for f in &files {
                manifest.input(f)?;
                out.push(load_sequence(f)?.1);
            }
            Ok(out)
        }
        (None, Some(ds)) => {
            let spec = ds.spec();
            let mut out = Vec::with_capacity(spec.count);
            for i in 0..spec.count {
                let mut sspec = spec.clone();
                sspec.seed = derive_seed(spec.seed, "sequence", i as u64);
                sspec.count = 1;
                out.push(generate_moving(&sspec, cfg.n_frames, None)?);
            }
            Ok(out)
        }
        (None, None) => Err(CliError::validation(
            "config needs dataset_path or dataset",
        )),
    }
}

/// Sequence files under a directory (sorted), or the path itself.
fn sequence_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "dsqs"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::validation(format!(
            "no sequence files under {}",
            path.display()
        )));
    }
    Ok(files)
}

/// Fingerprint of the training data: the input file hashes when data came
/// from disk, otherwise a hash of the generating dataset block.
fn data_fingerprint(cfg: &TrainCmdCfg, manifest: &RunManifest) -> String {
    let mut hasher = Sha256::new();
    if manifest.inputs.is_empty() {
        let block = serde_json::to_vec(&cfg.dataset).expect("dataset block serializes");
        hasher.update(&block);
    } else {
        for input in &manifest.inputs {
            hasher.update(input.sha256.as_bytes());
        }
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn report(log: &TrainLog) {
    if let Some(last) = log.epochs.last() {
        let best = log
            .epochs
            .iter()
            .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss))
            .expect("non-empty log");
        println!(
            "train: {} epochs, final val loss {:.4}, best val loss {:.4} (epoch {}), final val IoU {:.3}",
            log.epochs.len(),
            last.val_loss,
            best.val_loss,
            best.epoch,
            last.val_iou,
        );
    }
}
