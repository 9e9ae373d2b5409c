//! `gen`: materialize a dataset from its config. Static families produce
//! one container file; the moving family produces one sequence file per
//! requested count, each on its own derived seed.

use serde::{Deserialize, Serialize};

use dasbe_core::datasets::container::{save_dataset, save_sequence};
use dasbe_core::datasets::{generate_moving, DatasetKind, Popup};
use dasbe_core::rng::derive_seed;

use super::util::{effective_seed, out_dir, DatasetCfg};
use crate::config;
use crate::error::Result;
use crate::manifest::{ensure_out_dir, RunManifest};
use crate::Common;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GenCfg {
    dataset: DatasetCfg,
    /// Frames per sequence (moving family only; `dataset.count` is then the
    /// number of sequence files).
    #[serde(default = "default_frames")]
    n_frames: usize,
    /// Optional mid-sequence popup object (moving family only).
    #[serde(default)]
    popup: Option<Popup>,
}

fn default_frames() -> usize {
    8
}

pub fn run(common: &Common) -> Result<()> {
    let raw = config::load(&common.config, &common.set)?;
    let mut cfg: GenCfg = config::parse(raw)?;
    cfg.dataset.seed = effective_seed(common, cfg.dataset.seed);

    let dir = ensure_out_dir(&out_dir(common))?;
    let mut manifest = RunManifest::new("gen", serde_json::to_value(&cfg)?);
    manifest.seed(cfg.dataset.seed);

    let spec = cfg.dataset.spec();
    if spec.kind == DatasetKind::MovingShapes {
        for i in 0..spec.count {
            let mut sspec = spec.clone();
            sspec.seed = derive_seed(spec.seed, "sequence", i as u64);
            sspec.count = 1;
            let seq = generate_moving(&sspec, cfg.n_frames, cfg.popup)?;
            let path = dir.join(format!("seq_{i:03}.dsqs"));
            save_sequence(&path, &sspec, &seq)?;
            manifest.output(&path)?;
        }
    } else {
        let images = cfg.dataset.materialize()?;
        let path = dir.join("dataset.dsbd");
        save_dataset(&path, &spec, &images)?;
        manifest.output(&path)?;
    }

    let n = manifest.outputs.len();
    manifest.write(&dir)?;
    println!("gen: wrote {n} file(s) under {}", dir.display());
    Ok(())
}
