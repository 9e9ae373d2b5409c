//! Shared command plumbing: the dataset block every config embeds, digit
//! pools for the MNIST-backed families, and output-directory handling.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use dasbe_core::datasets::{
    generate, generate_with_digits, mnist, BinaryImage, BoundaryPolicy, DatasetKind, DatasetSpec,
    ObjectCount,
};
use dasbe_core::rng::derive_seed;

use crate::error::Result;
use crate::Common;

pub fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

/// Dataset block of a config file. Canvas size defaults to the family's
/// native size; MNIST-backed kinds read IDX files when paths are given and
/// fall back to the bundled synthetic glyph pool otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetCfg {
    pub kind: DatasetKind,
    #[serde(default)]
    pub width: Option<usize>,
    #[serde(default)]
    pub height: Option<usize>,
    pub n_objects: ObjectCount,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub boundary: BoundaryPolicy,
    #[serde(default)]
    pub mnist_images: Option<PathBuf>,
    #[serde(default)]
    pub mnist_labels: Option<PathBuf>,
    /// Synthetic digit pool size per class when no IDX files are given.
    #[serde(default = "default_digits_per_class")]
    pub digits_per_class: usize,
}

fn default_count() -> usize {
    200
}

fn default_digits_per_class() -> usize {
    30
}

impl DatasetCfg {
    pub fn spec(&self) -> DatasetSpec {
        let (dw, dh) = self.kind.default_size();
        DatasetSpec {
            kind: self.kind,
            width: self.width.unwrap_or(dw),
            height: self.height.unwrap_or(dh),
            n_objects: self.n_objects,
            count: self.count,
            seed: self.seed,
            boundary: self.boundary,
        }
    }

    /// Digit pool for the MNIST-backed kinds. The synthetic pool is seeded
    /// from the dataset seed so gen and train see the same digits.
    pub fn digit_pool(&self) -> Result<Option<Vec<BinaryImage>>> {
        if !matches!(self.kind, DatasetKind::MultiMnist | DatasetKind::MnistShape) {
            return Ok(None);
        }
        let pool = match &self.mnist_images {
            Some(images) => mnist::ingest_mnist(images, self.mnist_labels.as_deref())?,
            None => mnist::synthetic_digits(self.digits_per_class, derive_seed(self.seed, "digits", 0)),
        };
        Ok(Some(pool))
    }

    /// Generate the static dataset this block describes.
    pub fn materialize(&self) -> Result<Vec<BinaryImage>> {
        let spec = self.spec();
        match self.digit_pool()? {
            Some(pool) => Ok(generate_with_digits(&spec, &pool)?),
            None => Ok(generate(&spec)?),
        }
    }
}

/// Effective seed: the --seed flag overrides the config seed.
pub fn effective_seed(common: &Common, config_seed: u64) -> u64 {
    common.seed.unwrap_or(config_seed)
}
