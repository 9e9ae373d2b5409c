//! Benchmark driver: score one model over a dataset across several seeds.
//! Each (sample, seed) run gets its own derived seed so models face the
//! same randomness structure; runs whose clustering is degenerate are
//! excluded and counted rather than scored as zero.

use serde::{Deserialize, Serialize};

use crate::baselines::{folded_dae_run, pcnn_run, FoldedConfig, PcnnConfig};
use crate::binder::{bind, BindingConfig};
use crate::dae::DaeParams;
use crate::datasets::BinaryImage;
use crate::error::{CoreError, Result};
use crate::eval::{activation_ami, raster_ami, stats, EvalConfig};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Dasbe,
    Folded,
    Pcnn,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Dasbe => "dasbe",
            Model::Folded => "folded",
            Model::Pcnn => "pcnn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "dasbe" => Model::Dasbe,
            "folded" => Model::Folded,
            "pcnn" => Model::Pcnn,
            other => return Err(CoreError::validation(format!("unknown model `{other}`"))),
        })
    }

    pub fn needs_dae(self) -> bool {
        !matches!(self, Model::Pcnn)
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub model: Model,
    /// One full pass over the dataset per seed.
    pub seeds: Vec<u64>,
    pub binding: BindingConfig,
    pub folded: FoldedConfig,
    pub pcnn: PcnnConfig,
    pub eval: EvalConfig,
}

impl BenchmarkConfig {
    pub fn new(model: Model) -> Self {
        BenchmarkConfig {
            model,
            seeds: vec![0, 1, 2],
            binding: BindingConfig::default(),
            folded: FoldedConfig::default(),
            pcnn: PcnnConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

/// Score of one (sample, seed) run; `None` when the run was excluded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample: usize,
    pub seed: u64,
    pub ami: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub model: Model,
    /// (seed, mean AMI over scored samples) per seed.
    pub per_seed: Vec<(u64, f64)>,
    /// Mean of the per-seed means.
    pub mean: f64,
    /// Sample standard deviation of the per-seed means.
    pub std: f64,
    pub excluded: usize,
    pub samples: Vec<SampleScore>,
}

/// Degenerate clustering or an undefined score excludes the run; anything
/// else is a real failure.
fn is_excludable(e: &CoreError) -> bool {
    matches!(e, CoreError::DegenerateClustering | CoreError::UndefinedScore)
}

pub fn run_benchmark(
    images: &[BinaryImage],
    dae: Option<&DaeParams>,
    cfg: &BenchmarkConfig,
) -> Result<BenchmarkResult> {
    if images.is_empty() {
        return Err(CoreError::validation("benchmark needs at least one image"));
    }
    if cfg.seeds.is_empty() {
        return Err(CoreError::validation("benchmark needs at least one seed"));
    }
    if cfg.model.needs_dae() && dae.is_none() {
        return Err(CoreError::validation(format!(
            "model {} needs trained autoencoder parameters",
            cfg.model.name()
        )));
    }

    let mut samples = Vec::with_capacity(images.len() * cfg.seeds.len());
    let mut per_seed = Vec::with_capacity(cfg.seeds.len());
    let mut excluded = 0usize;
    for &seed in &cfg.seeds {
        let mut scores = Vec::new();
        for (idx, image) in images.iter().enumerate() {
            let run_seed = derive_seed(seed, cfg.model.name(), idx as u64);
            let outcome = score_one(image, dae, cfg, run_seed);
            let ami = match outcome {
                Ok(v) => Some(v),
                Err(e) if is_excludable(&e) => None,
                Err(e) => return Err(e),
            };
            if let Some(v) = ami {
                scores.push(v);
            } else {
                excluded += 1;
            }
            samples.push(SampleScore { sample: idx, seed, ami });
        }
        if !scores.is_empty() {
            per_seed.push((seed, stats::mean(&scores)));
        }
    }
    if per_seed.is_empty() {
        return Err(CoreError::UndefinedScore);
    }
    let means: Vec<f64> = per_seed.iter().map(|&(_, m)| m).collect();
    Ok(BenchmarkResult {
        model: cfg.model,
        mean: stats::mean(&means),
        std: stats::sample_std(&means),
        per_seed,
        excluded,
        samples,
    })
}

fn score_one(
    image: &BinaryImage,
    dae: Option<&DaeParams>,
    cfg: &BenchmarkConfig,
    run_seed: u64,
) -> Result<f64> {
    let eval = EvalConfig { seed: run_seed, ..cfg.eval.clone() };
    match cfg.model {
        Model::Dasbe => {
            let bcfg = BindingConfig { seed: run_seed, ..cfg.binding.clone() };
            let (raster, _) = bind(image, dae.unwrap(), &bcfg)?;
            raster_ami(&raster, image, &eval)
        }
        Model::Folded => {
            let fcfg = FoldedConfig { seed: run_seed, ..cfg.folded.clone() };
            let trace = folded_dae_run(image, dae.unwrap(), &fcfg)?;
            activation_ami(&trace, image, &eval)
        }
        Model::Pcnn => {
            let pcfg = PcnnConfig { seed: run_seed, ..cfg.pcnn.clone() };
            let raster = pcnn_run(image, &pcfg);
            raster_ami(&raster, image, &eval)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, DatasetKind, DatasetSpec, ObjectCount};

    #[test]
    fn pcnn_benchmark_runs_end_to_end() {
        let spec = DatasetSpec::new(DatasetKind::Bars, ObjectCount::Fixed(2), 3, 11);
        let images = generate(&spec).unwrap();
        let mut cfg = BenchmarkConfig::new(Model::Pcnn);
        cfg.seeds = vec![0, 1];
        cfg.pcnn.horizon = 300;
        cfg.eval.window = 120;
        let res = run_benchmark(&images, None, &cfg).unwrap();
        assert_eq!(res.samples.len(), 6);
        assert!(!res.per_seed.is_empty() && res.per_seed.len() <= 2);
        assert!(res.mean.is_finite());
        for s in &res.samples {
            if let Some(v) = s.ami {
                assert!((-1.0..=1.0).contains(&v), "ami out of range: {v}");
            }
        }
    }

    #[test]
    fn dae_models_require_params() {
        let spec = DatasetSpec::new(DatasetKind::Bars, ObjectCount::Fixed(2), 1, 3);
        let images = generate(&spec).unwrap();
        let cfg = BenchmarkConfig::new(Model::Dasbe);
        assert!(run_benchmark(&images, None, &cfg).is_err());
    }

    #[test]
    fn benchmark_is_deterministic() {
        let spec = DatasetSpec::new(DatasetKind::Bars, ObjectCount::Fixed(2), 2, 4);
        let images = generate(&spec).unwrap();
        let mut cfg = BenchmarkConfig::new(Model::Pcnn);
        cfg.seeds = vec![7];
        cfg.pcnn.horizon = 200;
        let a = run_benchmark(&images, None, &cfg).unwrap();
        let b = run_benchmark(&images, None, &cfg).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.excluded, b.excluded);
    }
}
