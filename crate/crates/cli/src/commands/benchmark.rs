//! `benchmark`: score a model x dataset grid, print the comparison table
//! and write the report plus per-sample scores as CSVs. A dataset cell
//! whose model file is missing is marked absent and the run continues.

use std::io::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use dasbe_core::baselines::{FoldedConfig, PcnnConfig};
use dasbe_core::binder::BindingConfig;
use dasbe_core::dae::io::load_params;
use dasbe_core::dae::DaeParams;
use dasbe_core::datasets::container::load_dataset;
use dasbe_core::eval::benchmark::{run_benchmark, BenchmarkConfig, BenchmarkResult, Model};
use dasbe_core::eval::EvalConfig;

use super::util::{out_dir, DatasetCfg};
use crate::config;
use crate::error::{CliError, Result};
use crate::manifest::{ensure_out_dir, RunManifest};
use crate::Common;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetEntry {
    name: String,
    /// Dataset container file; mutually exclusive with `dataset`.
    #[serde(default)]
    dataset_path: Option<PathBuf>,
    #[serde(default)]
    dataset: Option<DatasetCfg>,
    /// Trained parameters for this family; models that need one are marked
    /// absent when it is missing.
    #[serde(default)]
    model_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BenchCfg {
    datasets: Vec<DatasetEntry>,
    #[serde(default = "default_models")]
    models: Vec<String>,
    #[serde(default = "default_seeds")]
    seeds: Vec<u64>,
    #[serde(default)]
    binding: BindingConfig,
    #[serde(default)]
    folded: FoldedConfig,
    #[serde(default)]
    pcnn: PcnnConfig,
    #[serde(default)]
    eval: EvalConfig,
}

fn default_models() -> Vec<String> {
    vec!["dasbe".into(), "folded".into(), "pcnn".into()]
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

/// One scored (or absent) cell of the grid.
struct Cell {
    dataset: String,
    model: Model,
    result: Option<BenchmarkResult>,
}

pub fn run(common: &Common, model_flag: Option<&str>) -> Result<()> {
    let raw = config::load(&common.config, &common.set)?;
    let mut cfg: BenchCfg = config::parse(raw)?;
    if let Some(m) = model_flag {
        cfg.models = vec![m.to_string()];
    }
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    if cfg.datasets.is_empty() {
        return Err(CliError::validation("config lists no datasets"));
    }
    let models: Vec<Model> = cfg
        .models
        .iter()
        .map(|m| Model::parse(m).map_err(CliError::from))
        .collect::<Result<_>>()?;

    let dir = ensure_out_dir(&out_dir(common))?;
    let mut manifest = RunManifest::new("benchmark", serde_json::to_value(&cfg)?);
    for &s in &cfg.seeds {
        manifest.seed(s);
    }

    let mut cells = Vec::new();
    for entry in &cfg.datasets {
        let images = match (&entry.dataset_path, &entry.dataset) {
            (Some(path), _) => {
                manifest.input(path)?;
                load_dataset(path)?.1
            }
            (None, Some(ds)) => ds.materialize()?,
            (None, None) => {
                return Err(CliError::validation(format!(
                    "dataset `{}` needs dataset_path or dataset",
                    entry.name
                )))
            }
        };
        let dae: Option<DaeParams> = match &entry.model_path {
            Some(p) if p.exists() => {
                manifest.input(p)?;
                Some(load_params(p)?)
            }
            _ => None,
        };

        for &model in &models {
            if model.needs_dae() && dae.is_none() {
                eprintln!(
                    "benchmark: {}/{} absent (no trained parameters)",
                    entry.name,
                    model.name()
                );
                cells.push(Cell { dataset: entry.name.clone(), model, result: None });
                continue;
            }
            let bcfg = BenchmarkConfig {
                model,
                seeds: cfg.seeds.clone(),
                binding: cfg.binding.clone(),
                folded: cfg.folded.clone(),
                pcnn: cfg.pcnn.clone(),
                eval: cfg.eval.clone(),
            };
            let result = run_benchmark(&images, dae.as_ref(), &bcfg)?;
            cells.push(Cell { dataset: entry.name.clone(), model, result: Some(result) });
        }
    }

    write_report(&dir, &mut manifest, &cells)?;
    write_samples(&dir, &mut manifest, &cells)?;
    print_table(&models, &cells);
    manifest.write(&dir)?;
    Ok(())
}

fn write_report(
    dir: &std::path::Path,
    manifest: &mut RunManifest,
    cells: &[Cell],
) -> Result<()> {
    let path = dir.join("report.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "dataset,model,mean_ami,std_ami,excluded,status")?;
    for c in cells {
        match &c.result {
            Some(r) => writeln!(
                f,
                "{},{},{},{},{},ok",
                c.dataset,
                c.model.name(),
                r.mean,
                r.std,
                r.excluded
            )?,
            None => writeln!(f, "{},{},,,,absent", c.dataset, c.model.name())?,
        }
    }
    manifest.output(&path)?;
    Ok(())
}

fn write_samples(
    dir: &std::path::Path,
    manifest: &mut RunManifest,
    cells: &[Cell],
) -> Result<()> {
    let path = dir.join("samples.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "dataset,model,sample,seed,ami")?;
    for c in cells {
        let Some(r) = &c.result else { continue };
        for s in &r.samples {
            let ami = s.ami.map_or(String::new(), |v| v.to_string());
            writeln!(f, "{},{},{},{},{}", c.dataset, c.model.name(), s.sample, s.seed, ami)?;
        }
    }
    manifest.output(&path)?;
    Ok(())
}

fn print_table(models: &[Model], cells: &[Cell]) {
    print!("{:<14}", "dataset");
    for m in models {
        print!("{:>16}", m.name());
    }
    println!();
    let mut seen = Vec::new();
    for c in cells {
        if seen.contains(&c.dataset) {
            continue;
        }
        seen.push(c.dataset.clone());
        print!("{:<14}", c.dataset);
        for m in models {
            let cell = cells
                .iter()
                .find(|x| x.dataset == c.dataset && x.model == *m)
                .and_then(|x| x.result.as_ref());
            match cell {
                Some(r) => print!("{:>16}", format!("{:.3} ± {:.3}", r.mean, r.std)),
                None => print!("{:>16}", "absent"),
            }
        }
        println!();
    }
}
