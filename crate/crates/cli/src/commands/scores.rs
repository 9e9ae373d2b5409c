//! `scores`: sliding synchrony and rate scores over saved binding runs,
//! terminal metrics per run, and the correlation of each score with the
//! clustering AMI. Run directories are located through their manifests, so
//! each raster is scored against the image it was bound to.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dasbe_core::datasets::container::load_dataset;
use dasbe_core::datasets::BinaryImage;
use dasbe_core::eval::{pearson, raster_ami, rate_score, spearman, synchrony_score, EvalConfig};
use dasbe_core::raster::{load_raster, SpikeRaster};

use super::util::out_dir;
use crate::config;
use crate::error::{CliError, Result};
use crate::manifest::{ensure_out_dir, RunManifest};
use crate::{plots, Common};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScoresCfg {
    /// Binding run directories (each holding manifest.json + raster.dsrs).
    runs: Vec<PathBuf>,
    /// Sliding-window step; the window length is `eval.window`.
    #[serde(default = "default_stride")]
    stride: usize,
    #[serde(default)]
    eval: EvalConfig,
}

fn default_stride() -> usize {
    10
}

struct RunData {
    name: String,
    series: Vec<(usize, f64, f64)>,
    ami: Option<f64>,
    sync: Option<f64>,
    rate: Option<f64>,
}

pub fn run(common: &Common, plots_flag: bool) -> Result<()> {
    let raw = config::load(&common.config, &common.set)?;
    let mut cfg: ScoresCfg = config::parse(raw)?;
    if let Some(seed) = common.seed {
        cfg.eval.seed = seed;
    }
    if cfg.runs.is_empty() {
        return Err(CliError::validation("config lists no runs"));
    }
    if cfg.eval.window == 0 || cfg.stride == 0 {
        return Err(CliError::validation("window and stride must be positive"));
    }

    let dir = ensure_out_dir(&out_dir(common))?;
    let mut manifest = RunManifest::new("scores", serde_json::to_value(&cfg)?);
    manifest.seed(cfg.eval.seed);

    let mut runs = Vec::with_capacity(cfg.runs.len());
    for run_dir in &cfg.runs {
        let (raster, image) = load_run(run_dir, &mut manifest)?;
        if cfg.eval.window > raster.steps() {
            return Err(CliError::validation(format!(
                "window {} larger than raster ({} steps) in {}",
                cfg.eval.window,
                raster.steps(),
                run_dir.display()
            )));
        }
        runs.push(score_run(run_dir, &raster, &image, &cfg));
    }

    write_evolution(&dir, &mut manifest, &runs)?;
    let means = write_evolution_mean(&dir, &mut manifest, &runs)?;
    write_scatter(&dir, &mut manifest, &runs)?;
    let (rho, corr, n) = write_correlations(&dir, &mut manifest, &runs)?;
    if plots_flag {
        render_plots(&dir, &mut manifest, &means, &runs)?;
    }
    manifest.write(&dir)?;

    let fmt = |v: Option<f64>| v.map_or("n/a".into(), |v| format!("{v:.3}"));
    println!(
        "scores: {} run(s), spearman(sync, ami) {} pearson(rate, ami) {} over {n} scored",
        runs.len(),
        fmt(rho),
        fmt(corr)
    );
    Ok(())
}

/// Resolve a run directory through its manifest: the raster it wrote and
/// the image it was bound to.
fn load_run(run_dir: &Path, manifest: &mut RunManifest) -> Result<(SpikeRaster, BinaryImage)> {
    let mpath = run_dir.join("manifest.json");
    let text = std::fs::read_to_string(&mpath).map_err(|_| {
        CliError::validation(format!("{} has no manifest.json", run_dir.display()))
    })?;
    let run_manifest: serde_json::Value = serde_json::from_str(&text)?;
    let rcfg = &run_manifest["config"];
    let dataset_path = rcfg["dataset_path"]
        .as_str()
        .ok_or_else(|| CliError::validation("run manifest lacks config.dataset_path"))?;
    let sample = rcfg["sample"].as_u64().unwrap_or(0) as usize;

    let raster_path = run_dir.join("raster.dsrs");
    manifest.input(&raster_path)?;
    let raster = load_raster(&raster_path)?;
    let dataset_path = resolve(run_dir, dataset_path);
    manifest.input(&dataset_path)?;
    let (_, images) = load_dataset(&dataset_path)?;
    let image = images.into_iter().nth(sample).ok_or_else(|| {
        CliError::validation(format!("sample {sample} out of range in {}", dataset_path.display()))
    })?;
    Ok((raster, image))
}

/// Paths in run manifests may be relative to where the run was launched;
/// try as-is first, then relative to the run directory.
fn resolve(run_dir: &Path, path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    if p.exists() || p.is_absolute() {
        p
    } else {
        run_dir.join(path)
    }
}

fn score_run(run_dir: &Path, raster: &SpikeRaster, image: &BinaryImage, cfg: &ScoresCfg) -> RunData {
    let steps = raster.steps();
    let w = cfg.eval.window;
    let mut series = Vec::new();
    let mut end = w;
    while end <= steps {
        let sync = synchrony_score(raster, image, end - w, end).unwrap_or(f64::NAN);
        let rate = rate_score(raster, image, end - w, end).unwrap_or(f64::NAN);
        series.push((end, sync, rate));
        if end == steps {
            break;
        }
        end = (end + cfg.stride).min(steps);
    }
    let ami = raster_ami(raster, image, &cfg.eval).ok();
    let sync = synchrony_score(raster, image, steps - w, steps).ok();
    let rate = rate_score(raster, image, steps - w, steps).ok();
    RunData {
        name: run_dir.display().to_string(),
        series,
        ami,
        sync,
        rate,
    }
}

fn write_evolution(dir: &Path, manifest: &mut RunManifest, runs: &[RunData]) -> Result<()> {
    let path = dir.join("evolution.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "run,window_end,sync,rate")?;
    for r in runs {
        for &(end, sync, rate) in &r.series {
            writeln!(f, "{},{},{},{}", r.name, end, sync, rate)?;
        }
    }
    manifest.output(&path)?;
    Ok(())
}

/// Mean series across runs per window end; the record behind the
/// evolution figure.
#[allow(clippy::type_complexity)]
fn write_evolution_mean(
    dir: &Path,
    manifest: &mut RunManifest,
    runs: &[RunData],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut acc: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in runs {
        for &(end, sync, rate) in &r.series {
            let e = acc.entry(end).or_default();
            if sync.is_finite() {
                e.0.push(sync);
            }
            if rate.is_finite() {
                e.1.push(rate);
            }
        }
    }
    let path = dir.join("evolution_mean.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "window_end,mean_sync,mean_rate,runs")?;
    let mut sync_series = Vec::new();
    let mut rate_series = Vec::new();
    for (end, (syncs, rates)) in &acc {
        let ms = dasbe_core::eval::mean(syncs);
        let mr = dasbe_core::eval::mean(rates);
        writeln!(f, "{},{},{},{}", end, ms, mr, syncs.len().max(rates.len()))?;
        sync_series.push(ms);
        rate_series.push(mr);
    }
    manifest.output(&path)?;
    Ok((sync_series, rate_series))
}

fn write_scatter(dir: &Path, manifest: &mut RunManifest, runs: &[RunData]) -> Result<()> {
    let path = dir.join("scatter.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "run,ami,sync,rate")?;
    for r in runs {
        let cell = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        writeln!(f, "{},{},{},{}", r.name, cell(r.ami), cell(r.sync), cell(r.rate))?;
    }
    manifest.output(&path)?;
    Ok(())
}

fn write_correlations(
    dir: &Path,
    manifest: &mut RunManifest,
    runs: &[RunData],
) -> Result<(Option<f64>, Option<f64>, usize)> {
    let scored: Vec<(f64, f64, f64)> = runs
        .iter()
        .filter_map(|r| match (r.ami, r.sync, r.rate) {
            (Some(a), Some(s), Some(t)) => Some((a, s, t)),
            _ => None,
        })
        .collect();
    let amis: Vec<f64> = scored.iter().map(|x| x.0).collect();
    let syncs: Vec<f64> = scored.iter().map(|x| x.1).collect();
    let rates: Vec<f64> = scored.iter().map(|x| x.2).collect();
    let rho = spearman(&syncs, &amis).ok();
    let corr = pearson(&rates, &amis).ok();

    let path = dir.join("correlations.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "pair,value,n")?;
    let cell = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    writeln!(f, "spearman_sync_ami,{},{}", cell(rho), scored.len())?;
    writeln!(f, "pearson_rate_ami,{},{}", cell(corr), scored.len())?;
    manifest.output(&path)?;
    Ok((rho, corr, scored.len()))
}

fn render_plots(
    dir: &Path,
    manifest: &mut RunManifest,
    means: &(Vec<f64>, Vec<f64>),
    runs: &[RunData],
) -> Result<()> {
    let sync_color = plots::group_color(1);
    let rate_color = plots::group_color(0);
    let img = plots::line_chart(
        &[(&means.0, sync_color), (&means.1, rate_color)],
        900,
        300,
    );
    save_png(dir, manifest, "evolution.png", &img)?;

    let sync_pts: Vec<(f64, f64)> = runs
        .iter()
        .filter_map(|r| Some((r.sync?, r.ami?)))
        .collect();
    let img = plots::scatter(&sync_pts, 420, 420, sync_color);
    save_png(dir, manifest, "scatter_sync.png", &img)?;

    let rate_pts: Vec<(f64, f64)> = runs
        .iter()
        .filter_map(|r| Some((r.rate?, r.ami?)))
        .collect();
    let img = plots::scatter(&rate_pts, 420, 420, rate_color);
    save_png(dir, manifest, "scatter_rate.png", &img)?;
    Ok(())
}

fn save_png(
    dir: &Path,
    manifest: &mut RunManifest,
    name: &str,
    img: &image::RgbImage,
) -> Result<()> {
    let path = dir.join(name);
    img.save(&path)?;
    manifest.output(&path)?;
    Ok(())
}
