//! `bind`: run the binding loop on one image (static, hierarchical) or one
//! sequence (dynamic). Always writes the spike raster and attention record;
//! with --plots adds the cluster-colored raster, firing-phase map and
//! population-activity figures, each backed by a CSV.

use std::io::Write as _;
use std::path::PathBuf;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use dasbe_core::binder::{bind, bind_dynamic, bind_hierarchical, BindingConfig, DynamicSnapshot};
use dasbe_core::dae::io::load_params;
use dasbe_core::datasets::container::{load_dataset, load_sequence};
use dasbe_core::datasets::BinaryImage;
use dasbe_core::eval::kmeans::{cluster_raster, ClusterConfig};
use dasbe_core::eval::{raster_ami, raster_oscillation, rate_score, synchrony_score, EvalConfig};
use dasbe_core::raster::{save_raster, write_attention_csv, write_population_csv, SpikeRaster};

use super::util::{effective_seed, out_dir};
use crate::config;
use crate::error::{CliError, Result};
use crate::manifest::{ensure_out_dir, RunManifest};
use crate::{plots, Common};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum Mode {
    #[default]
    Static,
    Hierarchical,
    Dynamic,
}

impl Mode {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "static" => Mode::Static,
            "hierarchical" => Mode::Hierarchical,
            "dynamic" => Mode::Dynamic,
            other => return Err(CliError::validation(format!("unknown mode `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BindCfg {
    model_path: PathBuf,
    /// Image container (static/hierarchical) or sequence file (dynamic).
    dataset_path: PathBuf,
    /// Image index within the container.
    #[serde(default)]
    sample: usize,
    #[serde(default)]
    mode: Mode,
    #[serde(default)]
    plots: bool,
    #[serde(default)]
    binding: BindingConfig,
    #[serde(default)]
    eval: EvalConfig,
}

pub fn run(common: &Common, mode_flag: Option<&str>, plots_flag: bool) -> Result<()> {
    let raw = config::load(&common.config, &common.set)?;
    let mut cfg: BindCfg = config::parse(raw)?;
    if let Some(m) = mode_flag {
        cfg.mode = Mode::parse(m)?;
    }
    cfg.plots |= plots_flag;
    cfg.binding.seed = effective_seed(common, cfg.binding.seed);

    let dir = ensure_out_dir(&out_dir(common))?;
    let mut manifest = RunManifest::new("bind", serde_json::to_value(&cfg)?);
    manifest.seed(cfg.binding.seed);
    manifest.input(&cfg.model_path)?;
    manifest.input(&cfg.dataset_path)?;
    let dae = load_params(&cfg.model_path)?;

    match cfg.mode {
        Mode::Static | Mode::Hierarchical => {
            let (spec, images) = load_dataset(&cfg.dataset_path)?;
            let image = images.get(cfg.sample).ok_or_else(|| {
                CliError::validation(format!(
                    "sample {} out of range; dataset has {} images",
                    cfg.sample,
                    images.len()
                ))
            })?;
            let _ = spec;
            let (raster, latent_raster, trace) = match cfg.mode {
                Mode::Static => {
                    let (r, t) = bind(image, &dae, &cfg.binding)?;
                    (r, None, t)
                }
                _ => {
                    let (r, lr, t) = bind_hierarchical(image, &dae, &cfg.binding)?;
                    (r, Some(lr), t)
                }
            };

            let raster_path = dir.join("raster.dsrs");
            save_raster(&raster_path, &raster)?;
            manifest.output(&raster_path)?;
            let attn_path = dir.join("attention.csv");
            write_attention_csv(&attn_path, &trace)?;
            manifest.output(&attn_path)?;
            if let Some(lr) = &latent_raster {
                let p = dir.join("latent_raster.dsrs");
                save_raster(&p, lr)?;
                manifest.output(&p)?;
            }

            summarize(&raster, image, &cfg.eval);
            if cfg.plots {
                static_plots(&dir, &mut manifest, &raster, image, &cfg.eval)?;
                if let Some(lr) = &latent_raster {
                    let colors = vec![Some(plots::FG); lr.n()];
                    let img = plots::raster_image(lr.steps(), |t, i| lr.get(t, i) == 1, lr.n(), &colors);
                    let p = dir.join("latent.png");
                    img.save(&p)?;
                    manifest.output(&p)?;
                }
            }
        }
        Mode::Dynamic => {
            let (_, seq) = load_sequence(&cfg.dataset_path)?;
            let (raster, snapshots) = bind_dynamic(&seq, &dae, &cfg.binding)?;

            let raster_path = dir.join("raster.dsrs");
            save_raster(&raster_path, &raster)?;
            manifest.output(&raster_path)?;
            let snap_path = dir.join("snapshots.csv");
            write_snapshots_csv(&snap_path, &snapshots)?;
            manifest.output(&snap_path)?;
            let strip_path = dir.join("strip.png");
            snapshot_strip(&snapshots, seq.frames[0].width, seq.frames[0].height)
                .save(&strip_path)?;
            manifest.output(&strip_path)?;

            let good = snapshots.iter().filter(|s| !s.degenerate).count();
            println!(
                "bind: dynamic run over {} frames, {} clusterable snapshot(s)",
                seq.frames.len(),
                good
            );
            if cfg.plots {
                population_plots(&dir, &mut manifest, &raster)?;
            }
        }
    }

    manifest.write(&dir)?;
    Ok(())
}

fn summarize(raster: &SpikeRaster, image: &BinaryImage, eval: &EvalConfig) {
    let end = raster.steps();
    let start = end.saturating_sub(eval.window);
    let ami = raster_ami(raster, image, eval);
    let sync = synchrony_score(raster, image, start, end);
    let rate = rate_score(raster, image, start, end);
    let osc = raster_oscillation(raster, start, end, eval.window.min(60));
    let fmt = |r: dasbe_core::Result<f64>| match r {
        Ok(v) => format!("{v:.3}"),
        Err(_) => "n/a".into(),
    };
    println!(
        "bind: ami {} sync {} rate {} period {:?} strength {:.2}",
        fmt(ami),
        fmt(sync),
        fmt(rate),
        osc.period,
        osc.strength
    );
}

/// Raster colored by trailing-window cluster, firing-phase map and
/// population curve, with their CSVs.
fn static_plots(
    dir: &std::path::Path,
    manifest: &mut RunManifest,
    raster: &SpikeRaster,
    image: &BinaryImage,
    eval: &EvalConfig,
) -> Result<()> {
    let end = raster.steps();
    let start = end.saturating_sub(eval.window);
    let n = raster.n();

    // cluster-colored raster; unclustered neurons stay hidden
    let ccfg = ClusterConfig {
        k: image.n_objects.max(1) as usize,
        restarts: eval.restarts,
        seed: eval.seed,
    };
    let mut colors: Vec<Option<image::Rgb<u8>>> = vec![None; n];
    let mut clusters_csv = String::from("neuron,cluster\n");
    if let Ok(assign) = cluster_raster(raster, &image.pixels, start, end, &ccfg) {
        for (&i, &c) in assign.neuron_ids.iter().zip(&assign.labels) {
            colors[i] = Some(plots::group_color(c));
            clusters_csv.push_str(&format!("{i},{c}\n"));
        }
    }
    write_text(dir, manifest, "clusters.csv", &clusters_csv)?;
    let img = plots::raster_image(raster.steps(), |t, i| raster.get(t, i) == 1, n, &colors);
    save_png(dir, manifest, "raster.png", &img)?;

    // phase map over the oscillation period in the same window
    let osc = raster_oscillation(raster, start, end, eval.window.min(60));
    let mut phases: Vec<Option<f64>> = vec![None; n];
    if let Some(period) = osc.period {
        for (i, phase) in phases.iter_mut().enumerate() {
            *phase = firing_phase(&raster.spike_times(i, start, end), period);
        }
    }
    let mut phase_csv = String::from("neuron,phase\n");
    for (i, p) in phases.iter().enumerate() {
        if let Some(p) = p {
            phase_csv.push_str(&format!("{i},{p}\n"));
        }
    }
    write_text(dir, manifest, "phase.csv", &phase_csv)?;
    let scale = 8;
    let img = plots::pixel_map(image.width, image.height, scale, |i| match phases[i] {
        Some(p) => plots::phase_color(p),
        None if image.pixels[i] == 1 => plots::GRID,
        None => plots::BG,
    });
    save_png(dir, manifest, "phase.png", &img)?;

    population_plots(dir, manifest, raster)
}

fn population_plots(
    dir: &std::path::Path,
    manifest: &mut RunManifest,
    raster: &SpikeRaster,
) -> Result<()> {
    let pop_path = dir.join("population.csv");
    write_population_csv(&pop_path, raster)?;
    manifest.output(&pop_path)?;
    let counts: Vec<f64> = raster.population_counts().iter().map(|&c| c as f64).collect();
    let img = plots::line_chart(&[(&counts, plots::FG)], 900, 240);
    save_png(dir, manifest, "population.png", &img)?;
    Ok(())
}

/// Circular mean of spike times within one oscillation period, in [0, 1).
fn firing_phase(times: &[usize], period: usize) -> Option<f64> {
    if times.is_empty() || period == 0 {
        return None;
    }
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &t in times {
        let a = (t % period) as f64 / period as f64 * std::f64::consts::TAU;
        s += a.sin();
        c += a.cos();
    }
    if s.abs() < 1e-12 && c.abs() < 1e-12 {
        return None;
    }
    Some((s.atan2(c) / std::f64::consts::TAU).rem_euclid(1.0))
}

fn write_snapshots_csv(path: &std::path::Path, snapshots: &[DynamicSnapshot]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "frame,pixel,label,degenerate")?;
    for s in snapshots {
        for (i, l) in s.labels.iter().enumerate() {
            let l = l.map_or(String::new(), |v| v.to_string());
            writeln!(f, "{},{},{},{}", s.frame, i, l, s.degenerate as u8)?;
        }
    }
    Ok(())
}

/// One pixel map per delay period, persistent identity colors, laid out
/// left to right.
fn snapshot_strip(snapshots: &[DynamicSnapshot], width: usize, height: usize) -> RgbImage {
    let scale = 6;
    let gap = 4;
    let tile_w = width * scale;
    let total_w = snapshots.len() * tile_w + snapshots.len().saturating_sub(1) * gap;
    let mut strip = RgbImage::from_pixel(total_w.max(1) as u32, (height * scale) as u32, plots::BG);
    for (f, snap) in snapshots.iter().enumerate() {
        let tile = plots::pixel_map(width, height, scale, |i| match snap.labels[i] {
            Some(id) => plots::group_color(id as usize),
            None => plots::BG,
        });
        let x0 = (f * (tile_w + gap)) as i64;
        image::imageops::replace(&mut strip, &tile, x0, 0);
    }
    strip
}

fn save_png(
    dir: &std::path::Path,
    manifest: &mut RunManifest,
    name: &str,
    img: &RgbImage,
) -> Result<()> {
    let path = dir.join(name);
    img.save(&path)?;
    manifest.output(&path)?;
    Ok(())
}

fn write_text(
    dir: &std::path::Path,
    manifest: &mut RunManifest,
    name: &str,
    content: &str,
) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    manifest.output(&path)?;
    Ok(())
}
