//! Manual calibration probe: train a small autoencoder on single shapes,
//! run the binding loop on multi-object scenes and print the scores the
//! acceptance thresholds care about. Not part of the test suite.

use std::time::Instant;

use dasbe_core::binder::{bind, BindingConfig};
use dasbe_core::dae::train::{iou, train, TrainConfig};
use dasbe_core::dae::{forward, threshold_reconstruction, OptimizerKind};
use dasbe_core::datasets::noise::salt_pepper;
use dasbe_core::datasets::{generate, DatasetKind, DatasetSpec, ObjectCount};
use dasbe_core::eval::{
    raster_ami, raster_oscillation, rate_score, synchrony_score, EvalConfig,
};
use dasbe_core::rng::stream;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_train: usize = args.get(1).map_or(600, |s| s.parse().unwrap());
    let epochs: usize = args.get(2).map_or(30, |s| s.parse().unwrap());
    let lr: f64 = args.get(3).map_or(0.1, |s| s.parse().unwrap());
    let optimizer = match args.get(4).map(String::as_str) {
        Some("adam") => OptimizerKind::Adam,
        _ => OptimizerKind::Momentum,
    };
    let p_noise: f64 = args.get(5).map_or(0.5, |s| s.parse().unwrap());
    let ramp: usize = args.get(6).map_or(0, |s| s.parse().unwrap());
    let mixture = args.get(7).map(String::as_str) == Some("mix");

    let cache: Option<&String> = args.get(8);

    let t0 = Instant::now();
    let cfg = TrainConfig {
        seed: 7,
        epochs,
        learning_rate: lr,
        optimizer,
        p_noise,
        noise_ramp_epochs: ramp,
        noise_mixture: mixture,
        ..TrainConfig::default()
    };
    let dae = match cache.map(std::path::Path::new).filter(|p| p.exists()) {
        Some(path) => {
            let dae = dasbe_core::dae::io::load_params(path).unwrap();
            println!("[{:?}] loaded {}", t0.elapsed(), path.display());
            dae
        }
        None => {
            let train_spec =
                DatasetSpec::new(DatasetKind::Shapes, ObjectCount::Fixed(1), n_train, 100);
            let singles = generate(&train_spec).unwrap();
            println!("[{:?}] generated {} singles", t0.elapsed(), singles.len());
            let (dae, log) = train(&singles, &cfg).unwrap();
            for e in &log.epochs {
                if e.epoch % 5 == 0 || e.epoch + 1 == epochs {
                    println!(
                        "  epoch {:>3}: train {:.4} val {:.4}",
                        e.epoch, e.train_loss, e.val_loss
                    );
                }
            }
            println!("[{:?}] trained", t0.elapsed());
            if let Some(path) = cache {
                dasbe_core::dae::io::save_params(&dae, std::path::Path::new(path)).unwrap();
            }
            dae
        }
    };

    let probe_spec = DatasetSpec::new(DatasetKind::Shapes, ObjectCount::Fixed(1), 50, 900);
    let probes = generate(&probe_spec).unwrap();
    let mut noise_rng = stream(123, "probe-noise", 0);
    let (mut iou_clean, mut iou_noisy) = (0.0, 0.0);
    let mut usage = vec![0u32; cfg.latent_size];
    for img in &probes {
        let x: Vec<f64> = img.pixels.iter().map(|&p| p as f64).collect();
        let size: f64 = x.iter().sum();
        let (lat, out) = forward(&dae, &x);
        iou_clean += iou(&threshold_reconstruction(&out, size), &img.pixels);
        let noisy = salt_pepper(img, 0.5, &mut noise_rng);
        let xn: Vec<f64> = noisy.pixels.iter().map(|&p| p as f64).collect();
        let (_, outn) = forward(&dae, &xn);
        iou_noisy += iou(&threshold_reconstruction(&outn, size), &img.pixels);
        let top = lat.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        usage[top] += 1;
    }
    let cells = usage.iter().filter(|&&c| c > 0).count();
    println!(
        "recon: clean IoU {:.3} | denoise IoU {:.3} | latent cells used {}/{}",
        iou_clean / probes.len() as f64,
        iou_noisy / probes.len() as f64,
        cells,
        cfg.latent_size
    );

    let test_spec = DatasetSpec::new(DatasetKind::Shapes, ObjectCount::Fixed(3), 10, 2000);
    let tests = generate(&test_spec).unwrap();

    let bcfg = BindingConfig::default();
    println!(
        "binding: tau_delay={} tau_rfr={} horizon={} gain={:.1}",
        bcfg.tau_delay,
        bcfg.tau_rfr,
        bcfg.horizon,
        bcfg.effective_attn_gain(tests[0].n())
    );
    let ecfg = EvalConfig::default();

    for (i, img) in tests.iter().enumerate() {
        let run = Instant::now();
        let bcfg = BindingConfig { seed: 40 + i as u64, ..BindingConfig::default() };
        let (raster, _trace) = bind(img, &dae, &bcfg).unwrap();
        let dt = run.elapsed();

        let t_end = raster.steps();
        let w0 = t_end - ecfg.window;
        let sync_early = synchrony_score(&raster, img, 0, ecfg.window);
        let sync_late = synchrony_score(&raster, img, w0, t_end);
        let rate_late = rate_score(&raster, img, w0, t_end);
        let ami = raster_ami(&raster, img, &ecfg);
        let osc = raster_oscillation(&raster, t_end - 120, t_end, 60);
        let spikes: u32 = raster.population_counts()[w0..].iter().sum();
        println!(
            "img {i}: bind {dt:?} | sync {:?} -> {:?} | rate {:?} | ami {:?} | osc {:?} s={:.2} | tail spikes {}",
            sync_early.map(|v| (v * 100.0).round() / 100.0),
            sync_late.map(|v| (v * 100.0).round() / 100.0),
            rate_late.map(|v| (v * 100.0).round() / 100.0),
            ami.map(|v| (v * 100.0).round() / 100.0),
            osc.period,
            osc.strength,
            spikes
        );
    }
    println!("[{:?}] done", t0.elapsed());
}
