//! Gain / coincidence-detector sweep over a saved model: binds a fixed
//! image set per grid point and prints mean AMI, sync, rate and the share
//! of runs whose dominant period falls in [tau_rfr, tau_delay].
//!
//! Usage: sweep <model.dspm> [n_images] [kind] [n_objects] [tau_rfr] [tau_delay]

use std::time::Instant;

use dasbe_core::binder::{bind, BindingConfig};
use dasbe_core::dae::io::load_params;
use dasbe_core::datasets::{generate, DatasetKind, DatasetSpec, ObjectCount};
use dasbe_core::eval::{
    mean, raster_ami, raster_oscillation, rate_score, synchrony_score, EvalConfig,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let model_path = args.get(1).expect("model path");
    let n_images: usize = args.get(2).map_or(20, |s| s.parse().unwrap());
    let kind = DatasetKind::parse(args.get(3).map_or("shapes", |s| s)).unwrap();
    let n_objects: u8 = args.get(4).map_or(3, |s| s.parse().unwrap());
    let tau_rfr: u32 = args.get(5).map_or(8, |s| s.parse().unwrap());
    let tau_delay: usize = args.get(6).map_or(40, |s| s.parse().unwrap());

    let dae = load_params(std::path::Path::new(model_path)).unwrap();
    let spec = DatasetSpec {
        width: dae.meta.width,
        height: dae.meta.height,
        ..DatasetSpec::new(kind, ObjectCount::Fixed(n_objects), n_images, 2000)
    };
    let images = generate(&spec).unwrap();
    let eval = EvalConfig::default();

    let gains: &[f64] = &[49.0, 80.0, 120.0, 160.0, 220.0, 300.0];
    let ps: &[f64] = &[0.5, 0.8, 1.0];

    println!(
        "model {model_path}, {n_images} images of {} x{}, tau_rfr {tau_rfr}, tau_delay {tau_delay}",
        kind.name(),
        n_objects
    );
    println!(
        "{:>6} {:>5} | {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}",
        "gain", "p", "ami", "sync", "rate", "fair%", "sy8%", "osc%", "ms"
    );
    for &p in ps {
        for &gain in gains {
            let mut cfg = BindingConfig::default();
            cfg.attn_gain = Some(gain);
            cfg.cd.p = p;
            cfg.tau_rfr = tau_rfr;
            cfg.tau_delay = tau_delay;
            let t0 = Instant::now();
            let mut amis = Vec::new();
            let mut syncs = Vec::new();
            let mut rates = Vec::new();
            let mut osc_ok = 0usize;
            for (i, img) in images.iter().enumerate() {
                cfg.seed = 40 + i as u64;
                let (raster, _) = bind(img, &dae, &cfg).unwrap();
                if let Ok(a) = raster_ami(&raster, img, &eval) {
                    amis.push(a);
                }
                let (start, end) = (raster.steps() - eval.window, raster.steps());
                if let Ok(s) = synchrony_score(&raster, img, start, end) {
                    syncs.push(s);
                }
                if let Ok(r) = rate_score(&raster, img, start, end) {
                    rates.push(r);
                }
                let osc = raster_oscillation(&raster, start, end, 60);
                if osc.strength > 0.3
                    && osc.period.is_some_and(|per| {
                        per >= cfg.tau_rfr as usize && per <= cfg.tau_delay
                    })
                {
                    osc_ok += 1;
                }
            }
            let fair = rates.iter().filter(|r| r.abs() < 0.15).count();
            let sy8 = syncs.iter().filter(|s| **s >= 0.8).count();
            println!(
                "{:>6.0} {:>5.1} | {:>6.3} {:>6.3} {:>6.3} {:>6.2} {:>6.2} {:>6.2} {:>6.0}",
                gain,
                p,
                mean(&amis),
                mean(&syncs),
                mean(&rates),
                fair as f64 / n_images as f64,
                sy8 as f64 / n_images as f64,
                osc_ok as f64 / n_images as f64,
                t0.elapsed().as_millis() as f64 / n_images as f64
            );
        }
    }
}
