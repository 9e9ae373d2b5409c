//! Single-run binding diagnostic: prints a per-group volley timeline over
//! the tail of the run plus per-group spike budgets in the scoring window,
//! to show whether unequal rates come from drop-outs or double volleys.
//!
//! Usage: diag <model.dspm> <gain> <p> [image_index] [batch_seed]
//!
//! Images come from a 20-image batch so indices line up with the sweep
//! example; the run seed is 40 + image_index, matching the sweep too.

use dasbe_core::binder::{bind, BindingConfig};
use dasbe_core::dae::io::load_params;
use dasbe_core::datasets::{generate, DatasetKind, DatasetSpec, ObjectCount};
use dasbe_core::eval::{raster_ami, raster_oscillation, rate_score, synchrony_score, EvalConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let model_path = args.get(1).expect("model path");
    let gain: f64 = args.get(2).map_or(120.0, |s| s.parse().unwrap());
    let p: f64 = args.get(3).map_or(1.0, |s| s.parse().unwrap());
    let index_arg = args.get(4).map_or("0", |s| s.as_str());
    let batch_seed: u64 = args.get(5).map_or(2000, |s| s.parse().unwrap());

    let dae = load_params(std::path::Path::new(model_path)).unwrap();
    let spec = DatasetSpec {
        width: dae.meta.width,
        height: dae.meta.height,
        ..DatasetSpec::new(DatasetKind::Shapes, ObjectCount::Fixed(3), 20, batch_seed)
    };
    let batch = generate(&spec).unwrap();

    // Scan mode: one summary line per image in the batch.
    if index_arg == "all" {
        let eval = EvalConfig::default();
        for (i, img) in batch.iter().enumerate() {
            let mut cfg = BindingConfig::default();
            cfg.attn_gain = Some(gain);
            cfg.cd.p = p;
            cfg.seed = 40 + i as u64;
            let (raster, _) = bind(img, &dae, &cfg).unwrap();
            let (start, end) = (raster.steps() - eval.window, raster.steps());
            let osc = raster_oscillation(&raster, start, end, 60);
            println!(
                "img {i:>2}: ami {:>6.3} sync {:>6.3} rate {:>6.3} period {:?} strength {:.2}",
                raster_ami(&raster, img, &eval).unwrap_or(f64::NAN),
                synchrony_score(&raster, img, start, end).unwrap_or(f64::NAN),
                rate_score(&raster, img, start, end).unwrap_or(f64::NAN),
                osc.period,
                osc.strength
            );
        }
        return;
    }

    let index: usize = index_arg.parse().unwrap();
    let mut batch = batch;
    let img = batch.remove(index);

    let mut cfg = BindingConfig::default();
    cfg.attn_gain = Some(gain);
    cfg.cd.p = p;
    cfg.seed = 40 + index as u64;
    let (raster, _) = bind(&img, &dae, &cfg).unwrap();

    // Group pixel indices by ground-truth label.
    let n_groups = img.n_objects as usize;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for i in 0..img.pixels.len() {
        if let Some(g) = img.gt_label(i) {
            groups[g as usize].push(i);
        }
    }

    let t_total = raster.steps();
    let tail = 300.min(t_total);
    println!("timeline (last {tail} steps, one char per step, digit = tenths of group firing)");
    for (g, members) in groups.iter().enumerate() {
        let mut line = String::new();
        for t in t_total - tail..t_total {
            let fired = members.iter().filter(|&&i| raster.get(t, i) == 1).count();
            let frac = fired as f64 / members.len() as f64;
            line.push(if fired == 0 {
                '.'
            } else {
                char::from_digit(((frac * 10.0).round() as u32).clamp(1, 9), 10).unwrap()
            });
        }
        println!("g{g} ({:>3} px): {line}", members.len());
    }

    let eval = EvalConfig::default();
    let (start, end) = (t_total - eval.window, t_total);
    println!("\nper-group spike counts in scoring window [{start},{end}):");
    for (g, members) in groups.iter().enumerate() {
        let counts: Vec<usize> = members
            .iter()
            .map(|&i| raster.spike_count(i, start, end))
            .collect();
        let total: usize = counts.iter().sum();
        let mean = total as f64 / members.len() as f64;
        let min = counts.iter().min().unwrap();
        let max = counts.iter().max().unwrap();
        println!("g{g}: total {total:>5}  per-neuron mean {mean:>6.2}  min {min}  max {max}");
    }

    let ami = raster_ami(&raster, &img, &eval);
    let sync = synchrony_score(&raster, &img, start, end);
    let rate = rate_score(&raster, &img, start, end);
    let osc = raster_oscillation(&raster, start, end, 60);
    println!(
        "\nami {:?}  sync {:?}  rate {:?}  period {:?} strength {:.3}",
        ami, sync, rate, osc.period, osc.strength
    );
}
