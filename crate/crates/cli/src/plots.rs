//! Minimal PNG rendering for the standard artifacts: spike rasters
//! colored by cluster, phase maps, line charts and scatters. No axes or
//! text; every plot is paired with a backing CSV that holds the numbers,
//! so the images are quick looks rather than the record.

use image::{Rgb, RgbImage};

pub const BG: Rgb<u8> = Rgb([255, 255, 255]);
pub const FG: Rgb<u8> = Rgb([40, 40, 40]);
pub const GRID: Rgb<u8> = Rgb([225, 225, 225]);

/// Distinct colors for cluster identities; wraps after 10.
pub fn group_color(g: usize) -> Rgb<u8> {
    const PALETTE: [[u8; 3]; 10] = [
        [230, 60, 60],
        [60, 120, 230],
        [50, 170, 80],
        [240, 160, 30],
        [150, 80, 200],
        [40, 180, 190],
        [220, 90, 170],
        [130, 130, 50],
        [90, 60, 20],
        [0, 90, 90],
    ];
    Rgb(PALETTE[g % PALETTE.len()])
}

/// Spike raster, time on x, neurons on y. `colors[i]` paints neuron i's
/// spikes; None hides the neuron (background row).
pub fn raster_image(
    steps: usize,
    spikes: impl Fn(usize, usize) -> bool,
    rows: usize,
    colors: &[Option<Rgb<u8>>],
) -> RgbImage {
    let mut img = RgbImage::from_pixel(steps as u32, rows as u32, BG);
    for i in 0..rows {
        let Some(color) = colors[i] else { continue };
        for t in 0..steps {
            if spikes(t, i) {
                img.put_pixel(t as u32, i as u32, color);
            }
        }
    }
    img
}

/// Pixel map at an integer upscale; `color(i)` gives pixel i's color.
pub fn pixel_map(
    width: usize,
    height: usize,
    scale: usize,
    color: impl Fn(usize) -> Rgb<u8>,
) -> RgbImage {
    let mut img = RgbImage::from_pixel((width * scale) as u32, (height * scale) as u32, BG);
    for r in 0..height {
        for c in 0..width {
            let rgb = color(r * width + c);
            for dr in 0..scale {
                for dc in 0..scale {
                    img.put_pixel((c * scale + dc) as u32, (r * scale + dr) as u32, rgb);
                }
            }
        }
    }
    img
}

/// Hue wheel for phases in [0, 1); saturated, full value.
pub fn phase_color(phase: f64) -> Rgb<u8> {
    let h = (phase.rem_euclid(1.0)) * 6.0;
    let x = (1.0 - (h % 2.0 - 1.0).abs()) * 255.0;
    let x = x as u8;
    match h as u32 {
        0 => Rgb([255, x, 0]),
        1 => Rgb([x, 255, 0]),
        2 => Rgb([0, 255, x]),
        3 => Rgb([0, x, 255]),
        4 => Rgb([x, 0, 255]),
        _ => Rgb([255, 0, x]),
    }
}

/// Polyline chart of one or more series over a shared x index.
pub fn line_chart(series: &[(&[f64], Rgb<u8>)], width: u32, height: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, BG);
    let (lo, hi) = series
        .iter()
        .flat_map(|(s, _)| s.iter().copied())
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() || !hi.is_finite() {
        return img;
    }
    let span = (hi - lo).max(1e-12);
    // zero line when it falls inside the range
    if lo < 0.0 && hi > 0.0 {
        let y = ((hi / span) * (height - 1) as f64) as u32;
        for x in 0..width {
            img.put_pixel(x, y, GRID);
        }
    }
    for (values, color) in series {
        if values.len() < 2 {
            continue;
        }
        let px = |i: usize| -> (i64, i64) {
            let x = i as f64 / (values.len() - 1) as f64 * (width - 1) as f64;
            let y = (hi - values[i]) / span * (height - 1) as f64;
            (x as i64, y as i64)
        };
        for i in 1..values.len() {
            if !values[i - 1].is_finite() || !values[i].is_finite() {
                continue;
            }
            draw_segment(&mut img, px(i - 1), px(i), *color);
        }
    }
    img
}

/// Scatter with 3x3 dots, both axes autoscaled.
pub fn scatter(points: &[(f64, f64)], width: u32, height: u32, color: Rgb<u8>) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, BG);
    let finite: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if finite.is_empty() {
        return img;
    }
    let (mut xlo, mut xhi, mut ylo, mut yhi) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &finite {
        xlo = xlo.min(x);
        xhi = xhi.max(x);
        ylo = ylo.min(y);
        yhi = yhi.max(y);
    }
    let xspan = (xhi - xlo).max(1e-12);
    let yspan = (yhi - ylo).max(1e-12);
    for &(x, y) in &finite {
        let cx = ((x - xlo) / xspan * (width - 1) as f64) as i64;
        let cy = ((yhi - y) / yspan * (height - 1) as f64) as i64;
        for dy in -1..=1 {
            for dx in -1..=1 {
                put_checked(&mut img, cx + dx, cy + dy, color);
            }
        }
    }
    img
}

fn put_checked(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
    }
}

fn draw_segment(img: &mut RgbImage, a: (i64, i64), b: (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((b.0 - a.0).abs(), (b.1 - a.1).abs());
    let steps = dx.max(dy).max(1);
    for s in 0..=steps {
        let x = a.0 + (b.0 - a.0) * s / steps;
        let y = a.1 + (b.1 - a.1) * s / steps;
        put_checked(img, x, y, color);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_stay_inside_bounds_and_render_content() {
        let s1: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let img = line_chart(&[(&s1, FG)], 200, 100);
        assert_eq!((img.width(), img.height()), (200, 100));
        assert!(img.pixels().any(|p| *p == FG));

        let pts = [(0.0, 0.0), (1.0, 1.0), (f64::NAN, 0.5)];
        let img = scatter(&pts, 100, 100, FG);
        assert!(img.pixels().any(|p| *p == FG));
    }

    #[test]
    fn phase_wheel_is_periodic() {
        assert_eq!(phase_color(0.0), phase_color(1.0));
        assert_ne!(phase_color(0.0), phase_color(0.5));
    }
}
