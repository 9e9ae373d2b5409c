//! Salt-and-pepper corruption for DAE training.

use rand::Rng;

use super::BinaryImage;
use crate::rng::ChaCha8Rng;

/// Corrupt each pixel independently: with probability `p_noise/2` force it
/// to 1, with `p_noise/2` force it to 0, otherwise leave it. Ground-truth
/// groups stay untouched (they describe the clean image).
pub fn salt_pepper(image: &BinaryImage, p_noise: f64, rng: &mut ChaCha8Rng) -> BinaryImage {
    assert!((0.0..=1.0).contains(&p_noise), "p_noise out of [0,1]");
    let mut out = image.clone();
    for p in &mut out.pixels {
        let u: f64 = rng.random();
        if u < p_noise / 2.0 {
            *p = 1;
        } else if u < p_noise {
            *p = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, DatasetKind, DatasetSpec, ObjectCount};
    use crate::rng::stream;

    fn sample_image() -> BinaryImage {
        let spec = DatasetSpec::new(DatasetKind::Shapes, ObjectCount::Fixed(1), 1, 21);
        generate(&spec).unwrap().into_iter().next().unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let img = sample_image();
        let out = salt_pepper(&img, 0.0, &mut stream(1, "n", 0));
        assert_eq!(out, img);
    }

    #[test]
    fn full_noise_is_input_independent() {
        // p_noise = 1 resolves every pixel by the coin alone, so two
        // different inputs under the same stream corrupt identically.
        let img = sample_image();
        let blank = BinaryImage::empty(img.width, img.height);
        let a = salt_pepper(&img, 1.0, &mut stream(2, "n", 0));
        let b = salt_pepper(&blank, 1.0, &mut stream(2, "n", 0));
        assert_eq!(a.pixels, b.pixels);
        let ones = a.pixels.iter().filter(|&&p| p == 1).count();
        let frac = ones as f64 / a.pixels.len() as f64;
        assert!((frac - 0.5).abs() < 0.15, "ones fraction {frac}");
    }

    #[test]
    fn half_noise_flips_a_quarter_of_pixels() {
        // Forced assignments land on the opposite value half the time, so
        // the expected flip fraction at p_noise = 0.5 is 0.25.
        let img = sample_image();
        let mut total_flips = 0usize;
        let trials = 1000;
        for t in 0..trials {
            let out = salt_pepper(&img, 0.5, &mut stream(3, "mc", t));
            total_flips += out
                .pixels
                .iter()
                .zip(&img.pixels)
                .filter(|(a, b)| a != b)
                .count();
        }
        let frac = total_flips as f64 / (trials as usize * img.n()) as f64;
        assert!((frac - 0.25).abs() < 0.05, "flip fraction {frac}");
    }

    #[test]
    fn groups_survive_corruption() {
        let img = sample_image();
        let out = salt_pepper(&img, 0.9, &mut stream(4, "n", 0));
        assert_eq!(out.groups, img.groups);
        assert_eq!(out.n_objects, img.n_objects);
    }
}
