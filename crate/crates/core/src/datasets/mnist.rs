//! IDX-format digit ingestion plus a built-in synthetic digit pool.
//!
//! The IDX reader follows the standard MNIST binary layout (big-endian
//! magic and dimension words, row-major uint8 pixels). When no digit files
//! are available, `synthetic_digits` provides a deterministic stand-in pool
//! rendered from a 5×7 dot-matrix font, so the digit-backed benchmarks run
//! self-contained.

use std::fs;
use std::path::Path;

use rand::Rng;

use super::BinaryImage;
use crate::error::{CoreError, Result};
use crate::rng::stream;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;
/// Binarization threshold: pixel > 127 becomes foreground.
pub const BINARIZE_THRESHOLD: u8 = 127;

fn ingest_err(offset: usize, reason: impl Into<String>) -> CoreError {
    CoreError::Ingest {
        offset: offset as u64,
        reason: reason.into(),
    }
}

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if end > bytes.len() {
        return Err(ingest_err(offset, "truncated header word"));
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Read an IDX image file and binarize each digit. If `labels_path` is
/// given, digit classes are attached as object labels (otherwise label 0).
pub fn ingest_mnist(images_path: &Path, labels_path: Option<&Path>) -> Result<Vec<BinaryImage>> {
    let bytes = fs::read(images_path)?;
    let magic = read_u32_be(&bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(ingest_err(0, format!("bad image magic 0x{magic:08x}")));
    }
    let count = read_u32_be(&bytes, 4)? as usize;
    let rows = read_u32_be(&bytes, 8)? as usize;
    let cols = read_u32_be(&bytes, 12)? as usize;
    let body = 16;
    let need = body + count * rows * cols;
    if bytes.len() < need {
        return Err(ingest_err(
            bytes.len(),
            format!("truncated pixel data: need {need} bytes"),
        ));
    }

    let labels = match labels_path {
        Some(p) => Some(read_labels(p, count)?),
        None => None,
    };

    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let start = body + i * rows * cols;
        let mut img = BinaryImage::empty(cols, rows);
        let label = labels.as_ref().map_or(0, |l| l[i]);
        let pts: Vec<(usize, usize)> = (0..rows * cols)
            .filter(|&j| bytes[start + j] > BINARIZE_THRESHOLD)
            .map(|j| (j / cols, j % cols))
            .collect();
        img.add_object(&pts, label);
        out.push(img);
    }
    Ok(out)
}

fn read_labels(path: &Path, expected: usize) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    let magic = read_u32_be(&bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(ingest_err(0, format!("bad label magic 0x{magic:08x}")));
    }
    let count = read_u32_be(&bytes, 4)? as usize;
    if count != expected {
        return Err(ingest_err(4, format!("label count {count} != image count {expected}")));
    }
    if bytes.len() < 8 + count {
        return Err(ingest_err(bytes.len(), "truncated label data"));
    }
    Ok(bytes[8..8 + count].to_vec())
}

/// Write binary images as an IDX image file (foreground = 255).
pub fn write_idx_images(path: &Path, images: &[BinaryImage]) -> Result<()> {
    let (h, w) = match images.first() {
        Some(img) => (img.height, img.width),
        None => return Err(CoreError::validation("nothing to write")),
    };
    let mut bytes = Vec::with_capacity(16 + images.len() * h * w);
    bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(h as u32).to_be_bytes());
    bytes.extend_from_slice(&(w as u32).to_be_bytes());
    for img in images {
        if img.height != h || img.width != w {
            return Err(CoreError::validation("mixed image sizes in IDX export"));
        }
        bytes.extend(img.pixels.iter().map(|&p| if p != 0 { 255u8 } else { 0 }));
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Write digit classes as an IDX label file.
pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    fs::write(path, bytes)?;
    Ok(())
}

/// 5×7 dot-matrix digit glyphs, one bit row per byte (bit 4 = left column).
const DIGIT_FONT: [[u8; 7]; 10] = [
    [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110],
    [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
    [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111],
    [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110],
    [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010],
    [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110],
    [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110],
    [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000],
    [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110],
    [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100],
];

const GLYPH_SCALE: usize = 3;
const DIGIT_CANVAS: usize = 28;

/// Deterministic synthetic digit pool: each class rendered `per_class`
/// times at 3× scale on a 28×28 canvas with small position jitter.
pub fn synthetic_digits(per_class: usize, seed: u64) -> Vec<BinaryImage> {
    let gw = 5 * GLYPH_SCALE;
    let gh = 7 * GLYPH_SCALE;
    let base_r = (DIGIT_CANVAS - gh) / 2;
    let base_c = (DIGIT_CANVAS - gw) / 2;
    let mut pool = Vec::with_capacity(10 * per_class);
    for class in 0..10u8 {
        let mut rng = stream(seed, "digit", class as u64);
        for _ in 0..per_class {
            let jr = rng.random_range(0..5) as i64 - 2;
            let jc = rng.random_range(0..5) as i64 - 2;
            let mut pts = Vec::new();
            for (fr, rowbits) in DIGIT_FONT[class as usize].iter().enumerate() {
                for fc in 0..5 {
                    if rowbits & (1 << (4 - fc)) == 0 {
                        continue;
                    }
                    for dr in 0..GLYPH_SCALE {
                        for dc in 0..GLYPH_SCALE {
                            let r = (base_r + fr * GLYPH_SCALE + dr) as i64 + jr;
                            let c = (base_c + fc * GLYPH_SCALE + dc) as i64 + jc;
                            pts.push((r as usize, c as usize));
                        }
                    }
                }
            }
            let mut img = BinaryImage::empty(DIGIT_CANVAS, DIGIT_CANVAS);
            img.add_object(&pts, class);
            pool.push(img);
        }
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn idx_round_trip_preserves_digits() {
        let dir = tempdir().unwrap();
        let imgs = synthetic_digits(2, 3);
        let labels: Vec<u8> = imgs.iter().map(|i| i.object_labels[0]).collect();
        let ip = dir.path().join("images.idx");
        let lp = dir.path().join("labels.idx");
        write_idx_images(&ip, &imgs).unwrap();
        write_idx_labels(&lp, &labels).unwrap();
        let loaded = ingest_mnist(&ip, Some(&lp)).unwrap();
        assert_eq!(loaded.len(), imgs.len());
        for (a, b) in loaded.iter().zip(&imgs) {
            assert_eq!(a.pixels, b.pixels);
            assert_eq!(a.object_labels, b.object_labels);
        }
    }

    #[test]
    fn bad_magic_is_rejected_without_output() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.idx");
        std::fs::write(&p, [0u8, 0, 8, 4, 0, 0, 0, 1]).unwrap();
        let err = ingest_mnist(&p, None).unwrap_err();
        assert!(err.to_string().contains("magic"));
    }

    #[test]
    fn truncated_file_reports_offset() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("short.idx");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&28u32.to_be_bytes());
        bytes.extend_from_slice(&28u32.to_be_bytes());
        bytes.extend_from_slice(&[0u8; 100]);
        std::fs::write(&p, bytes).unwrap();
        assert!(ingest_mnist(&p, None).is_err());
    }

    #[test]
    fn all_zero_digit_gives_empty_groups() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("zero.idx");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&1u32.to_be_bytes());
        bytes.extend_from_slice(&4u32.to_be_bytes());
        bytes.extend_from_slice(&4u32.to_be_bytes());
        bytes.extend_from_slice(&[0u8; 16]);
        std::fs::write(&p, bytes).unwrap();
        let imgs = ingest_mnist(&p, None).unwrap();
        assert_eq!(imgs.len(), 1);
        assert!(imgs[0].pixels.iter().all(|&p| p == 0));
        assert!(imgs[0].groups.iter().all(|&g| g == 0));
    }

    #[test]
    fn synthetic_pool_has_ten_distinct_classes() {
        let pool = synthetic_digits(1, 7);
        assert_eq!(pool.len(), 10);
        for (class, img) in pool.iter().enumerate() {
            assert_eq!(img.object_labels, vec![class as u8]);
            assert!(img.foreground_count() >= 20);
            img.validate().unwrap();
        }
        // classes must differ as pixel sets
        for a in 0..10 {
            for b in a + 1..10 {
                assert_ne!(pool[a].pixels, pool[b].pixels);
            }
        }
    }
}
