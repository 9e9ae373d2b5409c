//! Self-describing dataset container files.
//!
//! Layout (little-endian):
//! ```text
//! magic (4 bytes: "DSBD" images / "DSQS" sequence)
//! version u8
//! header_len u32, then header_len bytes of JSON (spec + body shape)
//! body: per image, n_objects u8, object labels (n_objects bytes),
//!       group bitmasks (width·height bytes)
//! ```
//! Pixels are implicit (a pixel is foreground iff its group mask is
//! non-zero), so only clean images go in. Round-trips are bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BinaryImage, DatasetSpec, ImageSequence};
use crate::error::{CoreError, Result};

const IMAGE_MAGIC: &[u8; 4] = b"DSBD";
const SEQUENCE_MAGIC: &[u8; 4] = b"DSQS";
const VERSION: u8 = 1;

#[derive(Serialize, Deserialize)]
struct ImageHeader {
    spec: DatasetSpec,
    n_images: usize,
}

#[derive(Serialize, Deserialize)]
struct SequenceHeader {
    spec: DatasetSpec,
    n_frames: usize,
    velocities: Vec<(i32, i32)>,
    spawn_times: Vec<usize>,
}

fn fmt_err(reason: impl Into<String>) -> CoreError {
    CoreError::Format(reason.into())
}

fn encode_image(img: &BinaryImage, out: &mut Vec<u8>) {
    out.push(img.n_objects);
    out.extend_from_slice(&img.object_labels);
    out.extend_from_slice(&img.groups);
}

fn decode_image(
    bytes: &[u8],
    pos: &mut usize,
    width: usize,
    height: usize,
) -> Result<BinaryImage> {
    let n = width * height;
    let n_objects = *bytes.get(*pos).ok_or_else(|| fmt_err("truncated image record"))?;
    *pos += 1;
    let label_end = *pos + n_objects as usize;
    let group_end = label_end + n;
    if group_end > bytes.len() {
        return Err(fmt_err("truncated image record"));
    }
    let object_labels = bytes[*pos..label_end].to_vec();
    let groups = bytes[label_end..group_end].to_vec();
    *pos = group_end;
    let pixels = groups.iter().map(|&g| (g != 0) as u8).collect();
    let img = BinaryImage {
        width,
        height,
        pixels,
        groups,
        n_objects,
        object_labels,
    };
    img.validate()?;
    Ok(img)
}

fn write_container(path: &Path, magic: &[u8; 4], header: &[u8], body: &[u8]) -> Result<()> {
    let mut bytes = Vec::with_capacity(9 + header.len() + body.len());
    bytes.extend_from_slice(magic);
    bytes.push(VERSION);
    bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
    bytes.extend_from_slice(header);
    bytes.extend_from_slice(body);
    fs::write(path, bytes)?;
    Ok(())
}

fn read_container<'a>(bytes: &'a [u8], magic: &[u8; 4]) -> Result<(&'a [u8], &'a [u8])> {
    if bytes.len() < 9 {
        return Err(fmt_err("file too short for container header"));
    }
    if &bytes[..4] != magic {
        return Err(fmt_err("wrong container magic"));
    }
    if bytes[4] != VERSION {
        return Err(fmt_err(format!("unsupported container version {}", bytes[4])));
    }
    let hlen = u32::from_le_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]) as usize;
    if 9 + hlen > bytes.len() {
        return Err(fmt_err("truncated container header"));
    }
    Ok((&bytes[9..9 + hlen], &bytes[9 + hlen..]))
}

pub fn save_dataset(path: &Path, spec: &DatasetSpec, images: &[BinaryImage]) -> Result<()> {
    let header = serde_json::to_vec(&ImageHeader {
        spec: spec.clone(),
        n_images: images.len(),
    })
    .map_err(|e| fmt_err(e.to_string()))?;
    let mut body = Vec::new();
    for img in images {
        if img.width != spec.width || img.height != spec.height {
            return Err(CoreError::validation("image size differs from spec"));
        }
        encode_image(img, &mut body);
    }
    write_container(path, IMAGE_MAGIC, &header, &body)
}

pub fn load_dataset(path: &Path) -> Result<(DatasetSpec, Vec<BinaryImage>)> {
    let bytes = fs::read(path)?;
    let (header, body) = read_container(&bytes, IMAGE_MAGIC)?;
    let header: ImageHeader =
        serde_json::from_slice(header).map_err(|e| fmt_err(format!("bad header: {e}")))?;
    let mut images = Vec::with_capacity(header.n_images);
    let mut pos = 0;
    for _ in 0..header.n_images {
        images.push(decode_image(body, &mut pos, header.spec.width, header.spec.height)?);
    }
    if pos != body.len() {
        return Err(fmt_err("trailing bytes after last image"));
    }
    Ok((header.spec, images))
}

pub fn save_sequence(path: &Path, spec: &DatasetSpec, seq: &ImageSequence) -> Result<()> {
    let header = serde_json::to_vec(&SequenceHeader {
        spec: spec.clone(),
        n_frames: seq.frames.len(),
        velocities: seq.velocities.clone(),
        spawn_times: seq.spawn_times.clone(),
    })
    .map_err(|e| fmt_err(e.to_string()))?;
    let mut body = Vec::new();
    for frame in &seq.frames {
        encode_image(frame, &mut body);
    }
    write_container(path, SEQUENCE_MAGIC, &header, &body)
}

pub fn load_sequence(path: &Path) -> Result<(DatasetSpec, ImageSequence)> {
    let bytes = fs::read(path)?;
    let (header, body) = read_container(&bytes, SEQUENCE_MAGIC)?;
    let header: SequenceHeader =
        serde_json::from_slice(header).map_err(|e| fmt_err(format!("bad header: {e}")))?;
    let mut frames = Vec::with_capacity(header.n_frames);
    let mut pos = 0;
    for _ in 0..header.n_frames {
        frames.push(decode_image(body, &mut pos, header.spec.width, header.spec.height)?);
    }
    if pos != body.len() {
        return Err(fmt_err("trailing bytes after last frame"));
    }
    Ok((
        header.spec,
        ImageSequence {
            frames,
            velocities: header.velocities,
            spawn_times: header.spawn_times,
        },
    ))
}
