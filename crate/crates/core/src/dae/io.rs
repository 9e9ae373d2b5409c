//! Parameter file format: JSON header (dimensions, latent mode, training
//! fingerprint), little-endian f64 blobs in a fixed tensor order, and a
//! trailing SHA-256 checksum. Round-trips are bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DaeMeta, DaeParams, LatentMode};
use crate::error::{CoreError, Result};
use crate::linalg::Mat;

const MAGIC: &[u8; 4] = b"DSPM";
const VERSION: u8 = 1;

#[derive(Serialize, Deserialize)]
struct ParamHeader {
    n: usize,
    h: usize,
    k: usize,
    latent_mode: LatentMode,
    has_recurrent: bool,
    meta: DaeMeta,
}

fn push_f64s(bytes: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_f64s(bytes: &[u8], pos: &mut usize, count: usize) -> Result<Vec<f64>> {
    let end = *pos + count * 8;
    if end > bytes.len() {
        return Err(CoreError::Format("truncated parameter blob".into()));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let o = *pos + i * 8;
        out.push(f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()));
    }
    *pos = end;
    Ok(out)
}

pub fn save_params(params: &DaeParams, path: &Path) -> Result<()> {
    let header = serde_json::to_vec(&ParamHeader {
        n: params.input_size(),
        h: params.hidden_size(),
        k: params.latent_size(),
        latent_mode: params.latent_mode,
        has_recurrent: params.recurrent.is_some(),
        meta: params.meta.clone(),
    })
    .map_err(|e| CoreError::Format(e.to_string()))?;

    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.push(VERSION);
    bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header);
    push_f64s(&mut bytes, params.w1.data());
    push_f64s(&mut bytes, &params.b1);
    push_f64s(&mut bytes, params.w2.data());
    push_f64s(&mut bytes, &params.b2);
    push_f64s(&mut bytes, params.w3.data());
    push_f64s(&mut bytes, &params.b3);
    push_f64s(&mut bytes, params.w4.data());
    push_f64s(&mut bytes, &params.b4);
    if let Some(w) = &params.recurrent {
        push_f64s(&mut bytes, w.data());
    }
    let digest = Sha256::digest(&bytes);
    bytes.extend_from_slice(&digest);
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<DaeParams> {
    load_params_expecting(path, None)
}

/// Load with an explicit latent-mode requirement; a file holding the other
/// mode is refused instead of silently reinterpreted.
pub fn load_params_expecting(path: &Path, mode: Option<LatentMode>) -> Result<DaeParams> {
    let bytes = fs::read(path)?;
    if bytes.len() < 9 + 32 || &bytes[..4] != MAGIC {
        return Err(CoreError::Format("not a parameter file".into()));
    }
    if bytes[4] != VERSION {
        return Err(CoreError::Format(format!(
            "unsupported parameter version {}",
            bytes[4]
        )));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != checksum {
        return Err(CoreError::Format("parameter checksum mismatch".into()));
    }

    let hlen = u32::from_le_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]) as usize;
    if 9 + hlen > body.len() {
        return Err(CoreError::Format("truncated parameter header".into()));
    }
    let header: ParamHeader = serde_json::from_slice(&body[9..9 + hlen])
        .map_err(|e| CoreError::Format(format!("bad parameter header: {e}")))?;
    if let Some(want) = mode {
        if want != header.latent_mode {
            return Err(CoreError::Format(format!(
                "latent mode mismatch: file holds {:?}, caller expects {want:?}",
                header.latent_mode
            )));
        }
    }

    let (n, h, k) = (header.n, header.h, header.k);
    let mut pos = 9 + hlen;
    let w1 = Mat::from_vec(n, h, read_f64s(body, &mut pos, n * h)?);
    let b1 = read_f64s(body, &mut pos, h)?;
    let w2 = Mat::from_vec(h, k, read_f64s(body, &mut pos, h * k)?);
    let b2 = read_f64s(body, &mut pos, k)?;
    let w3 = Mat::from_vec(k, h, read_f64s(body, &mut pos, k * h)?);
    let b3 = read_f64s(body, &mut pos, h)?;
    let w4 = Mat::from_vec(h, n, read_f64s(body, &mut pos, h * n)?);
    let b4 = read_f64s(body, &mut pos, n)?;
    let recurrent = if header.has_recurrent {
        Some(Mat::from_vec(k, k, read_f64s(body, &mut pos, k * k)?))
    } else {
        None
    };
    if pos != body.len() {
        return Err(CoreError::Format("trailing bytes in parameter file".into()));
    }
    Ok(DaeParams {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
        w4,
        b4,
        latent_mode: header.latent_mode,
        recurrent,
        meta: header.meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dae::init_params;
    use tempfile::tempdir;

    fn sample(recurrent: bool, mode: LatentMode) -> DaeParams {
        init_params(
            20,
            6,
            3,
            mode,
            recurrent,
            7,
            DaeMeta {
                width: 5,
                height: 4,
                mean_object_px: 6.5,
                train_fingerprint: "fp:test".into(),
            },
        )
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        for recurrent in [false, true] {
            let p = sample(recurrent, LatentMode::RealSoftmax);
            let path = dir.path().join(format!("p{recurrent}.dspm"));
            save_params(&p, &path).unwrap();
            let q = load_params(&path).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let dir = tempdir().unwrap();
        let p = sample(false, LatentMode::RealSoftmax);
        let path = dir.path().join("p.dspm");
        save_params(&p, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 40);
        fs::write(&path, &bytes).unwrap();
        assert!(load_params(&path).is_err());
    }

    #[test]
    fn corrupted_blob_fails_checksum() {
        let dir = tempdir().unwrap();
        let p = sample(false, LatentMode::RealSoftmax);
        let path = dir.path().join("p.dspm");
        save_params(&p, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        fs::write(&path, &bytes).unwrap();
        let err = load_params(&path).unwrap_err();
        assert!(err.to_string().contains("checksum"));
    }

    #[test]
    fn latent_mode_mismatch_is_explicit() {
        let dir = tempdir().unwrap();
        let p = sample(false, LatentMode::RealSoftmax);
        let path = dir.path().join("p.dspm");
        save_params(&p, &path).unwrap();
        let err = load_params_expecting(&path, Some(LatentMode::BinaryBernoulli)).unwrap_err();
        assert!(err.to_string().contains("latent mode"));
        assert!(load_params_expecting(&path, Some(LatentMode::RealSoftmax)).is_ok());
    }
}
