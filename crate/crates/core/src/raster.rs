//! Spike rasters and attention traces produced by binding runs, with their
//! on-disk formats (bit-packed raster file, CSV exports).

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// T × N binary spike matrix plus provenance: which config and input
/// produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    n: usize,
    t: usize,
    /// Flat row-major {0,1} bytes, length t·n.
    spikes: Vec<u8>,
    pub fingerprint: String,
    pub input_ref: String,
}

impl SpikeRaster {
    pub fn new(t: usize, n: usize) -> Self {
        SpikeRaster {
            n,
            t,
            spikes: vec![0; t * n],
            fingerprint: String::new(),
            input_ref: String::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.t
    }

    pub fn get(&self, t: usize, i: usize) -> u8 {
        self.spikes[t * self.n + i]
    }

    pub fn row(&self, t: usize) -> &[u8] {
        &self.spikes[t * self.n..(t + 1) * self.n]
    }

    pub fn set_row(&mut self, t: usize, row: &[u8]) {
        assert_eq!(row.len(), self.n);
        self.spikes[t * self.n..(t + 1) * self.n].copy_from_slice(row);
    }

    /// Spike times of neuron `i` within `[start, end)`.
    pub fn spike_times(&self, i: usize, start: usize, end: usize) -> Vec<usize> {
        (start..end.min(self.t))
            .filter(|&t| self.get(t, i) == 1)
            .collect()
    }

    /// Total spikes per step.
    pub fn population_counts(&self) -> Vec<u32> {
        (0..self.t)
            .map(|t| self.row(t).iter().map(|&s| s as u32).sum())
            .collect()
    }

    /// Spike count of neuron `i` within `[start, end)`.
    pub fn spike_count(&self, i: usize, start: usize, end: usize) -> usize {
        (start..end.min(self.t)).filter(|&t| self.get(t, i) == 1).count()
    }
}

#[derive(Serialize, Deserialize)]
struct RasterHeader {
    n: usize,
    t: usize,
    fingerprint: String,
    input_ref: String,
}

const RASTER_MAGIC: &[u8; 4] = b"DSRS";
const RASTER_VERSION: u8 = 1;

/// Write a raster with bit-packed rows; round-trips exactly.
pub fn save_raster(path: &Path, raster: &SpikeRaster) -> Result<()> {
    let header = serde_json::to_vec(&RasterHeader {
        n: raster.n,
        t: raster.t,
        fingerprint: raster.fingerprint.clone(),
        input_ref: raster.input_ref.clone(),
    })
    .map_err(|e| CoreError::Format(e.to_string()))?;
    let stride = raster.n.div_ceil(8);
    let mut bytes = Vec::with_capacity(9 + header.len() + raster.t * stride);
    bytes.extend_from_slice(RASTER_MAGIC);
    bytes.push(RASTER_VERSION);
    bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header);
    for t in 0..raster.t {
        let row = raster.row(t);
        let mut packed = vec![0u8; stride];
        for (i, &s) in row.iter().enumerate() {
            if s == 1 {
                packed[i / 8] |= 1 << (i % 8);
            }
        }
        bytes.extend_from_slice(&packed);
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_raster(path: &Path) -> Result<SpikeRaster> {
    let bytes = fs::read(path)?;
    if bytes.len() < 9 || &bytes[..4] != RASTER_MAGIC {
        return Err(CoreError::Format("not a raster file".into()));
    }
    if bytes[4] != RASTER_VERSION {
        return Err(CoreError::Format(format!("unsupported raster version {}", bytes[4])));
    }
    let hlen = u32::from_le_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]) as usize;
    if 9 + hlen > bytes.len() {
        return Err(CoreError::Format("truncated raster header".into()));
    }
    let header: RasterHeader = serde_json::from_slice(&bytes[9..9 + hlen])
        .map_err(|e| CoreError::Format(format!("bad raster header: {e}")))?;
    let stride = header.n.div_ceil(8);
    let body = &bytes[9 + hlen..];
    if body.len() != header.t * stride {
        return Err(CoreError::Format("raster body length mismatch".into()));
    }
    let mut raster = SpikeRaster::new(header.t, header.n);
    raster.fingerprint = header.fingerprint;
    raster.input_ref = header.input_ref;
    for t in 0..header.t {
        let packed = &body[t * stride..(t + 1) * stride];
        let mut row = vec![0u8; header.n];
        for (i, r) in row.iter_mut().enumerate() {
            *r = (packed[i / 8] >> (i % 8)) & 1;
        }
        raster.set_row(t, &row);
    }
    Ok(raster)
}

/// (time, neuron) rows, one per spike.
pub fn write_spike_csv(path: &Path, raster: &SpikeRaster) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "time,neuron")?;
    for t in 0..raster.steps() {
        for i in 0..raster.n() {
            if raster.get(t, i) == 1 {
                writeln!(f, "{t},{i}")?;
            }
        }
    }
    Ok(())
}

/// (time, population spike count) rows, exactly one per step.
pub fn write_population_csv(path: &Path, raster: &SpikeRaster) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "time,count")?;
    for (t, c) in raster.population_counts().iter().enumerate() {
        writeln!(f, "{t},{c}")?;
    }
    Ok(())
}

/// Attention history of one binding run. Row r corresponds to loop time
/// t = r − tau_delay, so rows 0..tau_delay hold the pre-roll
/// initialization and row tau_delay is the map produced at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    n: usize,
    tau_delay: usize,
    rows: Vec<Vec<f64>>,
    /// Latent vector per loop step (t = 0..T); binary-valued in
    /// hierarchical mode, stored as f64 uniformly.
    pub latent: Vec<Vec<f64>>,
}

impl AttentionTrace {
    pub fn new(n: usize, tau_delay: usize) -> Self {
        AttentionTrace {
            n,
            tau_delay,
            rows: Vec::new(),
            latent: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau_delay(&self) -> usize {
        self.tau_delay
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.n);
        debug_assert!(row.iter().all(|&v| v >= 0.0), "negative attention");
        self.rows.push(row);
    }

    /// Attention row for loop time `t` (negative during pre-roll).
    pub fn at(&self, t: i64) -> &[f64] {
        let idx = t + self.tau_delay as i64;
        assert!(idx >= 0, "time before pre-roll");
        &self.rows[idx as usize]
    }

    pub fn len_steps(&self) -> usize {
        self.rows.len().saturating_sub(self.tau_delay)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// (time, neuron, attention) CSV; pre-roll rows carry negative times.
pub fn write_attention_csv(path: &Path, trace: &AttentionTrace) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "time,neuron,attention")?;
    for (r, row) in trace.rows().iter().enumerate() {
        let t = r as i64 - trace.tau_delay() as i64;
        for (i, &v) in row.iter().enumerate() {
            writeln!(f, "{t},{i},{v}")?;
        }
    }
    Ok(())
}
