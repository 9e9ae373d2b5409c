//! Temporal binding of binary images in a hybrid spiking/autoencoder network.
//!
//! The pipeline couples a spike coding space (one Bernoulli neuron per image
//! pixel, with refractory dynamics) to a denoising autoencoder whose decoder
//! output is fed back, after a delay, as a per-pixel attention map. Objects in
//! a multi-object image end up firing as synchronous assemblies at distinct
//! phases, so grouping can be read out from spike timing alone.
//!
//! Module map:
//! - [`datasets`]: synthetic binary-image benchmarks, MNIST ingestion, noise.
//! - [`dae`]: the denoising autoencoder (static, contrastive and recurrent
//!   variants) trained from scratch with deterministic momentum SGD.
//! - [`scs`]: spike coding space dynamics and the coincidence detector.
//! - [`raster`]: spike raster / attention trace containers and file formats.
//! - [`binder`]: the binding loop in static, hierarchical and dynamic modes.
//! - [`baselines`]: reduced models (pulse-coupled network, folded autoencoder).
//! - [`eval`]: spike-train metrics, clustering and the benchmark harness.

pub mod baselines;
pub mod binder;
pub mod dae;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod raster;
pub mod rng;
pub mod scs;

pub use error::{CoreError, ErrorKind, Result};
