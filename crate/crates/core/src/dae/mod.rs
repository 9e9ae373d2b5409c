//! Denoising autoencoder: a single-hidden-layer MLP encoder and decoder
//! with softmax heads on both the latent and the pixel output. The decoder
//! output doubles as the top-down attention map during binding.
//!
//! Everything is hand-rolled f64 so training and inference are bit
//! reproducible; gradients are verified against central finite differences
//! in the test suite.

pub mod io;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{relu, relu_backward, softmax_backward, softmax_rows, Mat};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentMode {
    /// Latent is the softmax itself (static and dynamic binding).
    RealSoftmax,
    /// Latent is Bernoulli-sampled from the rescaled softmax at binding
    /// time (hierarchical binding).
    BinaryBernoulli,
}

/// Side information carried with trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaeMeta {
    pub width: usize,
    pub height: usize,
    /// Mean foreground pixel count of the training objects; sets the
    /// default reconstruction threshold 1/(2·size).
    pub mean_object_px: f64,
    pub train_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaeParams {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
    pub w3: Mat,
    pub b3: Vec<f64>,
    pub w4: Mat,
    pub b4: Vec<f64>,
    pub latent_mode: LatentMode,
    /// Latent-to-latent weights of the predictive variant.
    pub recurrent: Option<Mat>,
    pub meta: DaeMeta,
}

impl DaeParams {
    pub fn input_size(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_size(&self) -> usize {
        self.w1.cols()
    }

    pub fn latent_size(&self) -> usize {
        self.w2.cols()
    }

    pub fn check_input(&self, n: usize) -> Result<()> {
        if n != self.input_size() {
            return Err(CoreError::Dimension {
                expected: self.input_size(),
                got: n,
            });
        }
        Ok(())
    }
}

/// He / Xavier initialization; biases start at zero, recurrent weights (if
/// requested) start at zero so the model begins as the static DAE.
///
/// `w3` consumes a probability vector (rows of `latent` sum to one), so
/// fan-in scaling would shrink its pre-activations by a factor of `k`;
/// unit scale keeps the decoder out of the flat near-uniform regime.
pub fn init_params(
    n: usize,
    h: usize,
    k: usize,
    latent_mode: LatentMode,
    recurrent: bool,
    seed: u64,
    meta: DaeMeta,
) -> DaeParams {
    use rand_distr::{Distribution, StandardNormal};
    let make = |rows: usize, cols: usize, scale: f64, idx: u64| {
        let mut rng = stream(seed, "init", idx);
        Mat::from_fn(rows, cols, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
    };
    let w1 = make(n, h, (2.0 / n as f64).sqrt(), 0);
    let w2 = make(h, k, (16.0 / h as f64).sqrt(), 1);
    let w3 = make(k, h, 1.0, 2);
    let w4 = make(h, n, (2.0 / h as f64).sqrt(), 3);
    DaeParams {
        w1,
        b1: vec![0.0; h],
        w2,
        b2: vec![0.0; k],
        w3,
        b3: vec![0.0; h],
        w4,
        b4: vec![0.0; n],
        latent_mode,
        recurrent: recurrent.then(|| Mat::zeros(k, k)),
        meta,
    }
}

/// Forward activations kept for the backward pass.
pub struct FwdCache {
    pub x: Mat,
    pub h1: Mat,
    pub z2: Mat,
    pub latent: Mat,
    pub h3: Mat,
    pub out: Mat,
    pub prev: Option<Mat>,
}

/// Batch forward. `prev` supplies the detached previous latent state for
/// the recurrent variant (rows aligned with `x`).
pub fn forward_batch(params: &DaeParams, x: Mat, prev: Option<Mat>) -> FwdCache {
    let mut h1 = x.matmul(&params.w1);
    h1.add_row_bias(&params.b1);
    relu(&mut h1);
    let mut z2 = h1.matmul(&params.w2);
    z2.add_row_bias(&params.b2);
    if let (Some(wrec), Some(p)) = (&params.recurrent, &prev) {
        let ctx = p.matmul(wrec);
        z2.add_scaled(&ctx, 1.0);
    }
    let mut latent = z2.clone();
    softmax_rows(&mut latent);
    let mut h3 = latent.matmul(&params.w3);
    h3.add_row_bias(&params.b3);
    relu(&mut h3);
    let mut out = h3.matmul(&params.w4);
    out.add_row_bias(&params.b4);
    softmax_rows(&mut out);
    FwdCache { x, h1, z2, latent, h3, out, prev }
}

/// Single-image forward pass: (latent, output), both softmax-normalized.
pub fn forward(params: &DaeParams, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
    params.check_input(input.len()).expect("input size mismatch");
    let cache = forward_batch(params, Mat::from_vec(1, input.len(), input.to_vec()), None);
    (cache.latent.row(0).to_vec(), cache.out.row(0).to_vec())
}

/// Encoder half with optional recurrent context; returns the latent
/// softmax. Used by the binder where encode and decode are split.
pub fn encode(params: &DaeParams, input: &[f64], prev_latent: Option<&[f64]>) -> Vec<f64> {
    let prev = prev_latent.map(|p| Mat::from_vec(1, p.len(), p.to_vec()));
    let cache = forward_batch(params, Mat::from_vec(1, input.len(), input.to_vec()), prev);
    cache.latent.row(0).to_vec()
}

/// Decoder half: latent (any non-negative code, not necessarily softmax)
/// to the pixel softmax.
pub fn decode(params: &DaeParams, latent: &[f64]) -> Vec<f64> {
    let l = Mat::from_vec(1, latent.len(), latent.to_vec());
    let mut h3 = l.matmul(&params.w3);
    h3.add_row_bias(&params.b3);
    relu(&mut h3);
    let mut out = h3.matmul(&params.w4);
    out.add_row_bias(&params.b4);
    softmax_rows(&mut out);
    out.row(0).to_vec()
}

/// Binarize a softmax output by the renormalized threshold 1/(2·size),
/// where `size` is the (expected) foreground pixel count.
pub fn threshold_reconstruction(out: &[f64], size: f64) -> Vec<u8> {
    let th = 1.0 / (2.0 * size.max(1.0));
    out.iter().map(|&v| (v > th) as u8).collect()
}

/// Mean cross-entropy of softmax outputs against target distributions.
pub fn cross_entropy(out: &Mat, targets: &Mat) -> f64 {
    let mut total = 0.0;
    for b in 0..out.rows() {
        let o = out.row(b);
        let y = targets.row(b);
        let mut s = 0.0;
        for i in 0..o.len() {
            if y[i] > 0.0 {
                s -= y[i] * o[i].max(1e-300).ln();
            }
        }
        total += s;
    }
    total / out.rows() as f64
}

#[derive(Debug, Clone)]
pub struct Grads {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
    pub w3: Mat,
    pub b3: Vec<f64>,
    pub w4: Mat,
    pub b4: Vec<f64>,
    pub recurrent: Option<Mat>,
}

impl Grads {
    pub fn zeros_like(p: &DaeParams) -> Self {
        Grads {
            w1: Mat::zeros(p.w1.rows(), p.w1.cols()),
            b1: vec![0.0; p.b1.len()],
            w2: Mat::zeros(p.w2.rows(), p.w2.cols()),
            b2: vec![0.0; p.b2.len()],
            w3: Mat::zeros(p.w3.rows(), p.w3.cols()),
            b3: vec![0.0; p.b3.len()],
            w4: Mat::zeros(p.w4.rows(), p.w4.cols()),
            b4: vec![0.0; p.b4.len()],
            recurrent: p.recurrent.as_ref().map(|m| Mat::zeros(m.rows(), m.cols())),
        }
    }
}

fn column_sums(m: &Mat) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (j, &v) in m.row(i).iter().enumerate() {
            out[j] += v;
        }
    }
    out
}

/// Reconstruction loss (mean cross-entropy over the batch) plus
/// λ·contrastive loss on latent pre-activations, with gradients for every
/// parameter. `labels` enables the contrastive term.
pub fn loss_and_grads(
    params: &DaeParams,
    cache: &FwdCache,
    targets: &Mat,
    labels: Option<&[u8]>,
    contrastive_weight: f64,
    contrastive_temp: f64,
) -> (f64, Grads) {
    let b = cache.x.rows() as f64;
    let mut loss = cross_entropy(&cache.out, targets);

    // dL/dz4 of mean CE through the output softmax
    let mut g4 = cache.out.clone();
    g4.add_scaled(targets, -1.0);
    g4.scale(1.0 / b);

    let gw4 = cache.h3.matmul_tn(&g4);
    let gb4 = column_sums(&g4);
    let mut g3 = g4.matmul_nt(&params.w4);
    relu_backward(&mut g3, &cache.h3);
    let gw3 = cache.latent.matmul_tn(&g3);
    let gb3 = column_sums(&g3);
    let g_latent = g3.matmul_nt(&params.w3);

    let mut g2 = Mat::zeros(g_latent.rows(), g_latent.cols());
    for r in 0..g_latent.rows() {
        let mut row = vec![0.0; g_latent.cols()];
        softmax_backward(cache.latent.row(r), g_latent.row(r), &mut row);
        g2.row_mut(r).copy_from_slice(&row);
    }

    if let Some(labels) = labels {
        if contrastive_weight > 0.0 {
            let (closs, cgrad) = contrastive_loss_grad(&cache.z2, labels, contrastive_temp);
            loss += contrastive_weight * closs;
            g2.add_scaled(&cgrad, contrastive_weight);
        }
    }

    let gw2 = cache.h1.matmul_tn(&g2);
    let gb2 = column_sums(&g2);
    let grec = match (&params.recurrent, &cache.prev) {
        (Some(_), Some(prev)) => Some(prev.matmul_tn(&g2)),
        (Some(m), None) => Some(Mat::zeros(m.rows(), m.cols())),
        _ => None,
    };
    let mut g1 = g2.matmul_nt(&params.w2);
    relu_backward(&mut g1, &cache.h1);
    let gw1 = cache.x.matmul_tn(&g1);
    let gb1 = column_sums(&g1);

    (
        loss,
        Grads {
            w1: gw1,
            b1: gb1,
            w2: gw2,
            b2: gb2,
            w3: gw3,
            b3: gb3,
            w4: gw4,
            b4: gb4,
            recurrent: grec,
        },
    )
}

/// Supervised contrastive loss over latent pre-activations: rows sharing a
/// label attract, others repel, with temperature-scaled cosine similarity.
/// Returns (loss, dL/dZ). Zero when no row has a positive partner.
pub fn contrastive_loss_grad(z: &Mat, labels: &[u8], temp: f64) -> (f64, Mat) {
    let b = z.rows();
    assert_eq!(labels.len(), b, "label count mismatch");
    let k = z.cols();
    let mut grad = Mat::zeros(b, k);
    if b < 2 {
        return (0.0, grad);
    }

    // unit rows and norms
    let mut norms = vec![0.0; b];
    let mut u = Mat::zeros(b, k);
    for i in 0..b {
        let row = z.row(i);
        let r = crate::linalg::dot(row, row).sqrt().max(1e-12);
        norms[i] = r;
        for (j, &v) in row.iter().enumerate() {
            u.row_mut(i)[j] = v / r;
        }
    }

    // cosine similarities / temp
    let s = u.matmul_nt(&u);
    let anchors: Vec<usize> = (0..b)
        .filter(|&i| (0..b).any(|j| j != i && labels[j] == labels[i]))
        .collect();
    if anchors.is_empty() {
        return (0.0, grad);
    }
    let n_a = anchors.len() as f64;

    // dL/dS, assembled anchor by anchor
    let mut ds = Mat::zeros(b, b);
    let mut loss = 0.0;
    for &i in &anchors {
        let row = s.row(i);
        let mut maxv = f64::NEG_INFINITY;
        for j in 0..b {
            if j != i {
                maxv = maxv.max(row[j] / temp);
            }
        }
        let mut denom = 0.0;
        for j in 0..b {
            if j != i {
                denom += ((row[j] / temp) - maxv).exp();
            }
        }
        let log_denom = denom.ln() + maxv;
        let positives: Vec<usize> = (0..b).filter(|&j| j != i && labels[j] == labels[i]).collect();
        let np = positives.len() as f64;
        for &p in &positives {
            loss += (log_denom - row[p] / temp) / (np * n_a);
        }
        for j in 0..b {
            if j == i {
                continue;
            }
            let p_ij = ((row[j] / temp) - log_denom).exp();
            let pos = if labels[j] == labels[i] { 1.0 / np } else { 0.0 };
            ds.row_mut(i)[j] = (p_ij - pos) / n_a;
        }
    }

    // dL/du_i = Σ_j (dS_ij + dS_ji)·u_j / temp, then back through the
    // normalization u = z/‖z‖.
    for i in 0..b {
        let mut du = vec![0.0; k];
        for j in 0..b {
            if j == i {
                continue;
            }
            let w = (ds.row(i)[j] + ds.row(j)[i]) / temp;
            if w == 0.0 {
                continue;
            }
            let uj = u.row(j);
            for c in 0..k {
                du[c] += w * uj[c];
            }
        }
        let ui = u.row(i);
        let proj = crate::linalg::dot(&du, ui);
        let g = grad.row_mut(i);
        for c in 0..k {
            g[c] = (du[c] - proj * ui[c]) / norms[i];
        }
    }
    (loss, grad)
}

/// Parameter update rule. Momentum SGD is the default; Adam is the opt-in
/// alternative for configs where plain SGD converges too slowly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Momentum,
    Adam,
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Momentum SGD or Adam over all parameter tensors.
pub struct Optimizer {
    pub learning_rate: f64,
    pub momentum: f64,
    kind: OptimizerKind,
    vel: Grads,
    /// Adam second moments; untouched in momentum mode.
    sq: Grads,
    t: i32,
}

impl Optimizer {
    pub fn new(params: &DaeParams, learning_rate: f64, momentum: f64) -> Self {
        Self::with_kind(params, learning_rate, momentum, OptimizerKind::Momentum)
    }

    pub fn with_kind(
        params: &DaeParams,
        learning_rate: f64,
        momentum: f64,
        kind: OptimizerKind,
    ) -> Self {
        Optimizer {
            learning_rate,
            momentum,
            kind,
            vel: Grads::zeros_like(params),
            sq: Grads::zeros_like(params),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut DaeParams, grads: &Grads) {
        self.t += 1;
        let lr = self.learning_rate;
        let mu = self.momentum;
        let kind = self.kind;
        let b1c = 1.0 - ADAM_B1.powi(self.t);
        let b2c = 1.0 - ADAM_B2.powi(self.t);
        let rule = move |w: &mut f64, g: f64, v: &mut f64, s: &mut f64| match kind {
            OptimizerKind::Momentum => {
                *v = mu * *v - lr * g;
                *w += *v;
            }
            OptimizerKind::Adam => {
                *v = ADAM_B1 * *v + (1.0 - ADAM_B1) * g;
                *s = ADAM_B2 * *s + (1.0 - ADAM_B2) * g * g;
                *w -= lr * (*v / b1c) / ((*s / b2c).sqrt() + ADAM_EPS);
            }
        };
        let upd_mat = |w: &mut Mat, v: &mut Mat, s: &mut Mat, g: &Mat| {
            for (((w, v), s), &g) in w
                .data_mut()
                .iter_mut()
                .zip(v.data_mut())
                .zip(s.data_mut())
                .zip(g.data())
            {
                rule(w, g, v, s);
            }
        };
        upd_mat(&mut params.w1, &mut self.vel.w1, &mut self.sq.w1, &grads.w1);
        upd_mat(&mut params.w2, &mut self.vel.w2, &mut self.sq.w2, &grads.w2);
        upd_mat(&mut params.w3, &mut self.vel.w3, &mut self.sq.w3, &grads.w3);
        upd_mat(&mut params.w4, &mut self.vel.w4, &mut self.sq.w4, &grads.w4);
        if let (Some(w), Some(v), Some(s), Some(g)) = (
            params.recurrent.as_mut(),
            self.vel.recurrent.as_mut(),
            self.sq.recurrent.as_mut(),
            grads.recurrent.as_ref(),
        ) {
            upd_mat(w, v, s, g);
        }
        let upd_vec = |w: &mut [f64], v: &mut [f64], s: &mut [f64], g: &[f64]| {
            for i in 0..w.len() {
                rule(&mut w[i], g[i], &mut v[i], &mut s[i]);
            }
        };
        upd_vec(&mut params.b1, &mut self.vel.b1, &mut self.sq.b1, &grads.b1);
        upd_vec(&mut params.b2, &mut self.vel.b2, &mut self.sq.b2, &grads.b2);
        upd_vec(&mut params.b3, &mut self.vel.b3, &mut self.sq.b3, &grads.b3);
        upd_vec(&mut params.b4, &mut self.vel.b4, &mut self.sq.b4, &grads.b4);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_params(recurrent: bool) -> DaeParams {
        init_params(
            16,
            8,
            4,
            LatentMode::RealSoftmax,
            recurrent,
            99,
            DaeMeta {
                width: 4,
                height: 4,
                mean_object_px: 4.0,
                train_fingerprint: String::new(),
            },
        )
    }

    #[test]
    fn output_is_a_distribution() {
        let p = tiny_params(false);
        let input: Vec<f64> = (0..16).map(|i| (i % 2) as f64).collect();
        let (latent, out) = forward(&p, &input);
        assert_abs_diff_eq!(latent.iter().sum::<f64>(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(out.iter().sum::<f64>(), 1.0, epsilon = 1e-6);
        assert!(out.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let mut p = tiny_params(false);
        p.w1.scale(0.0);
        p.w2.scale(0.0);
        p.w3.scale(0.0);
        p.w4.scale(0.0);
        let (_, out) = forward(&p, &vec![1.0; 16]);
        for &v in &out {
            assert_abs_diff_eq!(v, 1.0 / 16.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn contrastive_loss_is_zero_without_positive_pairs() {
        let z = Mat::from_vec(3, 4, (0..12).map(|i| i as f64 * 0.1 - 0.5).collect());
        let (loss, grad) = contrastive_loss_grad(&z, &[0, 1, 2], 0.1);
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn same_label_pairs_score_lower_loss_when_aligned() {
        // two aligned same-label rows vs. the same geometry with the
        // positive pair pointing apart
        let aligned = Mat::from_vec(
            3,
            2,
            vec![1.0, 0.0, 1.0, 0.05, -1.0, 0.0],
        );
        let apart = Mat::from_vec(
            3,
            2,
            vec![1.0, 0.0, -1.0, 0.05, 0.0, 1.0],
        );
        let (la, _) = contrastive_loss_grad(&aligned, &[0, 0, 1], 0.1);
        let (lb, _) = contrastive_loss_grad(&apart, &[0, 0, 1], 0.1);
        assert!(la < lb, "aligned {la} vs apart {lb}");
    }

    // central-difference checks live in tests/gradcheck.rs
}
