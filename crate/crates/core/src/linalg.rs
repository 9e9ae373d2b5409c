//! Minimal dense f64 matrix used by the autoencoder and the binding loop.
//!
//! Deliberately hand-rolled: every product accumulates in a fixed order with
//! plain IEEE ops (no FMA, no reassociation), so results are bit-identical
//! across platforms. The loops are arranged so the inner index walks rows
//! contiguously, which autovectorizes well enough for desk-scale runs.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape/data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self (r×k) · other (k×c)`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let o_row = out.row_mut(i);
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for j in 0..other.cols {
                    o_row[j] += a * b_row[j];
                }
            }
        }
        out
    }

    /// `selfᵀ (k×r)ᵀ · other (r×c)`, i.e. gram-style product over rows.
    pub fn matmul_tn(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "matmul_tn shape mismatch");
        let mut out = Mat::zeros(self.cols, other.cols);
        for b in 0..self.rows {
            let a_row = self.row(b);
            let b_row = other.row(b);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let o_row = out.row_mut(i);
                for j in 0..b_row.len() {
                    o_row[j] += a * b_row[j];
                }
            }
        }
        out
    }

    /// `self (r×k) · otherᵀ (c×k)ᵀ`.
    pub fn matmul_nt(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols, "matmul_nt shape mismatch");
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let o_row = out.row_mut(i);
            for j in 0..other.rows {
                let b_row = other.row(j);
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += a_row[k] * b_row[k];
                }
                o_row[j] = acc;
            }
        }
        out
    }

    /// Add `bias` to every row.
    pub fn add_row_bias(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.cols);
        for i in 0..self.rows {
            let row = self.row_mut(i);
            for j in 0..bias.len() {
                row[j] += bias[j];
            }
        }
    }

    /// `self += scale * other`, elementwise.
    pub fn add_scaled(&mut self, other: &Mat, scale: f64) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }
}

/// In-place ReLU.
pub fn relu(m: &mut Mat) {
    m.map_inplace(|v| if v > 0.0 { v } else { 0.0 });
}

/// Zero the entries of `grad` where the forward activation was clamped.
pub fn relu_backward(grad: &mut Mat, activated: &Mat) {
    for (g, &a) in grad.data_mut().iter_mut().zip(activated.data().iter()) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Numerically stable softmax over each row.
pub fn softmax_rows(m: &mut Mat) {
    for i in 0..m.rows() {
        softmax_inplace(m.row_mut(i));
    }
}

/// Numerically stable in-place softmax of one vector.
pub fn softmax_inplace(v: &mut [f64]) {
    let mut max = f64::NEG_INFINITY;
    for &x in v.iter() {
        if x > max {
            max = x;
        }
    }
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Backward pass through a softmax: given `s = softmax(z)` and `g = dL/ds`,
/// returns `dL/dz = s ⊙ (g − s·g)`.
pub fn softmax_backward(s: &[f64], g: &[f64], out: &mut [f64]) {
    let mut dot = 0.0;
    for k in 0..s.len() {
        dot += s[k] * g[k];
    }
    for k in 0..s.len() {
        out[k] = s[k] * (g[k] - dot);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for k in 0..a.len() {
        acc += a[k] * b[k];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matmul_small() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Mat::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matmul_tn_matches_explicit_transpose() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Mat::from_vec(2, 2, vec![1.0, -1.0, 0.5, 2.0]);
        let at = Mat::from_vec(3, 2, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(a.matmul_tn(&b).data(), at.matmul(&b).data());
    }

    #[test]
    fn matmul_nt_matches_explicit_transpose() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Mat::from_vec(2, 3, vec![1.0, 0.0, -1.0, 2.0, 1.0, 0.0]);
        let bt = Mat::from_vec(3, 2, vec![1.0, 2.0, 0.0, 1.0, -1.0, 0.0]);
        assert_eq!(a.matmul_nt(&b).data(), a.matmul(&bt).data());
    }

    #[test]
    fn softmax_row_sums_to_one() {
        let mut m = Mat::from_vec(2, 3, vec![0.0, 1.0, 2.0, -5.0, 0.0, 5.0]);
        softmax_rows(&mut m);
        for i in 0..2 {
            let s: f64 = m.row(i).iter().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
            assert!(m.row(i).iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn softmax_of_constant_is_uniform() {
        let mut v = vec![3.0; 8];
        softmax_inplace(&mut v);
        for &x in &v {
            assert_abs_diff_eq!(x, 1.0 / 8.0, epsilon = 1e-12);
        }
    }
}
