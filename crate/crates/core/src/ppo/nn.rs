use rand::Rng;
use serde::{Deserialize, Serialize};

/// Row-major batch of vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Batch statistics.
    Train,
    /// Running statistics.
    Eval,
}

/// Per-feature batch normalization with learned scale and shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
    /// Number of running-statistic updates so far. The first update copies
    /// the batch statistics instead of blending them in.
    pub updates: u64,
}

impl BatchNorm {
    pub fn new(dim: usize, momentum: f64) -> Self {
        BatchNorm {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum,
            eps: 1e-5,
            updates: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// Mean and biased variance of every column.
    pub fn batch_stats(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
        let n = x.rows as f64;
        let mut mean = vec![0.0; x.cols];
        for i in 0..x.rows {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols];
        for i in 0..x.rows {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= n);
        (mean, var)
    }

    /// Blend batch statistics of `x` into the running statistics.
    pub fn update_running(&mut self, x: &Matrix) {
        let (mean, var) = Self::batch_stats(x);
        if self.updates == 0 {
            self.running_mean = mean;
            self.running_var = var;
        } else {
            let m = self.momentum;
            for k in 0..self.dim() {
                self.running_mean[k] = (1.0 - m) * self.running_mean[k] + m * mean[k];
                self.running_var[k] = (1.0 - m) * self.running_var[k] + m * var[k];
            }
        }
        self.updates += 1;
    }

    /// Returns the normalized input `x̂` and the output `γ·x̂ + β`.
    pub fn forward(&self, x: &Matrix, mode: Mode) -> (Matrix, Matrix) {
        let (mean, var) = match mode {
            Mode::Train => Self::batch_stats(x),
            Mode::Eval => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = Matrix::zeros(x.rows, x.cols);
        let mut y = Matrix::zeros(x.rows, x.cols);
        for i in 0..x.rows {
            for k in 0..x.cols {
                let h = (x.row(i)[k] - mean[k]) * inv[k];
                xhat.row_mut(i)[k] = h;
                y.row_mut(i)[k] = self.gamma[k] * h + self.beta[k];
            }
        }
        (xhat, y)
    }
}

/// Dense layer `y = W x + b`, `W` stored row-major as `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub input: usize,
    pub output: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Linear {
    /// Uniform init in `±1/√in` scaled by `gain`, zero bias.
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, gain: f64, rng: &mut R) -> Self {
        let bound = gain / (input as f64).sqrt();
        let w = (0..input * output)
            .map(|_| if bound > 0.0 { rng.gen_range(-bound..bound) } else { 0.0 })
            .collect();
        Linear {
            input,
            output,
            w,
            b: vec![0.0; output],
        }
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        let mut y = Matrix::zeros(x.rows, self.output);
        for i in 0..x.rows {
            let xi = x.row(i);
            let yi = y.row_mut(i);
            for o in 0..self.output {
                let wo = &self.w[o * self.input..(o + 1) * self.input];
                yi[o] = self.b[o] + wo.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        y
    }

    /// Accumulates `dW`, `db` into `grad` (same layout as `w` then `b`)
    /// and returns `dx`.
    fn backward(&self, x: &Matrix, dy: &Matrix, grad: &mut [f64]) -> Matrix {
        let (gw, gb) = grad.split_at_mut(self.w.len());
        let mut dx = Matrix::zeros(x.rows, self.input);
        for i in 0..x.rows {
            let xi = x.row(i);
            let dyi = dy.row(i);
            let dxi = dx.row_mut(i);
            for o in 0..self.output {
                let g = dyi[o];
                if g == 0.0 {
                    continue;
                }
                gb[o] += g;
                let row = o * self.input;
                for k in 0..self.input {
                    gw[row + k] += g * xi[k];
                    dxi[k] += g * self.w[row + k];
                }
            }
        }
        dx
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Batch norm on the input, then dense layers with `tanh` between them and
/// a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub norm: BatchNorm,
    pub layers: Vec<Linear>,
}

/// Intermediate values of a forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct Cache {
    xhat: Matrix,
    /// Input of each dense layer.
    inputs: Vec<Matrix>,
    pub output: Matrix,
}

impl Mlp {
    /// `sizes = [in, hidden.., out]`. The output layer is scaled by
    /// `output_gain`; zero gives a network that starts at exactly zero.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, momentum: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| Linear::new(w[0], w[1], if k == last { output_gain } else { 1.0 }, rng))
            .collect();
        Mlp {
            norm: BatchNorm::new(sizes[0], momentum),
            layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.norm.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output)
    }

    pub fn param_count(&self) -> usize {
        2 * self.norm.dim() + self.layers.iter().map(Linear::param_count).sum::<usize>()
    }

    /// Flat parameters: `γ`, `β`, then `W`, `b` of every layer in order.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.norm.gamma);
        p.extend_from_slice(&self.norm.beta);
        for l in &self.layers {
            p.extend_from_slice(&l.w);
            p.extend_from_slice(&l.b);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count());
        let d = self.norm.dim();
        self.norm.gamma.copy_from_slice(&p[..d]);
        self.norm.beta.copy_from_slice(&p[d..2 * d]);
        let mut at = 2 * d;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&p[at..at + nw]);
            at += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&p[at..at + nb]);
            at += nb;
        }
    }

    pub fn forward(&self, x: &Matrix, mode: Mode) -> Cache {
        let (xhat, mut h) = self.norm.forward(x, mode);
        let mut inputs = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let mut y = l.forward(&h);
            if k < last {
                y.data.iter_mut().for_each(|v| *v = v.tanh());
            }
            inputs.push(h);
            h = y;
        }
        Cache {
            xhat,
            inputs,
            output: h,
        }
    }

    /// Output for a single input in eval mode.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.forward(&Matrix::from_rows(&[x]), Mode::Eval).output.data
    }

    /// Gradient of a scalar loss with respect to every parameter, given
    /// `∂loss/∂output`. Batch-norm statistics are treated as constants;
    /// nothing upstream of the normalization has parameters.
    pub fn backward(&self, cache: &Cache, d_out: &Matrix) -> Vec<f64> {
        let d = self.norm.dim();
        let mut grad = vec![0.0; self.param_count()];
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut at = 2 * d;
        for l in &self.layers {
            offsets.push(at);
            at += l.param_count();
        }
        let mut dy = d_out.clone();
        for k in (0..self.layers.len()).rev() {
            let l = &self.layers[k];
            let off = offsets[k];
            let mut dx = l.backward(&cache.inputs[k], &dy, &mut grad[off..off + l.param_count()]);
            if k > 0 {
                // The input of layer k is tanh of the previous pre-activation.
                for (g, h) in dx.data.iter_mut().zip(&cache.inputs[k].data) {
                    *g *= 1.0 - h * h;
                }
            }
            dy = dx;
        }
        for i in 0..dy.rows {
            for k in 0..d {
                grad[k] += dy.row(i)[k] * cache.xhat.row(i)[k];
                grad[d + k] += dy.row(i)[k];
            }
        }
        grad
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.is_finite())
            && self.norm.running_mean.iter().chain(&self.norm.running_var).all(|v| v.is_finite())
    }
}

/// Softmax of one row of logits.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Log-softmax of one row of logits.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}
