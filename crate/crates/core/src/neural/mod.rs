//! Fully connected `ℝ → ℝᴺ` networks with exact time derivatives, a scalar
//! tape for loss heads, and Adam.

mod adam;
mod tape;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use tape::{Idx, Tape};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NeuralError {
    #[error("unsupported primitive `{0}` in a loss expression")]
    UnsupportedPrimitive(String),
    #[error("{0}")]
    Shape(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Weights and biases stored flat, layer by layer; each weight matrix is
/// column-major `out × in` followed by its bias. Hidden layers use `tanh`,
/// the output layer is affine. Time enters as `t / t_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub sizes: Vec<usize>,
    pub t_scale: f64,
    pub params: Vec<f64>,
}

impl Network {
    /// Glorot-uniform weights, zero biases.
    pub fn glorot(sizes: &[usize], t_scale: f64, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.gen_range(-bound..=bound)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Network { sizes: sizes.to_vec(), t_scale, params }
    }

    /// Three hidden layers of 50 units, time scaled by 200.
    pub fn standard(n_out: usize, seed: u64) -> Network {
        Network::glorot(&[1, 50, 50, 50, n_out], 200.0, seed)
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_out(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn offsets(&self) -> Vec<(usize, usize, usize)> {
        let mut at = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let o = (at, w[0], w[1]);
                at += w[0] * w[1] + w[1];
                o
            })
            .collect()
    }

    fn layer(&self, (at, n_in, n_out): (usize, usize, usize)) -> (DMatrixView<'_, f64>, &[f64]) {
        let w = DMatrixView::from_slice(&self.params[at..at + n_in * n_out], n_out, n_in);
        (w, &self.params[at + n_in * n_out..at + n_in * n_out + n_out])
    }

    /// `x_nn(t)`.
    pub fn forward(&self, t: f64) -> Vec<f64> {
        self.forward_dt(t).0
    }

    /// `(x_nn(t), ẋ_nn(t))` by forward-mode differentiation in `t`.
    pub fn forward_dt(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let b = self.forward_batch(&[t]);
        (b.x.column(0).iter().copied().collect(), b.dx.column(0).iter().copied().collect())
    }

    /// Values and time derivatives at many times; columns are time points.
    pub fn forward_batch(&self, times: &[f64]) -> Batch {
        let d = times.len();
        let mut a = DMatrix::from_fn(1, d, |_, j| times[j] / self.t_scale);
        let mut da = DMatrix::from_element(1, d, 1.0 / self.t_scale);
        let offsets = self.offsets();
        let mut inputs = Vec::with_capacity(offsets.len());
        let mut pre = DMatrix::zeros(0, 0);
        for (k, &o) in offsets.iter().enumerate() {
            let (w, bias) = self.layer(o);
            let mut z = &w * &a;
            for mut col in z.column_iter_mut() {
                for (v, b) in col.iter_mut().zip(bias) {
                    *v += b;
                }
            }
            let mut dz = &w * &da;
            inputs.push(LayerInput { a, da, pre_tangent: pre });
            pre = dz.clone();
            if k + 1 < offsets.len() {
                z.apply(|v| *v = v.tanh());
                dz.zip_apply(&z, |g, h| *g *= 1.0 - h * h);
            }
            a = z;
            da = dz;
        }
        Batch { x: a, dx: da, inputs }
    }

    /// Accumulates into `grad` the gradient of a loss whose partials with
    /// respect to the batch outputs are `gx = ∂L/∂x` and `gdx = ∂L/∂ẋ`.
    pub fn backward(&self, batch: &Batch, gx: &DMatrix<f64>, gdx: &DMatrix<f64>, grad: &mut [f64]) {
        let offsets = self.offsets();
        let mut gz = gx.clone();
        let mut gdz = gdx.clone();
        for (k, &(at, n_in, n_out)) in offsets.iter().enumerate().rev() {
            let LayerInput { a, da, pre_tangent } = &batch.inputs[k];
            {
                let mut gw = DMatrixViewMut::from_slice(&mut grad[at..at + n_in * n_out], n_out, n_in);
                gw.gemm(1.0, &gz, &a.transpose(), 1.0);
                gw.gemm(1.0, &gdz, &da.transpose(), 1.0);
            }
            for (g, row) in grad[at + n_in * n_out..at + n_in * n_out + n_out].iter_mut().zip(gz.row_iter()) {
                *g += row.sum();
            }
            if k == 0 {
                break;
            }
            let (w, _) = self.layer((at, n_in, n_out));
            let ga = w.transpose() * &gz;
            let gda = w.transpose() * &gdz;
            // a = tanh(z), ȧ = s ż with s = 1 − a²
            gz = DMatrix::from_fn(n_in, a.ncols(), |i, j| {
                let s = 1.0 - a[(i, j)] * a[(i, j)];
                s * ga[(i, j)] - 2.0 * a[(i, j)] * s * pre_tangent[(i, j)] * gda[(i, j)]
            });
            gdz = DMatrix::from_fn(n_in, a.ncols(), |i, j| (1.0 - a[(i, j)] * a[(i, j)]) * gda[(i, j)]);
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let layers = self
            .offsets()
            .into_iter()
            .map(|o| {
                let (w, b) = self.layer(o);
                LayerTensor { shape: [o.2, o.1], weights: w.iter().copied().collect(), bias: b.to_vec() }
            })
            .collect();
        Checkpoint { version: 1, t_scale: self.t_scale, sizes: self.sizes.clone(), layers }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Network, NeuralError> {
        if c.version != 1 {
            return Err(NeuralError::Checkpoint(format!("unsupported version {}", c.version)));
        }
        let mut params = Vec::new();
        for (l, w) in c.layers.iter().zip(c.sizes.windows(2)) {
            if l.shape != [w[1], w[0]] || l.weights.len() != w[0] * w[1] || l.bias.len() != w[1] {
                return Err(NeuralError::Checkpoint("layer shape does not match the size list".into()));
            }
            params.extend(&l.weights);
            params.extend(&l.bias);
        }
        if c.layers.len() + 1 != c.sizes.len() {
            return Err(NeuralError::Checkpoint("layer count does not match the size list".into()));
        }
        Ok(Network { sizes: c.sizes.clone(), t_scale: c.t_scale, params })
    }
}

/// Forward results plus the per-layer inputs (value, tangent) needed by
/// [`Network::backward`].
#[derive(Debug, Clone)]
pub struct Batch {
    pub x: DMatrix<f64>,
    pub dx: DMatrix<f64>,
    inputs: Vec<LayerInput>,
}

#[derive(Debug, Clone)]
struct LayerInput {
    a: DMatrix<f64>,
    da: DMatrix<f64>,
    /// Tangent of the pre-activation that produced `a` (empty for the first layer).
    pre_tangent: DMatrix<f64>,
}

/// JSON checkpoint: one tensor per layer with an explicit shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub t_scale: f64,
    pub sizes: Vec<usize>,
    pub layers: Vec<LayerTensor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTensor {
    /// `[out, in]`; weights are column-major.
    pub shape: [usize; 2],
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> Network {
        let mut n = Network::glorot(&[1, 6, 5, 3], 10.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        for p in n.params.iter_mut() {
            *p += rng.gen_range(-0.3..0.3);
        }
        n
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let n = Network::standard(4, 7);
        let bound = (6.0f64 / 51.0).sqrt();
        assert!(n.params[..50].iter().all(|w| w.abs() <= bound));
        assert!(n.params[50..100].iter().all(|&b| b == 0.0));
        assert_eq!(n, Network::standard(4, 7));
        assert_eq!(n.n_params(), 50 + 50 + 2 * (2500 + 50) + 200 + 4);
    }

    #[test]
    fn zero_weights_and_linear_layer() {
        let mut n = Network::glorot(&[1, 4, 2], 200.0, 1);
        n.params.iter_mut().for_each(|p| *p = 0.0);
        let len = n.params.len();
        n.params[len - 2..].copy_from_slice(&[0.3, -0.7]);
        assert_eq!(n.forward_dt(5.0), (vec![0.3, -0.7], vec![0.0, 0.0]));
        let lin = Network { sizes: vec![1, 1], t_scale: 200.0, params: vec![1.5, 0.25] };
        assert_eq!(lin.forward_dt(40.0), (vec![1.5 * 0.2 + 0.25], vec![1.5 / 200.0]));
    }

    #[test]
    fn time_derivative_matches_finite_differences() {
        let n = small(3);
        for &t in &[0.0, 1.3, 7.9] {
            let (_, dx) = n.forward_dt(t);
            let h = 1e-5;
            let (a, b) = (n.forward(t + h), n.forward(t - h));
            for i in 0..3 {
                let fd = (a[i] - b[i]) / (2.0 * h);
                assert!((fd - dx[i]).abs() <= 1e-6 * dx[i].abs().max(1e-3), "{fd} vs {}", dx[i]);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let n = small(5);
        let times = [0.5, 2.0, 6.5];
        // L = Σ c·x² + Σ e·ẋ·x
        let loss = |net: &Network| {
            let b = net.forward_batch(&times);
            b.x.iter().map(|v| 0.7 * v * v).sum::<f64>() + b.x.iter().zip(b.dx.iter()).map(|(x, d)| 1.3 * x * d).sum::<f64>()
        };
        let b = n.forward_batch(&times);
        let gx = b.x.scale(1.4) + b.dx.scale(1.3);
        let gdx = b.x.scale(1.3);
        let mut grad = vec![0.0; n.n_params()];
        n.backward(&b, &gx, &gdx, &mut grad);
        for k in 0..n.n_params() {
            let h = 1e-6;
            let (mut p, mut m) = (n.clone(), n.clone());
            p.params[k] += h;
            m.params[k] -= h;
            let fd = (loss(&p) - loss(&m)) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-6 * grad[k].abs().max(1e-2), "param {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let n = small(2);
        let text = serde_json::to_string(&n.to_checkpoint()).unwrap();
        let back = Network::from_checkpoint(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, n);
    }
}
