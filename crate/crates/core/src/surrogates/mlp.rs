use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling::Standardizer;
use crate::seed::{derived_rng, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden_layers: usize,
    pub width: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_layers: 4,
            width: 32,
            epochs: 50,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Fully connected ReLU network with a single linear output. All weights and
/// biases live in one flat vector: for each layer, the `out x in` weight
/// matrix in row-major order followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl Network {
    /// He-uniform initialization: weights in `±sqrt(6 / fan_in)`, zero biases.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Self {
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in.max(1) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..=bound)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Network {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Pre-activations of every layer for one input.
    fn forward_layers(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(self.sizes.len() - 1);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let input: Vec<f64> = match zs.last() {
                None => x.to_vec(),
                Some(z) => z.iter().map(|v| v.max(0.0)).collect(),
            };
            let weights = &self.params[off..off + n_in * n_out];
            let bias = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let z = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    bias[o] + row.iter().zip(&input).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            off += n_in * n_out + n_out;
            zs.push(z);
        }
        zs
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        self.forward_layers(x).last().expect("at least one layer")[0]
    }

    pub fn mse(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        xs.iter().zip(ys).map(|(x, y)| (self.forward(x) - y).powi(2)).sum::<f64>() / n
    }

    /// Mean squared error over the batch and its gradient with respect to
    /// every entry of [`Network::params`].
    pub fn mse_and_gradient(&self, xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let n = xs.len() as f64;
        let mut loss = 0.0;
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        for (x, y) in xs.iter().zip(ys) {
            let zs = self.forward_layers(x);
            let err = zs[n_layers - 1][0] - y;
            loss += err * err;
            let mut delta = vec![2.0 * err / n];
            for l in (0..n_layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let input: Vec<f64> = if l == 0 {
                    x.clone()
                } else {
                    zs[l - 1].iter().map(|v| v.max(0.0)).collect()
                };
                let o = offsets[l];
                for j in 0..n_out {
                    let row = &mut grad[o + j * n_in..o + (j + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(&input) {
                        *g += delta[j] * a;
                    }
                    grad[o + n_in * n_out + j] += delta[j];
                }
                if l > 0 {
                    let weights = &self.params[o..o + n_in * n_out];
                    let prev = &zs[l - 1];
                    delta = (0..n_in)
                        .map(|i| {
                            if prev[i] <= 0.0 {
                                return 0.0;
                            }
                            (0..n_out).map(|j| weights[j * n_in + i] * delta[j]).sum()
                        })
                        .collect();
                }
            }
        }
        (loss / n, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub scaler: Standardizer,
    pub network: Network,
}

impl Mlp {
    pub fn predict_raw(&self, row: &[f64]) -> f64 {
        self.network.forward(&self.scaler.apply(row))
    }
}

pub fn fit_mlp(x: &[Vec<f64>], y: &[f64], params: &MlpParams, seed: u64) -> Result<Mlp> {
    let width = x[0].len();
    let scaler = Standardizer::fit(x.iter().map(Vec::as_slice), width);
    let xs: Vec<Vec<f64>> = x.iter().map(|r| scaler.apply(r)).collect();
    let mut sizes = vec![width];
    sizes.extend(std::iter::repeat_n(params.width, params.hidden_layers));
    sizes.push(1);
    let mut net = Network::new(&sizes, &mut derived_rng(seed, "mlp-init", 0));
    let mut shuffle = derived_rng(seed, "mlp-batches", 0);
    let p = net.params.len();
    let (mut m, mut v) = (vec![0.0; p], vec![0.0; p]);
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let batch = params.batch_size.max(1);
    for epoch in 1..=params.epochs {
        order.shuffle(&mut shuffle);
        for chunk in order.chunks(batch) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let by: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
            let (loss, grad) = net.mse_and_gradient(&bx, &by);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Fit(format!("mlp diverged at epoch {epoch}")));
            }
            step += 1;
            let c1 = 1.0 - params.beta1.powi(step);
            let c2 = 1.0 - params.beta2.powi(step);
            for k in 0..p {
                m[k] = params.beta1 * m[k] + (1.0 - params.beta1) * grad[k];
                v[k] = params.beta2 * v[k] + (1.0 - params.beta2) * grad[k] * grad[k];
                net.params[k] -= params.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + params.epsilon);
            }
        }
        if net.params.iter().any(|w| !w.is_finite()) {
            return Err(Error::Fit(format!("mlp diverged at epoch {epoch}")));
        }
    }
    Ok(Mlp { scaler, network: net })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;

    #[test]
    fn learns_a_linear_target() {
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 20) as f64, (i / 20) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 0.02 * r[0] + 0.01 * r[1]).collect();
        let p = MlpParams {
            epochs: 200,
            ..MlpParams::default()
        };
        let m = fit_mlp(&x, &y, &p, 3).unwrap();
        let mse = x.iter().zip(&y).map(|(r, t)| (m.predict_raw(r) - t).powi(2)).sum::<f64>() / 200.0;
        assert!(mse < 1e-3, "mse {mse}");
    }

    #[test]
    fn reports_the_divergent_epoch() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![0.0, 1.0];
        let p = MlpParams {
            learning_rate: f64::INFINITY,
            ..MlpParams::default()
        };
        let err = fit_mlp(&x, &y, &p, 0).unwrap_err().to_string();
        assert!(err.contains("epoch 1"), "{err}");
    }

    #[test]
    fn layout_matches_layer_sizes() {
        let net = Network::new(&[3, 4, 1], &mut rng(0));
        assert_eq!(net.params().len(), 3 * 4 + 4 + 4 + 1);
        assert_eq!(net.sizes(), &[3, 4, 1]);
    }
}
