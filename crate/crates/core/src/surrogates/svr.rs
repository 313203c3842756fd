//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The dual has `2n` variables `a` (the `alpha` and `alpha*` blocks) with
//! labels `+1` / `-1`, box `0 <= a <= C`, and one equality `sum(y a) = 0`.
//! It is solved by SMO with second-order working-set selection.

use serde::{Deserialize, Serialize};

use crate::scaling::Standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// `None` means `1 / (n_features * var(X))` on the standardized inputs.
    pub gamma: Option<f64>,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.01,
            tol: 1e-3,
            max_iter: 10_000,
            gamma: None,
        }
    }
}

/// Raw dual solution, exposed for optimality checks.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub gradient: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    /// Maximal violating-pair gap `m(a) - M(a)` at exit.
    pub kkt_gap: f64,
    pub hit_iteration_cap: bool,
}

const TAU: f64 = 1e-12;

fn sign(t: usize, l: usize) -> f64 {
    if t < l {
        1.0
    } else {
        -1.0
    }
}

fn in_up(t: usize, l: usize, a: f64, c: f64) -> bool {
    if t < l {
        a < c
    } else {
        a > 0.0
    }
}

fn in_low(t: usize, l: usize, a: f64, c: f64) -> bool {
    if t < l {
        a > 0.0
    } else {
        a < c
    }
}

/// Linear term of the dual for targets `z`.
pub fn dual_linear_term(z: &[f64], epsilon: f64) -> Vec<f64> {
    z.iter().map(|v| epsilon - v).chain(z.iter().map(|v| epsilon + v)).collect()
}

/// Largest violation `max_{I_up} -yG - min_{I_low} -yG` for a dual point.
pub fn violation(alpha: &[f64], gradient: &[f64], c: f64) -> f64 {
    let l = alpha.len() / 2;
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..2 * l {
        let v = -sign(t, l) * gradient[t];
        if in_up(t, l, alpha[t], c) {
            up = up.max(v);
        }
        if in_low(t, l, alpha[t], c) {
            low = low.min(v);
        }
    }
    if up == f64::NEG_INFINITY || low == f64::INFINITY {
        0.0
    } else {
        up - low
    }
}

/// Solves the dual for a precomputed `n x n` kernel (row-major).
pub fn solve_dual(kernel: &[f64], z: &[f64], params: &SvrParams) -> DualSolution {
    let l = z.len();
    let c = params.c;
    let k = |i: usize, j: usize| kernel[(i % l) * l + (j % l)];
    let mut alpha = vec![0.0; 2 * l];
    let mut g = dual_linear_term(z, params.epsilon);
    let mut iterations = 0;
    let mut gap;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..2 * l {
            if in_up(t, l, alpha[t], c) {
                let v = -sign(t, l) * g[t];
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        if i != usize::MAX {
            for t in 0..2 * l {
                if !in_low(t, l, alpha[t], c) {
                    continue;
                }
                let yg = sign(t, l) * g[t];
                gmax2 = gmax2.max(yg);
                let diff = gmax + yg;
                if diff > 0.0 {
                    let mut quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -diff * diff / quad;
                    if obj <= best_obj {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        gap = if i == usize::MAX || gmax2 == f64::NEG_INFINITY {
            0.0
        } else {
            gmax + gmax2
        };
        if gap < params.tol || j == usize::MAX {
            break;
        }
        if iterations >= params.max_iter {
            break;
        }
        iterations += 1;

        let (yi, yj) = (sign(i, l), sign(j, l));
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        if yi != yj {
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..2 * l {
            let yt = sign(t, l);
            g[t] += yt * yi * k(t, i) * di + yt * yj * k(t, j) * dj;
        }
    }
    let rho = compute_rho(&alpha, &g, c);
    DualSolution {
        alpha,
        gradient: g,
        rho,
        iterations,
        kkt_gap: gap,
        hit_iteration_cap: iterations >= params.max_iter && gap >= params.tol,
    }
}

fn compute_rho(alpha: &[f64], g: &[f64], c: f64) -> f64 {
    let l = alpha.len() / 2;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..2 * l {
        let y = sign(t, l);
        let yg = y * g[t];
        if alpha[t] >= c {
            if y < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svr {
    pub scaler: Standardizer,
    pub gamma: f64,
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub kkt_gap: f64,
    pub hit_iteration_cap: bool,
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d).exp()
}

/// Kernel matrix of standardized rows.
pub fn rbf_kernel(xs: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(&xs[i], &xs[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

pub fn auto_gamma(xs: &[Vec<f64>]) -> f64 {
    let width = xs.first().map_or(1, Vec::len).max(1);
    let count = (xs.len() * width) as f64;
    let mean: f64 = xs.iter().flatten().sum::<f64>() / count;
    let var: f64 = xs.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (width as f64 * var)
    } else {
        1.0 / width as f64
    }
}

pub fn fit_svr(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Svr {
    let width = x[0].len();
    let scaler = Standardizer::fit(x.iter().map(Vec::as_slice), width);
    let xs: Vec<Vec<f64>> = x.iter().map(|r| scaler.apply(r)).collect();
    let gamma = params.gamma.unwrap_or_else(|| auto_gamma(&xs));
    let kernel = rbf_kernel(&xs, gamma);
    let sol = solve_dual(&kernel, y, params);
    let l = y.len();
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for (i, row) in xs.into_iter().enumerate() {
        let beta = sol.alpha[i] - sol.alpha[i + l];
        if beta != 0.0 {
            support.push(row);
            coef.push(beta);
        }
    }
    Svr {
        scaler,
        gamma,
        support,
        coef,
        rho: sol.rho,
        iterations: sol.iterations,
        kkt_gap: sol.kkt_gap,
        hit_iteration_cap: sol.hit_iteration_cap,
    }
}

impl Svr {
    pub fn predict_raw(&self, row: &[f64]) -> f64 {
        let x = self.scaler.apply(row);
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, b)| b * rbf(s, &x, self.gamma))
            .sum::<f64>()
            - self.rho
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_a_smooth_curve_within_the_tube() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 39.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 0.5 + 0.3 * (3.0 * r[0]).sin()).collect();
        let p = SvrParams {
            c: 100.0,
            ..SvrParams::default()
        };
        let m = fit_svr(&x, &y, &p);
        assert!(!m.hit_iteration_cap);
        for (r, t) in x.iter().zip(&y) {
            assert!((m.predict_raw(r) - t).abs() < 0.05, "{} vs {t}", m.predict_raw(r));
        }
    }

    #[test]
    fn constant_targets_give_no_support_vectors_and_the_constant() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = vec![0.4; 10];
        let m = fit_svr(&x, &y, &SvrParams::default());
        assert!(m.coef.is_empty());
        assert!((m.predict_raw(&[3.0]) - 0.4).abs() <= 0.01 + 1e-9);
    }

    #[test]
    fn auto_gamma_on_standardized_data_is_inverse_width() {
        let xs = vec![vec![-1.0, 1.0], vec![1.0, -1.0]];
        assert!((auto_gamma(&xs) - 0.5).abs() < 1e-12);
    }
}
