//! Linear classifiers: logistic regression and a linear SVM.
//!
//! Both work on standardized features and minimize
//! `(1/n)·Σ wᵢ·loss(yᵢ, f(xᵢ)) + λ·R(w)` with `λ = 1/(C·n)`, which is the
//! usual `C·Σ loss + R(w)` objective rescaled by `1/(C·n)`. The L1 part of
//! `R` is handled by soft-thresholding after each gradient step.

use serde::{Deserialize, Serialize};

use crate::datasets::FeatureMatrix;
use crate::scaling::Standardizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Penalty {
    L2,
    L1,
    ElasticNet,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intercept {
    /// No intercept term.
    Off,
    /// Intercept fitted without regularization.
    Free,
    /// Intercept learned as the weight of a constant feature equal to the
    /// scaling value, regularized like every other weight.
    Penalized(f64),
}

impl Intercept {
    fn scaling(self) -> Option<f64> {
        match self {
            Intercept::Penalized(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    scaler: Standardizer,
    weights: Vec<f64>,
    intercept: f64,
}

impl LinearModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.scaler.mean)
            .zip(&self.scaler.scale)
            .zip(&self.weights)
            .map(|(((v, m), s), w)| (v - m) / s * w)
            .sum::<f64>()
            + self.intercept
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) > 0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub model: LinearModel,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub penalty: Penalty,
    pub l1_ratio: f64,
    pub intercept: Intercept,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HingeLoss {
    Hinge,
    SquaredHinge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub penalty: Penalty,
    pub loss: HingeLoss,
    pub intercept: Intercept,
    pub balanced: bool,
}

/// Standardized design with an optional constant column appended.
struct Design {
    scaler: Standardizer,
    z: Vec<f64>,
    width: usize,
    n: usize,
    constant: Option<f64>,
}

impl Design {
    fn new(x: &FeatureMatrix, intercept: Intercept) -> Self {
        let scaler = Standardizer::fit(x.rows(), x.n_cols());
        let constant = intercept.scaling();
        let p = x.n_cols();
        let width = p + usize::from(constant.is_some());
        let n = x.n_rows();
        let mut z = vec![0.0; n * width];
        for i in 0..n {
            let out = &mut z[i * width..(i + 1) * width];
            scaler.apply_into(x.row(i), &mut out[..p]);
            if let Some(s) = constant {
                out[p] = s;
            }
        }
        Design {
            scaler,
            z,
            width,
            n,
            constant,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.z[i * self.width..(i + 1) * self.width]
    }

    fn margin(&self, i: usize, w: &[f64], b: f64) -> f64 {
        self.row(i).iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b
    }

    /// Mean squared row norm, weighted; bounds the largest eigenvalue of the
    /// weighted Gram matrix divided by n.
    fn mean_sq_norm(&self, weight: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| weight[i] * self.row(i).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / self.n as f64
    }

    fn into_model(self, w: Vec<f64>, b: f64) -> LinearModel {
        let p = self.scaler.mean.len();
        let intercept = match self.constant {
            Some(s) => w[p] * s,
            None => b,
        };
        LinearModel {
            scaler: self.scaler,
            weights: w[..p].to_vec(),
            intercept,
        }
    }
}

/// Splits the penalty into (smooth L2 strength, L1 strength).
fn penalty_split(penalty: Penalty, lambda: f64, l1_ratio: f64) -> (f64, f64) {
    match penalty {
        Penalty::L2 => (lambda, 0.0),
        Penalty::L1 => (0.0, lambda),
        Penalty::ElasticNet => (lambda * (1.0 - l1_ratio), lambda * l1_ratio),
        Penalty::None => (0.0, 0.0),
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

pub fn fit_logistic(x: &FeatureMatrix, y: &[u8], params: &LogisticParams) -> Fitted {
    let d = Design::new(x, params.intercept);
    let n = d.n as f64;
    let lambda = 1.0 / (params.c * n);
    let (l2, l1) = penalty_split(params.penalty, lambda, params.l1_ratio);
    let ones = vec![1.0; d.n];
    let step = 1.0 / (0.25 * d.mean_sq_norm(&ones) + l2).max(1e-12);
    let free_intercept = matches!(params.intercept, Intercept::Free);

    let mut w = vec![0.0; d.width];
    let mut b = 0.0;
    let mut grad = vec![0.0; d.width];
    let mut residual = vec![0.0; d.n];
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=params.max_iter {
        iterations = it;
        for i in 0..d.n {
            residual[i] = sigmoid(d.margin(i, &w, b)) - y[i] as f64;
        }
        grad.iter_mut().zip(&w).for_each(|(g, wk)| *g = l2 * wk);
        for i in 0..d.n {
            let r = residual[i] / n;
            for (g, z) in grad.iter_mut().zip(d.row(i)) {
                *g += r * z;
            }
        }
        let mut change: f64 = 0.0;
        for k in 0..d.width {
            let next = soft_threshold(w[k] - step * grad[k], step * l1);
            change = change.max((next - w[k]).abs());
            w[k] = next;
        }
        if free_intercept {
            // one safeguarded Newton step on the unregularized intercept
            let (mut g, mut h) = (0.0, 0.0);
            for i in 0..d.n {
                let p = sigmoid(d.margin(i, &w, b));
                g += p - y[i] as f64;
                h += p * (1.0 - p);
            }
            let delta = (g / h.max(1e-12)).clamp(-5.0, 5.0);
            b -= delta;
            change = change.max(delta.abs());
        }
        if change <= params.tol {
            converged = true;
            break;
        }
    }
    Fitted {
        model: d.into_model(w, b),
        iterations,
        converged,
    }
}

pub fn fit_svm(x: &FeatureMatrix, y: &[u8], params: &SvmParams) -> Fitted {
    let d = Design::new(x, params.intercept);
    let n = d.n as f64;
    let lambda = 1.0 / (params.c * n);
    let (l2, l1) = penalty_split(params.penalty, lambda, 1.0);
    let sign: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let cw: Vec<f64> = if params.balanced {
        let pos = y.iter().filter(|&&v| v == 1).count().max(1) as f64;
        let neg = (y.len() as f64 - pos).max(1.0);
        y.iter()
            .map(|&v| n / (2.0 * if v == 1 { pos } else { neg }))
            .collect()
    } else {
        vec![1.0; d.n]
    };
    let curvature = d.mean_sq_norm(&cw);

    let objective = |w: &[f64]| -> f64 {
        let data: f64 = (0..d.n)
            .map(|i| {
                let slack = (1.0 - sign[i] * d.margin(i, w, 0.0)).max(0.0);
                cw[i] * match params.loss {
                    HingeLoss::Hinge => slack,
                    HingeLoss::SquaredHinge => slack * slack,
                }
            })
            .sum::<f64>()
            / n;
        let sq: f64 = w.iter().map(|v| v * v).sum();
        let abs: f64 = w.iter().map(|v| v.abs()).sum();
        data + 0.5 * l2 * sq + l1 * abs
    };

    let mut w = vec![0.0; d.width];
    let mut best_w = w.clone();
    let mut best_obj = objective(&w);
    let mut grad = vec![0.0; d.width];
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=params.max_iter {
        iterations = it;
        grad.iter_mut().zip(&w).for_each(|(g, wk)| *g = l2 * wk);
        for i in 0..d.n {
            let slack = 1.0 - sign[i] * d.margin(i, &w, 0.0);
            if slack <= 0.0 {
                continue;
            }
            let coef = match params.loss {
                HingeLoss::Hinge => -cw[i] * sign[i] / n,
                HingeLoss::SquaredHinge => -2.0 * cw[i] * sign[i] * slack / n,
            };
            for (g, z) in grad.iter_mut().zip(d.row(i)) {
                *g += coef * z;
            }
        }
        let step = match params.loss {
            HingeLoss::SquaredHinge => 1.0 / (2.0 * curvature + l2).max(1e-12),
            // diminishing subgradient steps
            HingeLoss::Hinge => 1.0 / ((curvature.sqrt() + l2).max(1e-12) * (it as f64).sqrt()),
        };
        let mut change: f64 = 0.0;
        for k in 0..d.width {
            let next = soft_threshold(w[k] - step * grad[k], step * l1);
            change = change.max((next - w[k]).abs());
            w[k] = next;
        }
        let obj = objective(&w);
        if obj < best_obj {
            best_obj = obj;
            best_w.copy_from_slice(&w);
        }
        if change <= params.tol {
            converged = true;
            break;
        }
    }
    Fitted {
        model: d.into_model(best_w, 0.0),
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (FeatureMatrix, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y = (0..40).map(|i| u8::from(i >= 20)).collect();
        (FeatureMatrix::from_rows(&rows).unwrap(), y)
    }

    fn accuracy(m: &LinearModel, x: &FeatureMatrix, y: &[u8]) -> f64 {
        (0..x.n_rows()).filter(|&i| m.predict_row(x.row(i)) == y[i]).count() as f64 / y.len() as f64
    }

    #[test]
    fn logistic_learns_a_threshold() {
        let (x, y) = separable();
        let f = fit_logistic(
            &x,
            &y,
            &LogisticParams {
                c: 10.0,
                tol: 1e-6,
                max_iter: 1000,
                penalty: Penalty::L2,
                l1_ratio: 0.5,
                intercept: Intercept::Free,
            },
        );
        assert!(accuracy(&f.model, &x, &y) >= 0.95);
    }

    #[test]
    fn strong_l1_zeroes_every_weight() {
        let (x, y) = separable();
        let f = fit_logistic(
            &x,
            &y,
            &LogisticParams {
                c: 1e-4,
                tol: 1e-8,
                max_iter: 500,
                penalty: Penalty::L1,
                l1_ratio: 0.5,
                intercept: Intercept::Free,
            },
        );
        assert!(f.model.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn svm_variants_learn_a_threshold() {
        let (x, y) = separable();
        for loss in [HingeLoss::Hinge, HingeLoss::SquaredHinge] {
            for penalty in [Penalty::L1, Penalty::L2] {
                let f = fit_svm(
                    &x,
                    &y,
                    &SvmParams {
                        c: 1.0,
                        tol: 1e-5,
                        max_iter: 1000,
                        penalty,
                        loss,
                        intercept: Intercept::Penalized(1.0),
                        balanced: false,
                    },
                );
                assert!(accuracy(&f.model, &x, &y) >= 0.9, "{loss:?}/{penalty:?}");
            }
        }
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let (x, y) = separable();
        let f = fit_logistic(
            &x,
            &y,
            &LogisticParams {
                c: 1e4,
                tol: 1e-12,
                max_iter: 3,
                penalty: Penalty::L2,
                l1_ratio: 0.5,
                intercept: Intercept::Free,
            },
        );
        assert!(!f.converged);
        assert_eq!(f.iterations, 3);
    }
}
