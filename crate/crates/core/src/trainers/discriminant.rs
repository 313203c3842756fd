//! Gaussian discriminant analysis, linear (shared covariance) or quadratic
//! (per-class covariance).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::datasets::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scaling::Standardizer;

#[derive(Debug, Clone, PartialEq)]
pub struct DaParams {
    pub quadratic: bool,
    /// QDA: each class covariance becomes `(1 − r)·Σ + r·I`.
    pub reg_param: f64,
    /// LDA: `(1 − s)·Σ + s·(tr Σ / p)·I`. Ignored by the `svd` solver.
    pub shrinkage: Option<f64>,
    /// Eigenvalues of a covariance are floored at this value.
    pub tol: f64,
}

/// Class-conditional Gaussian in eigen form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Gaussian {
    mean: Vec<f64>,
    /// Rows are eigenvectors scaled by `1/√λ`.
    whitening: Vec<Vec<f64>>,
    log_det: f64,
    log_prior: f64,
}

impl Gaussian {
    fn score(&self, z: &[f64]) -> f64 {
        let centered: Vec<f64> = z.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let maha: f64 = self
            .whitening
            .iter()
            .map(|r| {
                let v: f64 = r.iter().zip(&centered).map(|(a, b)| a * b).sum();
                v * v
            })
            .sum();
        -0.5 * self.log_det - 0.5 * maha + self.log_prior
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantModel {
    scaler: Standardizer,
    classes: [Gaussian; 2],
}

fn covariance(z: &[Vec<f64>], mean: &DVector<f64>) -> DMatrix<f64> {
    let p = mean.len();
    let mut cov = DMatrix::zeros(p, p);
    for r in z {
        let d = DVector::from_column_slice(r) - mean;
        cov += &d * d.transpose();
    }
    let denom = (z.len().max(2) - 1) as f64;
    cov / denom
}

fn gaussian(mean: DVector<f64>, cov: DMatrix<f64>, tol: f64, prior: f64) -> Result<Gaussian> {
    let eig = SymmetricEigen::try_new(cov, 1e-12, 10_000)
        .ok_or_else(|| Error::Training("covariance eigendecomposition did not converge".into()))?;
    let floor = tol.max(1e-12);
    let mut whitening = Vec::with_capacity(mean.len());
    let mut log_det = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if !lambda.is_finite() {
            return Err(Error::Training("non-finite covariance".into()));
        }
        let l = lambda.max(floor);
        log_det += l.ln();
        let inv = 1.0 / l.sqrt();
        whitening.push(eig.eigenvectors.column(k).iter().map(|v| v * inv).collect());
    }
    Ok(Gaussian {
        mean: mean.iter().copied().collect(),
        whitening,
        log_det,
        log_prior: prior.ln(),
    })
}

pub fn fit(x: &FeatureMatrix, y: &[u8], params: &DaParams) -> Result<DiscriminantModel> {
    let p = x.n_cols();
    let scaler = Standardizer::fit(x.rows(), p);
    let mut by_class: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    for (i, &label) in y.iter().enumerate() {
        by_class[label as usize].push(scaler.apply(x.row(i)));
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(Error::Training("discriminant analysis needs both classes".into()));
    }
    let n = y.len() as f64;
    let means: Vec<DVector<f64>> = by_class
        .iter()
        .map(|rows| {
            let mut m = DVector::zeros(p);
            for r in rows {
                m += DVector::from_column_slice(r);
            }
            m / rows.len() as f64
        })
        .collect();
    let priors: Vec<f64> = by_class.iter().map(|r| r.len() as f64 / n).collect();

    let classes = if params.quadratic {
        let r = params.reg_param;
        let mut out = Vec::with_capacity(2);
        for c in 0..2 {
            let cov = covariance(&by_class[c], &means[c]) * (1.0 - r) + DMatrix::identity(p, p) * r;
            out.push(gaussian(means[c].clone(), cov, params.tol, priors[c])?);
        }
        out
    } else {
        let mut pooled = DMatrix::zeros(p, p);
        for c in 0..2 {
            for row in &by_class[c] {
                let d = DVector::from_column_slice(row) - &means[c];
                pooled += &d * d.transpose();
            }
        }
        pooled /= (n - 2.0).max(1.0);
        if let Some(s) = params.shrinkage {
            let mu = pooled.trace() / p.max(1) as f64;
            pooled = pooled * (1.0 - s) + DMatrix::identity(p, p) * (s * mu);
        }
        let mut out = Vec::with_capacity(2);
        for c in 0..2 {
            out.push(gaussian(means[c].clone(), pooled.clone(), params.tol, priors[c])?);
        }
        out
    };
    let [c0, c1]: [Gaussian; 2] = classes.try_into().expect("two classes");
    Ok(DiscriminantModel {
        scaler,
        classes: [c0, c1],
    })
}

impl DiscriminantModel {
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let z = self.scaler.apply(row);
        u8::from(self.classes[1].score(&z) > self.classes[0].score(&z))
    }
}
