use serde::{Deserialize, Serialize};

use super::regtree::{RegTreeParams, RegressionTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            rounds: 200,
            learning_rate: 0.1,
            max_depth: 30,
            min_samples_leaf: 1,
        }
    }
}

/// Squared-error gradient boosting: `F_0 = mean(y)`, then each round fits a
/// regression tree to the residuals `y - F` and adds it with shrinkage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbt {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Training MSE after each round, starting with the constant model.
    pub train_mse: Vec<f64>,
}

pub fn fit_gbt(x: &[Vec<f64>], y: &[f64], params: &GbtParams) -> Gbt {
    let n = y.len();
    let init = y.iter().sum::<f64>() / n as f64;
    let tree_params = RegTreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: None,
    };
    let idx: Vec<usize> = (0..n).collect();
    let mut f = vec![init; n];
    let mse = |f: &[f64]| f.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
    let mut train_mse = vec![mse(&f)];
    let mut trees = Vec::with_capacity(params.rounds);
    for _ in 0..params.rounds {
        let residual: Vec<f64> = y.iter().zip(&f).map(|(t, p)| t - p).collect();
        if residual.iter().all(|r| *r == 0.0) {
            break;
        }
        let tree = RegressionTree::fit(x, &residual, &idx, &tree_params, None);
        for (fi, row) in f.iter_mut().zip(x) {
            *fi += params.learning_rate * tree.predict(row);
        }
        train_mse.push(mse(&f));
        trees.push(tree);
    }
    Gbt {
        init,
        learning_rate: params.learning_rate,
        trees,
        train_mse,
    }
}

impl Gbt {
    pub fn predict_raw(&self, row: &[f64]) -> f64 {
        self.init + self.trees.iter().map(|t| self.learning_rate * t.predict(row)).sum::<f64>()
    }
}
