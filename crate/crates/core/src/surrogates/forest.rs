use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regtree::{RegTreeParams, RegressionTree};
use crate::seed::derived_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
    pub min_samples_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 35,
            bootstrap: true,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionForest {
    pub trees: Vec<RegressionTree>,
}

/// Tree `i` draws its bootstrap sample from its own derived stream, so the
/// result does not depend on how trees are scheduled across threads.
pub fn fit_forest(x: &[Vec<f64>], y: &[f64], params: &ForestParams, seed: u64) -> RegressionForest {
    let n = y.len();
    let tree_params = RegTreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: None,
    };
    let trees = (0..params.n_trees.max(1))
        .into_par_iter()
        .map(|i| {
            let idx: Vec<usize> = if params.bootstrap {
                let mut rng = derived_rng(seed, "forest-bootstrap", i as u64);
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            RegressionTree::fit(x, y, &idx, &tree_params, None)
        })
        .collect();
    RegressionForest { trees }
}

impl RegressionForest {
    pub fn tree_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(row)).collect()
    }

    pub fn predict_raw(&self, row: &[f64]) -> f64 {
        self.tree_predictions(row).iter().sum::<f64>() / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_unbootstrapped_tree_memorizes_distinct_points() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![(i * 7 % 10) as f64, (i % 3) as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let p = ForestParams {
            n_trees: 1,
            max_depth: usize::MAX,
            bootstrap: false,
            min_samples_leaf: 1,
        };
        let f = fit_forest(&x, &y, &p, 0);
        for (r, t) in x.iter().zip(&y) {
            assert_eq!(f.predict_raw(r), *t);
        }
    }
}
