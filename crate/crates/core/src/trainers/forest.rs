use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{ClassificationTree, TreeParams};
use crate::datasets::FeatureMatrix;
use crate::seed;

/// Majority vote over classification trees. Tree `i` is grown with seed
/// `seed + i` on `⌈max_samples·n⌉` rows drawn without replacement; with
/// `max_samples = 1` every tree sees all rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<ClassificationTree>,
}

impl RandomForest {
    pub fn fit(
        x: &FeatureMatrix,
        y: &[u8],
        params: &TreeParams,
        n_estimators: usize,
        max_samples: f64,
        seed: u64,
    ) -> Self {
        let n = x.n_rows();
        let take = ((max_samples * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
        let trees = (0..n_estimators)
            .into_par_iter()
            .map(|i| {
                let rows: Vec<usize> = if take >= n {
                    (0..n).collect()
                } else {
                    let mut rng = seed::derived_rng(seed, "forest-rows", i as u64);
                    let mut r = index::sample(&mut rng, n, take).into_vec();
                    r.sort_unstable();
                    r
                };
                ClassificationTree::fit(x, y, &rows, params, seed.wrapping_add(i as u64))
            })
            .collect();
        RandomForest { trees }
    }

    pub fn trees(&self) -> &[ClassificationTree] {
        &self.trees
    }

    /// Class 1 wins only with a strict majority of votes.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let votes = self.trees.iter().filter(|t| t.predict_row(row) == 1).count();
        u8::from(2 * votes > self.trees.len())
    }
}
