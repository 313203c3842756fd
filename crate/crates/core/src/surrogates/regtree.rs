//! Variance-reduction regression trees shared by the forest and the booster.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` means all.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: &'a RegTreeParams,
    rng: Option<&'a mut Rng>,
    nodes: Vec<Node>,
    features: Vec<usize>,
    scratch: Vec<(f64, f64)>,
}

impl Builder<'_> {
    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        let sum: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let mean = sum / n as f64;
        let pure = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
        let min_leaf = self.params.min_samples_leaf.max(1);
        if pure || depth >= self.params.max_depth || n < 2 * min_leaf {
            self.nodes.push(Node::Leaf(mean));
            return self.nodes.len() - 1;
        }
        let Some((feature, threshold)) = self.best_split(idx, sum, min_leaf) else {
            self.nodes.push(Node::Leaf(mean));
            return self.nodes.len() - 1;
        };
        let mut mid = 0;
        for k in 0..n {
            if self.x[idx[k]][feature] <= threshold {
                idx.swap(mid, k);
                mid += 1;
            }
        }
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf(mean));
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }

    fn candidates(&mut self) -> Vec<usize> {
        let p = self.features.len();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < p => {
                for i in 0..k {
                    let j = rng.random_range(i..p);
                    self.features.swap(i, j);
                }
                self.features[..k.max(1)].to_vec()
            }
            _ => self.features.clone(),
        }
    }

    /// Maximizes `S_L²/n_L + S_R²/n_R`, equivalent to minimizing the summed
    /// squared error of the two children.
    fn best_split(&mut self, idx: &[usize], total: f64, min_leaf: usize) -> Option<(usize, f64)> {
        let n = idx.len();
        let parent = total * total / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for f in self.candidates() {
            self.scratch.clear();
            self.scratch.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for pos in 0..n - 1 {
                left_sum += self.scratch[pos].1;
                let nl = pos + 1;
                if nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let (a, b) = (self.scratch[pos].0, self.scratch[pos + 1].0);
                if a == b {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / (n - nl) as f64 - parent;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    let mut t = a + (b - a) / 2.0;
                    if t >= b {
                        t = a;
                    }
                    best = Some((gain, f, t));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl RegressionTree {
    /// Fits on rows `idx` (repeats allowed, as in a bootstrap sample). `rng`
    /// is only needed when `max_features` subsamples.
    pub fn fit(x: &[Vec<f64>], y: &[f64], idx: &[usize], params: &RegTreeParams, rng: Option<&mut Rng>) -> Self {
        let width = x.first().map_or(0, Vec::len);
        let mut b = Builder {
            x,
            y,
            params,
            rng,
            nodes: Vec::new(),
            features: (0..width).collect(),
            scratch: Vec::with_capacity(idx.len()),
        };
        let mut idx = idx.to_vec();
        if idx.is_empty() {
            return RegressionTree {
                nodes: vec![Node::Leaf(0.0)],
            };
        }
        b.build(&mut idx, 0);
        RegressionTree { nodes: b.nodes }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}
