//! CART classification trees for binary labels.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::datasets::FeatureMatrix;
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Splitter {
    Best,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    fn count(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt() as usize,
            MaxFeatures::Log2 => (n_features as f64).log2() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub min_weight_fraction_leaf: f64,
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 64,
            min_samples_split: 2,
            min_samples_leaf: 1,
            min_weight_fraction_leaf: 0.0,
            criterion: Criterion::Gini,
            splitter: Splitter::Best,
            max_features: MaxFeatures::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class: u8,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    nodes: Vec<Node>,
}

fn impurity(criterion: Criterion, n0: f64, n1: f64) -> f64 {
    let n = n0 + n1;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (n0 / n, n1 / n);
    match criterion {
        Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
        Criterion::Entropy => {
            let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
            h(p0) + h(p1)
        }
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    y: &'a [u8],
    params: &'a TreeParams,
    min_leaf: usize,
    rng: Rng,
    nodes: Vec<Node>,
    features: Vec<usize>,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let ones = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let class = u8::from(2 * ones > idx.len());
        self.nodes.push(Node::Leaf {
            class,
            samples: idx.len(),
        });
        self.nodes.len() - 1
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        let ones = idx.iter().filter(|&&i| self.y[i] == 1).count();
        if depth >= self.params.max_depth
            || n < self.params.min_samples_split
            || n < 2 * self.min_leaf
            || ones == 0
            || ones == n
        {
            return self.leaf(idx);
        }
        let Some(choice) = self.best_split(idx, ones) else {
            return self.leaf(idx);
        };

        let mid = partition(idx, |i| self.x.get(i, choice.feature) <= choice.threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: 0,
            samples: n,
        });
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
        };
        slot
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.features.len();
        let k = self.params.max_features.count(p);
        if k >= p {
            return self.features.clone();
        }
        // partial Fisher-Yates
        for i in 0..k {
            let j = self.rng.random_range(i..p);
            self.features.swap(i, j);
        }
        self.features[..k].to_vec()
    }

    fn best_split(&mut self, idx: &[usize], ones: usize) -> Option<SplitChoice> {
        let n = idx.len();
        let total1 = ones as f64;
        let total0 = (n - ones) as f64;
        let criterion = self.params.criterion;
        let parent = impurity(criterion, total0, total1);
        let features = self.candidate_features();
        let mut best: Option<SplitChoice> = None;
        let consider = |feature: usize, threshold: f64, left0: f64, left1: f64, best: &mut Option<SplitChoice>| {
            let nl = left0 + left1;
            let nr = n as f64 - nl;
            let child = (nl * impurity(criterion, left0, left1)
                + nr * impurity(criterion, total0 - left0, total1 - left1))
                / n as f64;
            let score = parent - child;
            if best.as_ref().is_none_or(|b| score > b.score) {
                *best = Some(SplitChoice {
                    feature,
                    threshold,
                    score,
                });
            }
        };

        let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(n);
        for f in features {
            match self.params.splitter {
                Splitter::Best => {
                    sorted.clear();
                    sorted.extend(idx.iter().map(|&i| (self.x.get(i, f), self.y[i])));
                    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let (mut l0, mut l1) = (0.0, 0.0);
                    for pos in 0..n - 1 {
                        if sorted[pos].1 == 1 {
                            l1 += 1.0;
                        } else {
                            l0 += 1.0;
                        }
                        let left = pos + 1;
                        if left < self.min_leaf || n - left < self.min_leaf {
                            continue;
                        }
                        let (a, b) = (sorted[pos].0, sorted[pos + 1].0);
                        if a == b {
                            continue;
                        }
                        let mut t = a + (b - a) / 2.0;
                        if t >= b {
                            t = a;
                        }
                        consider(f, t, l0, l1, &mut best);
                    }
                }
                Splitter::Random => {
                    let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                        let v = self.x.get(i, f);
                        (lo.min(v), hi.max(v))
                    });
                    if lo >= hi {
                        continue;
                    }
                    let mut t = self.rng.random_range(lo..hi);
                    if t >= hi {
                        t = lo;
                    }
                    let (mut l0, mut l1) = (0.0, 0.0);
                    for &i in idx {
                        if self.x.get(i, f) <= t {
                            if self.y[i] == 1 {
                                l1 += 1.0
                            } else {
                                l0 += 1.0
                            }
                        }
                    }
                    let left = (l0 + l1) as usize;
                    if left < self.min_leaf || n - left < self.min_leaf {
                        continue;
                    }
                    consider(f, t, l0, l1, &mut best);
                }
            }
        }
        best.filter(|b| b.score >= -1e-12)
    }
}

/// Moves elements satisfying `pred` to the front; returns their count.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut mid = 0;
    for k in 0..idx.len() {
        if pred(idx[k]) {
            idx.swap(mid, k);
            mid += 1;
        }
    }
    mid
}

impl ClassificationTree {
    /// Fits a tree on the rows `idx` of `x`. Only `seed` drives feature
    /// subsampling and random thresholds.
    pub fn fit(x: &FeatureMatrix, y: &[u8], idx: &[usize], params: &TreeParams, seed: u64) -> Self {
        let n_total = idx.len();
        let weight_leaf = (params.min_weight_fraction_leaf * n_total as f64 - 1e-9).ceil().max(0.0) as usize;
        let mut builder = Builder {
            x,
            y,
            params,
            min_leaf: params.min_samples_leaf.max(weight_leaf).max(1),
            rng: seed::derived_rng(seed, "class-tree", 0),
            nodes: Vec::new(),
            features: (0..x.n_cols()).collect(),
        };
        let mut idx = idx.to_vec();
        builder.build(&mut idx, 0);
        ClassificationTree {
            nodes: builder.nodes,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    k = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match &nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Training-row counts of every leaf.
    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { samples, .. } => Some(*samples),
                Node::Split { .. } => None,
            })
            .collect()
    }
}
