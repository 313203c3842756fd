//! The five classifiers whose hyperparameters are studied.
//!
//! [`train`] maps an [`HpConfig`] onto each trainer's parameters. Some
//! categorical dimensions name library mechanics that have no counterpart
//! here and are accepted but inert:
//!
//! * logistic regression: `dual_prime`, `multi_class`, and every `solver`
//!   except `liblinear`, which switches to a regularized intercept scaled by
//!   `intercept_scaling` (otherwise the intercept is unregularized and
//!   `intercept_scaling` is inert);
//! * SVM: `degree` (linear kernel only);
//! * random forest: `oob_score`, `warm_start`;
//! * discriminant analysis: `component`, `store_covariance`,
//!   `type_dataset`; `Shrinkage_Linear` only acts with the `lsqr` or `eigen`
//!   solver, `reg_param` only in quadratic mode.

mod discriminant;
mod forest;
pub mod linear;
mod space;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::datasets::{FeatureMatrix, TabularDataset};
use crate::error::{Error, Result};

pub use discriminant::{DaParams, DiscriminantModel};
pub use forest::RandomForest;
pub use linear::LinearModel;
pub use space::{
    default_config, hp_space, hp_space_named, Algorithm, DimKind, HpConfig, HpDimension, HpSpace,
    HpValue, HpView, Scale, SPACE_VERSION,
};
pub use tree::{ClassificationTree, TreeParams};

use linear::{HingeLoss, Intercept, LogisticParams, Penalty, SvmParams};
use tree::{Criterion, MaxFeatures, Splitter};

/// Iteration cap of the linear SVM, which has no `max_iteration` dimension.
pub const SVM_MAX_ITER: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Learned {
    Tree(ClassificationTree),
    Forest(RandomForest),
    Linear(LinearModel),
    Discriminant(DiscriminantModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub algorithm: Algorithm,
    pub learned: Learned,
    pub meta: TrainingMeta,
    n_features: usize,
}

pub(crate) fn tree_params(v: &HpView<'_>, max_features: &str) -> TreeParams {
    TreeParams {
        max_depth: v.int("max_depth"),
        min_samples_split: v.int("min_samples_split"),
        min_samples_leaf: v.int("min_samples_leaf"),
        min_weight_fraction_leaf: v.num("min_weight_fraction_leaf"),
        criterion: match v.cat("criterion") {
            "entropy" => Criterion::Entropy,
            _ => Criterion::Gini,
        },
        splitter: Splitter::Best,
        max_features: match max_features {
            "sqrt" => MaxFeatures::Sqrt,
            "log2" => MaxFeatures::Log2,
            _ => MaxFeatures::All,
        },
    }
}

fn penalty(name: &str) -> Penalty {
    match name {
        "l1" => Penalty::L1,
        "elasticnet" => Penalty::ElasticNet,
        "none" => Penalty::None,
        _ => Penalty::L2,
    }
}

/// Trains `algorithm` with `config` on `data`. Deterministic in its inputs.
pub fn train(algorithm: Algorithm, config: &HpConfig, data: &TabularDataset, seed: u64) -> Result<TrainedModel> {
    let space = hp_space(algorithm);
    space.validate_config(config)?;
    if !data.has_both_labels() {
        return Err(Error::Training(format!(
            "{algorithm} needs both label classes in the training data"
        )));
    }
    let v = space.view(config);
    let x = data.rows();
    let y = data.labels();
    let all: Vec<usize> = (0..data.len()).collect();
    let mut meta = TrainingMeta {
        seed,
        iterations: 0,
        converged: true,
    };

    let learned = match algorithm {
        Algorithm::DecisionTree => {
            let mut p = tree_params(&v, v.cat("max_features"));
            if v.cat("splitter") == "random" {
                p.splitter = Splitter::Random;
            }
            Learned::Tree(ClassificationTree::fit(x, y, &all, &p, seed))
        }
        Algorithm::RandomForest => {
            let p = tree_params(&v, v.cat("max_features"));
            Learned::Forest(RandomForest::fit(
                x,
                y,
                &p,
                v.int("n_estimators"),
                v.num("max_samples"),
                seed,
            ))
        }
        Algorithm::LogisticRegression => {
            let intercept = match (v.flag("fit_intercept"), v.cat("solver")) {
                (false, _) => Intercept::Off,
                (true, "liblinear") => Intercept::Penalized(v.num("intercept_scaling")),
                (true, _) => Intercept::Free,
            };
            let f = linear::fit_logistic(
                x,
                y,
                &LogisticParams {
                    c: v.num("C"),
                    tol: v.num("tol"),
                    max_iter: v.int("max_iteration"),
                    penalty: penalty(v.cat("penalty")),
                    l1_ratio: v.num("l1_ratio"),
                    intercept,
                },
            );
            meta.iterations = f.iterations;
            meta.converged = f.converged;
            Learned::Linear(f.model)
        }
        Algorithm::Svm => {
            let f = linear::fit_svm(
                x,
                y,
                &SvmParams {
                    c: v.num("C"),
                    tol: v.num("tol"),
                    max_iter: SVM_MAX_ITER,
                    penalty: penalty(v.cat("penalty")),
                    loss: match v.cat("loss") {
                        "hinge" => HingeLoss::Hinge,
                        _ => HingeLoss::SquaredHinge,
                    },
                    intercept: if v.flag("fit_intercept") {
                        Intercept::Penalized(v.num("intercept_scaling"))
                    } else {
                        Intercept::Off
                    },
                    balanced: v.cat("class_weight") == "balanced",
                },
            );
            meta.iterations = f.iterations;
            meta.converged = f.converged;
            Learned::Linear(f.model)
        }
        Algorithm::DiscriminantAnalysis => {
            let quadratic = v.cat("linear(0)_quadratic(1)") == "quadratic";
            let shrinkage = match (v.cat("solve_Linear"), v.cat("Shrinkage_Linear")) {
                ("svd", _) | (_, "none") => None,
                (_, s) => Some(s.parse::<f64>().expect("shrinkage levels are numeric")),
            };
            Learned::Discriminant(discriminant::fit(
                x,
                y,
                &DaParams {
                    quadratic,
                    reg_param: v.num("reg_param"),
                    shrinkage,
                    tol: v.num("tol"),
                },
            )?)
        }
    };

    Ok(TrainedModel {
        algorithm,
        learned,
        meta,
        n_features: data.n_features(),
    })
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        match &self.learned {
            Learned::Tree(t) => t.predict_row(row),
            Learned::Forest(f) => f.predict_row(row),
            Learned::Linear(m) => m.predict_row(row),
            Learned::Discriminant(m) => m.predict_row(row),
        }
    }

    /// Predicted labels for every row of `rows`.
    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<u8>> {
        if rows.n_rows() == 0 {
            return Ok(Vec::new());
        }
        if rows.n_cols() != self.n_features {
            return Err(Error::Argument(format!(
                "model expects {} columns, got {}",
                self.n_features,
                rows.n_cols()
            )));
        }
        Ok(rows.rows().map(|r| self.predict_row(r)).collect())
    }
}

/// Free-function form of [`TrainedModel::predict`].
pub fn predict(model: &TrainedModel, rows: &FeatureMatrix) -> Result<Vec<u8>> {
    model.predict(rows)
}
