//! Hyperparameter spaces.
//!
//! Each algorithm has a fixed, versioned list of dimensions. Traces and
//! surrogates record the version string, so changing any range, level list,
//! or order below must bump [`SPACE_VERSION`].
//!
//! Numeric ranges and defaults:
//!
//! | algorithm | dimension | range | scale | default |
//! |---|---|---|---|---|
//! | DT, RF | max_depth | 1..=64 | integer | 64 |
//! | DT, RF | min_samples_split | 2..=100 | integer | 2 |
//! | DT, RF | min_samples_leaf | 1..=50 | integer | 1 |
//! | DT, RF | min_weight_fraction_leaf | [0, 0.5] | linear | 0 |
//! | RF | n_estimators | 1..=100 | integer | 100 |
//! | RF | max_samples | [0.1, 1] | linear | 1 |
//! | LR, SVM, DA | tol | [1e-6, 1e-1] | log | 1e-4 |
//! | LR, SVM | C | [1e-4, 1e4] | log | 1 |
//! | LR, SVM | intercept_scaling | [0.1, 10] | log | 1 |
//! | LR | max_iteration | 10..=1000 | integer | 100 |
//! | LR | l1_ratio | [0, 1] | linear | 0.5 |
//! | DA | reg_param | [0, 1] | linear | 0 |
//!
//! Categorical defaults are the first listed level.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SPACE_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DecisionTree,
    LogisticRegression,
    Svm,
    RandomForest,
    DiscriminantAnalysis,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::DecisionTree,
        Algorithm::LogisticRegression,
        Algorithm::Svm,
        Algorithm::RandomForest,
        Algorithm::DiscriminantAnalysis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::Svm => "svm",
            Algorithm::RandomForest => "random_forest",
            Algorithm::DiscriminantAnalysis => "discriminant_analysis",
        }
    }

    /// Row label used in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::DecisionTree => "Decision Tree",
            Algorithm::LogisticRegression => "Logistic Regression",
            Algorithm::Svm => "SVM",
            Algorithm::RandomForest => "Random Forest",
            Algorithm::DiscriminantAnalysis => "Discriminant Analysis",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown training algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DimKind {
    Numeric {
        lo: f64,
        hi: f64,
        scale: Scale,
        integer: bool,
    },
    Categorical {
        levels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpDimension {
    pub name: String,
    #[serde(flatten)]
    pub kind: DimKind,
}

impl HpDimension {
    fn int(name: &str, lo: f64, hi: f64) -> Self {
        HpDimension {
            name: name.into(),
            kind: DimKind::Numeric {
                lo,
                hi,
                scale: Scale::Linear,
                integer: true,
            },
        }
    }

    fn real(name: &str, lo: f64, hi: f64, scale: Scale) -> Self {
        HpDimension {
            name: name.into(),
            kind: DimKind::Numeric {
                lo,
                hi,
                scale,
                integer: false,
            },
        }
    }

    fn cat(name: &str, levels: &[&str]) -> Self {
        HpDimension {
            name: name.into(),
            kind: DimKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            DimKind::Numeric { lo, hi, scale, .. } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::Argument(format!(
                        "dimension `{}` needs finite lo < hi",
                        self.name
                    )));
                }
                if *scale == Scale::Log && *lo <= 0.0 {
                    return Err(Error::Argument(format!(
                        "log-scaled dimension `{}` needs lo > 0",
                        self.name
                    )));
                }
            }
            DimKind::Categorical { levels } => {
                if levels.len() < 2 {
                    return Err(Error::Argument(format!(
                        "categorical dimension `{}` needs at least two levels",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> HpValue {
        match &self.kind {
            DimKind::Numeric {
                lo,
                hi,
                scale,
                integer,
            } => {
                let v = match (integer, scale) {
                    (true, _) => rng.random_range(*lo as i64..=*hi as i64) as f64,
                    (false, Scale::Linear) => rng.random_range(*lo..=*hi),
                    (false, Scale::Log) => rng.random_range(lo.ln()..=hi.ln()).exp().clamp(*lo, *hi),
                };
                HpValue::Num(v)
            }
            DimKind::Categorical { levels } => HpValue::Cat(rng.random_range(0..levels.len())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HpValue {
    Num(f64),
    Cat(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpConfig {
    pub values: Vec<HpValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpSpace {
    pub algorithm: Algorithm,
    pub version: String,
    pub dims: Vec<HpDimension>,
}

impl HpSpace {
    /// Versioned identifier, e.g. `decision_tree/1`.
    pub fn version_tag(&self) -> String {
        format!("{}/{}", self.algorithm, self.version)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for d in &self.dims {
            d.validate()?;
            if !names.insert(d.name.as_str()) {
                return Err(Error::Argument(format!("duplicate dimension `{}`", d.name)));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    pub fn validate_config(&self, config: &HpConfig) -> Result<()> {
        if config.values.len() != self.dims.len() {
            return Err(Error::Argument(format!(
                "config has {} values for {} dimensions of {}",
                config.values.len(),
                self.dims.len(),
                self.version_tag()
            )));
        }
        for (d, v) in self.dims.iter().zip(&config.values) {
            match (&d.kind, v) {
                (DimKind::Numeric { lo, hi, integer, .. }, HpValue::Num(x)) => {
                    if !(x >= lo && x <= hi) {
                        return Err(Error::Argument(format!(
                            "`{}` = {x} outside [{lo}, {hi}]",
                            d.name
                        )));
                    }
                    if *integer && x.fract() != 0.0 {
                        return Err(Error::Argument(format!("`{}` = {x} must be an integer", d.name)));
                    }
                }
                (DimKind::Categorical { levels }, HpValue::Cat(i)) => {
                    if *i >= levels.len() {
                        return Err(Error::Argument(format!(
                            "`{}` level index {i} out of range",
                            d.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Argument(format!(
                        "`{}` holds a value of the wrong kind",
                        d.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Draws every dimension independently: uniform for linear numeric and
    /// categorical dimensions, log-uniform for log dimensions.
    pub fn sample_uniform<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> HpConfig {
        HpConfig {
            values: self.dims.iter().map(|d| d.sample(rng)).collect(),
        }
    }

    /// Values keyed by dimension name; categorical values as level names.
    pub fn config_to_map(&self, config: &HpConfig) -> Map<String, Value> {
        let mut map = Map::new();
        for (d, v) in self.dims.iter().zip(&config.values) {
            let json = match (&d.kind, v) {
                (DimKind::Categorical { levels }, HpValue::Cat(i)) => Value::String(levels[*i].clone()),
                (DimKind::Numeric { integer: true, .. }, HpValue::Num(x)) => Value::from(*x as i64),
                (_, HpValue::Num(x)) => Value::from(*x),
                (_, HpValue::Cat(i)) => Value::from(*i),
            };
            map.insert(d.name.clone(), json);
        }
        map
    }

    pub fn config_from_map(&self, map: &Map<String, Value>) -> Result<HpConfig> {
        let known: HashMap<&str, ()> = self.dims.iter().map(|d| (d.name.as_str(), ())).collect();
        if let Some(k) = map.keys().find(|k| !known.contains_key(k.as_str())) {
            return Err(Error::Trace(format!(
                "unknown dimension `{k}` for {}",
                self.version_tag()
            )));
        }
        let mut values = Vec::with_capacity(self.dims.len());
        for d in &self.dims {
            let raw = map
                .get(&d.name)
                .ok_or_else(|| Error::Trace(format!("missing dimension `{}`", d.name)))?;
            let v = match &d.kind {
                DimKind::Numeric { .. } => HpValue::Num(raw.as_f64().ok_or_else(|| {
                    Error::Trace(format!("`{}` must be a number, got {raw}", d.name))
                })?),
                DimKind::Categorical { levels } => {
                    let s = raw.as_str().ok_or_else(|| {
                        Error::Trace(format!("`{}` must be a level name, got {raw}", d.name))
                    })?;
                    HpValue::Cat(levels.iter().position(|l| l == s).ok_or_else(|| {
                        Error::Trace(format!("`{}` has no level `{s}`", d.name))
                    })?)
                }
            };
            values.push(v);
        }
        let config = HpConfig { values };
        self.validate_config(&config).map_err(|e| Error::Trace(e.to_string()))?;
        Ok(config)
    }

    /// Name-based read access to a config, for trainers.
    pub fn view<'a>(&'a self, config: &'a HpConfig) -> HpView<'a> {
        HpView { space: self, config }
    }
}

pub struct HpView<'a> {
    space: &'a HpSpace,
    config: &'a HpConfig,
}

impl HpView<'_> {
    fn value(&self, name: &str) -> (&HpDimension, HpValue) {
        let i = self
            .space
            .index_of(name)
            .unwrap_or_else(|| panic!("{} has no dimension `{name}`", self.space.version_tag()));
        (&self.space.dims[i], self.config.values[i])
    }

    pub fn num(&self, name: &str) -> f64 {
        match self.value(name).1 {
            HpValue::Num(x) => x,
            HpValue::Cat(_) => panic!("`{name}` is categorical"),
        }
    }

    pub fn int(&self, name: &str) -> usize {
        self.num(name).round() as usize
    }

    pub fn cat(&self, name: &str) -> &str {
        match self.value(name) {
            (
                HpDimension {
                    kind: DimKind::Categorical { levels },
                    ..
                },
                HpValue::Cat(i),
            ) => &levels[i],
            _ => panic!("`{name}` is numeric"),
        }
    }

    pub fn flag(&self, name: &str) -> bool {
        self.cat(name) == "true"
    }
}

fn tree_dims() -> Vec<HpDimension> {
    vec![
        HpDimension::int("max_depth", 1.0, 64.0),
        HpDimension::int("min_samples_split", 2.0, 100.0),
        HpDimension::int("min_samples_leaf", 1.0, 50.0),
        HpDimension::real("min_weight_fraction_leaf", 0.0, 0.5, Scale::Linear),
    ]
}

fn linear_dims() -> Vec<HpDimension> {
    vec![
        HpDimension::real("tol", 1e-6, 1e-1, Scale::Log),
        HpDimension::real("C", 1e-4, 1e4, Scale::Log),
        HpDimension::real("intercept_scaling", 0.1, 10.0, Scale::Log),
    ]
}

/// The hyperparameter space of `algorithm`.
pub fn hp_space(algorithm: Algorithm) -> HpSpace {
    use HpDimension as D;
    let dims = match algorithm {
        Algorithm::DecisionTree => {
            let mut d = tree_dims();
            d.extend([
                D::cat("criterion", &["gini", "entropy"]),
                D::cat("splitter", &["best", "random"]),
                D::cat("max_features", &["none", "sqrt", "log2"]),
            ]);
            d
        }
        Algorithm::LogisticRegression => {
            let mut d = linear_dims();
            d.extend([
                D::int("max_iteration", 10.0, 1000.0),
                D::real("l1_ratio", 0.0, 1.0, Scale::Linear),
                D::cat("solver", &["lbfgs", "liblinear", "newton-cg", "sag", "saga"]),
                D::cat("penalty", &["l2", "l1", "elasticnet", "none"]),
                D::cat("dual_prime", &["false", "true"]),
                D::cat("fit_intercept", &["true", "false"]),
                D::cat("multi_class", &["auto", "ovr", "multinomial"]),
            ]);
            d
        }
        Algorithm::Svm => {
            let mut d = linear_dims();
            d.extend([
                D::cat("penalty", &["l2", "l1"]),
                D::cat("loss", &["squared_hinge", "hinge"]),
                D::cat("degree", &["3", "1", "2", "4", "5"]),
                D::cat("fit_intercept", &["true", "false"]),
                D::cat("class_weight", &["none", "balanced"]),
            ]);
            d
        }
        Algorithm::RandomForest => {
            let mut d = tree_dims();
            d.extend([
                D::int("n_estimators", 1.0, 100.0),
                D::real("max_samples", 0.1, 1.0, Scale::Linear),
                D::cat("criterion", &["gini", "entropy"]),
                D::cat("max_features", &["sqrt", "log2", "none"]),
                D::cat("oob_score", &["false", "true"]),
                D::cat("warm_start", &["false", "true"]),
            ]);
            d
        }
        Algorithm::DiscriminantAnalysis => vec![
            D::real("tol", 1e-6, 1e-1, Scale::Log),
            D::real("reg_param", 0.0, 1.0, Scale::Linear),
            D::cat("linear(0)_quadratic(1)", &["linear", "quadratic"]),
            D::cat("solve_Linear", &["svd", "lsqr", "eigen"]),
            D::cat("Shrinkage_Linear", &["none", "0.1", "0.5", "0.9"]),
            D::cat("component", &["none", "1"]),
            D::cat("store_covariance", &["false", "true"]),
            D::cat("type_dataset", &["dense", "sparse"]),
        ],
    };
    HpSpace {
        algorithm,
        version: SPACE_VERSION.to_string(),
        dims,
    }
}

/// Looks an algorithm up by its identifier and returns its space.
pub fn hp_space_named(name: &str) -> Result<HpSpace> {
    Ok(hp_space(name.parse()?))
}

fn numeric_default(algorithm: Algorithm, name: &str) -> f64 {
    match (algorithm, name) {
        (_, "max_depth") => 64.0,
        (_, "min_samples_split") => 2.0,
        (_, "min_samples_leaf") => 1.0,
        (_, "min_weight_fraction_leaf") => 0.0,
        (_, "n_estimators") => 100.0,
        (_, "max_samples") => 1.0,
        (_, "tol") => 1e-4,
        (_, "C") => 1.0,
        (_, "intercept_scaling") => 1.0,
        (_, "max_iteration") => 100.0,
        (_, "l1_ratio") => 0.5,
        (_, "reg_param") => 0.0,
        _ => unreachable!("no default for {algorithm}/{name}"),
    }
}

/// Fixed starting point of every search; see the module table.
pub fn default_config(space: &HpSpace) -> HpConfig {
    HpConfig {
        values: space
            .dims
            .iter()
            .map(|d| match d.kind {
                DimKind::Numeric { .. } => HpValue::Num(numeric_default(space.algorithm, &d.name)),
                DimKind::Categorical { .. } => HpValue::Cat(0),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn names(space: &HpSpace) -> Vec<&str> {
        space.dims.iter().map(|d| d.name.as_str()).collect()
    }

    #[test]
    fn decision_tree_dimensions() {
        let s = hp_space(Algorithm::DecisionTree);
        for n in [
            "max_depth",
            "min_samples_split",
            "min_samples_leaf",
            "min_weight_fraction_leaf",
            "criterion",
            "splitter",
            "max_features",
        ] {
            assert!(names(&s).contains(&n), "missing {n}");
        }
    }

    #[test]
    fn discriminant_analysis_dimensions() {
        let s = hp_space(Algorithm::DiscriminantAnalysis);
        for n in ["tol", "reg_param", "linear(0)_quadratic(1)"] {
            assert!(names(&s).contains(&n), "missing {n}");
        }
    }

    #[test]
    fn unknown_algorithm_is_rejected() {
        assert!(matches!(hp_space_named("knn"), Err(Error::Argument(_))));
        assert_eq!(hp_space_named("svm").unwrap().algorithm, Algorithm::Svm);
    }

    #[test]
    fn documented_defaults() {
        let dt = hp_space(Algorithm::DecisionTree);
        let c = default_config(&dt);
        assert_eq!(dt.view(&c).cat("criterion"), "gini");
        assert_eq!(dt.view(&c).cat("splitter"), "best");
        assert_eq!(dt.view(&c).int("max_depth"), 64);
        let lr = hp_space(Algorithm::LogisticRegression);
        let c = default_config(&lr);
        assert_eq!(lr.view(&c).num("C"), 1.0);
        assert_eq!(lr.view(&c).cat("penalty"), "l2");
    }

    #[test]
    fn every_space_is_valid_and_accepts_its_default() {
        for a in Algorithm::ALL {
            let s = hp_space(a);
            s.validate().unwrap();
            s.validate_config(&default_config(&s)).unwrap();
        }
    }

    #[test]
    fn uniform_samples_validate_and_round_trip_through_json() {
        let mut rng = seed::rng(4);
        for a in Algorithm::ALL {
            let s = hp_space(a);
            for _ in 0..200 {
                let c = s.sample_uniform(&mut rng);
                s.validate_config(&c).unwrap();
                let back = s.config_from_map(&s.config_to_map(&c)).unwrap();
                assert_eq!(back, c);
            }
        }
    }

    #[test]
    fn map_with_unknown_dimension_is_rejected() {
        let s = hp_space(Algorithm::DecisionTree);
        let mut m = s.config_to_map(&default_config(&s));
        m.insert("learning_rate".into(), Value::from(0.1));
        assert!(s.config_from_map(&m).is_err());
    }

    #[test]
    fn out_of_range_values_fail_validation() {
        let s = hp_space(Algorithm::DecisionTree);
        let mut c = default_config(&s);
        c.values[0] = HpValue::Num(65.0);
        assert!(s.validate_config(&c).is_err());
        c.values[0] = HpValue::Num(3.5);
        assert!(s.validate_config(&c).is_err());
        c.values[0] = HpValue::Cat(0);
        assert!(s.validate_config(&c).is_err());
    }
}
