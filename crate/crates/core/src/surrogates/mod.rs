//! Regressors mapping encoded hyperparameter configurations to fairness.

mod encode;
pub mod forest;
pub mod gbt;
pub mod mlp;
pub mod regtree;
pub mod svr;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use encode::{encode, EncodedConfig};
pub use forest::{ForestParams, RegressionForest};
pub use gbt::{Gbt, GbtParams};
pub use mlp::{Mlp, MlpParams};
pub use svr::{Svr, SvrParams};

use crate::error::{Error, Result};
use crate::trainers::HpSpace;

pub const SURROGATE_FORMAT: &str = "hpfair-surrogate";
pub const SURROGATE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    Baseline,
    Mlp,
    Svr,
    Forest,
    Gbt,
}

impl SurrogateKind {
    pub const ALL: [SurrogateKind; 5] = [
        SurrogateKind::Baseline,
        SurrogateKind::Mlp,
        SurrogateKind::Svr,
        SurrogateKind::Forest,
        SurrogateKind::Gbt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SurrogateKind::Baseline => "baseline",
            SurrogateKind::Mlp => "mlp",
            SurrogateKind::Svr => "svr",
            SurrogateKind::Forest => "forest",
            SurrogateKind::Gbt => "gbt",
        }
    }

    /// Column label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            SurrogateKind::Baseline => "Baseline",
            SurrogateKind::Mlp => "DNN",
            SurrogateKind::Svr => "SVR",
            SurrogateKind::Forest => "TR",
            SurrogateKind::Gbt => "XGB",
        }
    }
}

impl fmt::Display for SurrogateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SurrogateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SurrogateKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown surrogate kind '{s}'")))
    }
}

/// Overridable constants for every surrogate kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateParams {
    pub mlp: MlpParams,
    pub svr: SvrParams,
    pub forest: ForestParams,
    pub gbt: GbtParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Baseline { mean: f64 },
    Mlp(Mlp),
    Svr(Svr),
    Forest(RegressionForest),
    Gbt(Gbt),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    format: String,
    format_version: u32,
    space_version: String,
    n_features: usize,
    params: SurrogateParams,
    model: Model,
}

impl Surrogate {
    pub fn kind(&self) -> SurrogateKind {
        match self.model {
            Model::Baseline { .. } => SurrogateKind::Baseline,
            Model::Mlp(_) => SurrogateKind::Mlp,
            Model::Svr(_) => SurrogateKind::Svr,
            Model::Forest(_) => SurrogateKind::Forest,
            Model::Gbt(_) => SurrogateKind::Gbt,
        }
    }

    pub fn space_version(&self) -> &str {
        &self.space_version
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Unclamped model output for one encoding.
    pub fn predict_raw(&self, x: &EncodedConfig) -> f64 {
        let row = x.as_slice();
        match &self.model {
            Model::Baseline { mean } => *mean,
            Model::Mlp(m) => m.predict_raw(row),
            Model::Svr(m) => m.predict_raw(row),
            Model::Forest(m) => m.predict_raw(row),
            Model::Gbt(m) => m.predict_raw(row),
        }
    }

    /// Predictions clamped to `[0, 1]`.
    pub fn predict(&self, space: &HpSpace, configs: &[EncodedConfig]) -> Result<Vec<f64>> {
        let tag = space.version_tag();
        if tag != self.space_version {
            return Err(Error::Incompatible(format!(
                "surrogate was fit on space {}, got {tag}",
                self.space_version
            )));
        }
        configs
            .iter()
            .map(|c| {
                if c.len() != self.n_features {
                    return Err(Error::Argument(format!(
                        "encoding has {} components, surrogate expects {}",
                        c.len(),
                        self.n_features
                    )));
                }
                Ok(clamp_unit(self.predict_raw(c)))
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Surrogate = serde_json::from_str(text)?;
        if s.format != SURROGATE_FORMAT || s.format_version != SURROGATE_FORMAT_VERSION {
            return Err(Error::Incompatible(format!(
                "unsupported surrogate format {} v{}",
                s.format, s.format_version
            )));
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

pub fn fit(
    kind: SurrogateKind,
    space: &HpSpace,
    train: &[(EncodedConfig, f64)],
    seed: u64,
) -> Result<Surrogate> {
    fit_with(kind, space, train, seed, &SurrogateParams::default())
}

pub fn fit_with(
    kind: SurrogateKind,
    space: &HpSpace,
    train: &[(EncodedConfig, f64)],
    seed: u64,
    params: &SurrogateParams,
) -> Result<Surrogate> {
    if train.is_empty() {
        return Err(Error::Fit("empty training set".into()));
    }
    let width = space.dims.len();
    for (c, t) in train {
        if c.len() != width {
            return Err(Error::Fit(format!(
                "encoding has {} components, space {} has {width}",
                c.len(),
                space.version_tag()
            )));
        }
        if c.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Fit("non-finite encoding".into()));
        }
        if !(0.0..=1.0).contains(t) {
            return Err(Error::Fit(format!("target {t} outside [0, 1]")));
        }
    }
    let x: Vec<Vec<f64>> = train.iter().map(|(c, _)| c.0.clone()).collect();
    let y: Vec<f64> = train.iter().map(|(_, t)| *t).collect();
    let model = match kind {
        SurrogateKind::Baseline => Model::Baseline {
            mean: y.iter().sum::<f64>() / y.len() as f64,
        },
        SurrogateKind::Mlp => Model::Mlp(mlp::fit_mlp(&x, &y, &params.mlp, seed)?),
        SurrogateKind::Svr => Model::Svr(svr::fit_svr(&x, &y, &params.svr)),
        SurrogateKind::Forest => Model::Forest(forest::fit_forest(&x, &y, &params.forest, seed)),
        SurrogateKind::Gbt => Model::Gbt(gbt::fit_gbt(&x, &y, &params.gbt)),
    };
    Ok(Surrogate {
        format: SURROGATE_FORMAT.into(),
        format_version: SURROGATE_FORMAT_VERSION,
        space_version: space.version_tag(),
        n_features: width,
        params: params.clone(),
        model,
    })
}
