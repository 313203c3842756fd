//! Scoring surrogates: repeated held-out evaluation, the shift study, best
//! marking, and report rendering.

mod metrics;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{mean_std, r2, relative_rmse};
pub use report::{Buckets, EvalReport, REPORT_FORMAT_VERSION};

use crate::datasets::split_indices;
use crate::error::{Error, Result};
use crate::seed;
use crate::surrogates::{self, encode, EncodedConfig, SurrogateKind, SurrogateParams};
use crate::tracegen::{FairnessRecord, FairnessTrace};
use crate::trainers::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Aod,
    Eod,
}

impl Target {
    pub fn value(self, record: &FairnessRecord) -> f64 {
        match self {
            Target::Aod => record.aod,
            Target::Eod => record.eod,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Aod => "aod",
            Target::Eod => "eod",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aod" => Ok(Target::Aod),
            "eod" => Ok(Target::Eod),
            other => Err(Error::Argument(format!("unknown target '{other}', expected aod or eod"))),
        }
    }
}

/// Which standard deviation the two-sigma best-marking rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaRule {
    /// The best cell's own deviation.
    #[default]
    Best,
    /// `sqrt((σ_best² + σ_other²) / 2)` per comparison.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    pub repeats: usize,
    pub train_fraction: f64,
    pub target: Target,
    pub base_seed: u64,
    pub sigma_rule: SigmaRule,
    pub surrogate_params: SurrogateParams,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            repeats: 10,
            train_fraction: 0.8,
            target: Target::Aod,
            base_seed: 0,
            sigma_rule: SigmaRule::Best,
            surrogate_params: SurrogateParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

/// Mean and population standard deviation of both metrics over repeats.
/// A metric is `None` when it was undefined in every repeat; repeats where
/// it was undefined are left out and noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub rel_rmse: Option<Stat>,
    pub r2: Option<Stat>,
    pub nv: bool,
    pub repeats: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MetricSummary {
    pub fn from_repeats(rel_rmse: &[Option<f64>], r2: &[Option<f64>]) -> Self {
        let mut notes = Vec::new();
        let mut summarize = |vals: &[Option<f64>], name: &str| {
            let defined: Vec<f64> = vals.iter().flatten().copied().collect();
            let missing = vals.len() - defined.len();
            if missing > 0 {
                notes.push(format!("{name} undefined in {missing} of {} repeats", vals.len()));
            }
            (!defined.is_empty()).then(|| {
                let (mean, std) = mean_std(&defined);
                Stat { mean, std }
            })
        };
        let rel = summarize(rel_rmse, "relative RMSE");
        let r2s = summarize(r2, "R2");
        MetricSummary {
            rel_rmse: rel,
            nv: r2s.is_none_or(|s| s.mean <= 0.0),
            r2: r2s,
            repeats: r2.len(),
            notes,
        }
    }

    pub fn r2_mean(&self) -> Option<f64> {
        self.r2.map(|s| s.mean)
    }
}

/// One benchmark row: a trace (or a base/shifted trace pair) scored by
/// every requested surrogate kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub algorithm: Algorithm,
    pub dataset: String,
    pub release: String,
    /// Release the surrogates were trained on, when it differs from the
    /// release they were scored on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_release: Option<String>,
    pub protected: String,
    pub target: Target,
    pub cells: BTreeMap<SurrogateKind, MetricSummary>,
    pub best: Vec<SurrogateKind>,
}

fn encoded(trace: &FairnessTrace, target: Target) -> Result<Vec<(EncodedConfig, f64)>> {
    trace
        .records
        .iter()
        .map(|r| Ok((encode(&r.config, &trace.space)?, target.value(r))))
        .collect()
}

type RepeatScores = Vec<(Option<f64>, Option<f64>)>;

fn score_repeats(
    trace: &FairnessTrace,
    data: &[(EncodedConfig, f64)],
    kinds: &[SurrogateKind],
    settings: &EvalSettings,
    test_data: Option<&[(EncodedConfig, f64)]>,
) -> Result<BTreeMap<SurrogateKind, MetricSummary>> {
    if kinds.is_empty() {
        return Err(Error::Evaluation("no surrogate kinds requested".into()));
    }
    if settings.repeats == 0 {
        return Err(Error::Evaluation("repeats must be positive".into()));
    }
    let mut splits = Vec::with_capacity(settings.repeats);
    for r in 0..settings.repeats {
        let (train, test) = split_indices(data.len(), settings.train_fraction, settings.base_seed + r as u64)?;
        if test_data.is_none() && test.len() < 2 {
            return Err(Error::Evaluation(format!(
                "repeat {r} leaves {} test records; the trace needs more records",
                test.len()
            )));
        }
        splits.push((train, test));
    }
    let jobs: Vec<(usize, SurrogateKind)> =
        (0..settings.repeats).flat_map(|r| kinds.iter().map(move |k| (r, *k))).collect();
    let scored: Vec<(Option<f64>, Option<f64>)> = jobs
        .par_iter()
        .map(|&(r, kind)| {
            let (train_idx, test_idx) = &splits[r];
            let train: Vec<(EncodedConfig, f64)> = train_idx.iter().map(|&i| data[i].clone()).collect();
            let test: Vec<(EncodedConfig, f64)> = match test_data {
                Some(t) => t.to_vec(),
                None => test_idx.iter().map(|&i| data[i].clone()).collect(),
            };
            let fit_seed = seed::derive(settings.base_seed, "surrogate-fit", r as u64);
            let s = surrogates::fit_with(kind, &trace.space, &train, fit_seed, &settings.surrogate_params)?;
            let xs: Vec<EncodedConfig> = test.iter().map(|t| t.0.clone()).collect();
            let truth: Vec<f64> = test.iter().map(|t| t.1).collect();
            let pred = s.predict(&trace.space, &xs)?;
            Ok((relative_rmse(&truth, &pred)?, r2(&truth, &pred)?))
        })
        .collect::<Result<_>>()?;
    let mut per_kind: BTreeMap<SurrogateKind, RepeatScores> = BTreeMap::new();
    for (&(_, kind), s) in jobs.iter().zip(scored) {
        per_kind.entry(kind).or_default().push(s);
    }
    Ok(per_kind
        .into_iter()
        .map(|(k, v)| {
            let rel: Vec<Option<f64>> = v.iter().map(|s| s.0).collect();
            let r2s: Vec<Option<f64>> = v.iter().map(|s| s.1).collect();
            (k, MetricSummary::from_repeats(&rel, &r2s))
        })
        .collect())
}

/// Repeated held-out evaluation on one trace: each repeat `r` splits the
/// records with seed `base_seed + r`, fits every kind on the training part,
/// and scores it on the rest.
pub fn run_benchmark(trace: &FairnessTrace, kinds: &[SurrogateKind], settings: &EvalSettings) -> Result<EvalRow> {
    if trace.records.len() < 10 {
        return Err(Error::Evaluation(format!(
            "trace has {} records, at least 10 are needed",
            trace.records.len()
        )));
    }
    let data = encoded(trace, settings.target)?;
    let cells = score_repeats(trace, &data, kinds, settings, None)?;
    let best = mark_best(&cells, settings.sigma_rule);
    Ok(EvalRow {
        algorithm: trace.algorithm,
        dataset: trace.dataset_id.clone(),
        release: trace.release.clone(),
        train_release: None,
        protected: trace.protected.clone(),
        target: settings.target,
        cells,
        best,
    })
}

/// Trains on a seeded `train_fraction` subsample of `base` per repeat and
/// scores on every record of `shifted`.
pub fn shift_eval(
    base: &FairnessTrace,
    shifted: &FairnessTrace,
    kinds: &[SurrogateKind],
    settings: &EvalSettings,
) -> Result<EvalRow> {
    if base.space.version_tag() != shifted.space.version_tag() || base.space != shifted.space {
        return Err(Error::Incompatible(format!(
            "space {} does not match {}",
            base.space.version_tag(),
            shifted.space.version_tag()
        )));
    }
    if base.algorithm != shifted.algorithm || base.protected != shifted.protected {
        return Err(Error::Incompatible(format!(
            "shift pair mixes {}/{} with {}/{}",
            base.algorithm, base.protected, shifted.algorithm, shifted.protected
        )));
    }
    if base.records.len() < 2 || shifted.records.len() < 2 {
        return Err(Error::Evaluation("shift evaluation needs at least 2 records per trace".into()));
    }
    let data = encoded(base, settings.target)?;
    let test = encoded(shifted, settings.target)?;
    let cells = score_repeats(base, &data, kinds, settings, Some(&test))?;
    let best = mark_best(&cells, settings.sigma_rule);
    Ok(EvalRow {
        algorithm: shifted.algorithm,
        dataset: shifted.dataset_id.clone(),
        release: shifted.release.clone(),
        train_release: Some(base.release.clone()),
        protected: shifted.protected.clone(),
        target: settings.target,
        cells,
        best,
    })
}

/// The kind with the highest mean R² plus every kind within two standard
/// deviations of it. NV cells and the baseline do not compete.
pub fn mark_best(cells: &BTreeMap<SurrogateKind, MetricSummary>, rule: SigmaRule) -> Vec<SurrogateKind> {
    let candidates: Vec<(SurrogateKind, Stat)> = cells
        .iter()
        .filter(|(k, c)| **k != SurrogateKind::Baseline && !c.nv)
        .filter_map(|(k, c)| c.r2.map(|s| (*k, s)))
        .collect();
    let Some(top) = candidates.iter().map(|c| c.1.mean).max_by(f64::total_cmp) else {
        return Vec::new();
    };
    let top_std = candidates
        .iter()
        .filter(|c| c.1.mean == top)
        .map(|c| c.1.std)
        .fold(0.0, f64::max);
    candidates
        .into_iter()
        .filter(|(_, s)| {
            let sigma = match rule {
                SigmaRule::Best => top_std,
                SigmaRule::Pooled => ((top_std * top_std + s.std * s.std) / 2.0).sqrt(),
            };
            top - s.mean <= 2.0 * sigma
        })
        .map(|c| c.0)
        .collect()
}
