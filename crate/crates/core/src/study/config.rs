use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::{DatasetSchema, SynthSpec};
use crate::error::{Error, Result};
use crate::evaluation::{EvalSettings, SigmaRule, Target};
use crate::seed;
use crate::surrogates::{SurrogateKind, SurrogateParams};
use crate::tracegen::SearchSettings;
use crate::trainers::Algorithm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Synth(SynthSpec),
    Csv { path: PathBuf, schema: PathBuf },
    /// A new draw of an earlier synthetic release with the given drift.
    Shift { from: String, drift: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub id: String,
    pub release: String,
    /// Optional check against the protected attribute the data declares.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protected: Option<String>,
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TracegenConfig {
    pub budget: usize,
    pub acc_degrade: f64,
    /// Overrides the seed derived from the study seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub search: SearchSettings,
}

impl Default for TracegenConfig {
    fn default() -> Self {
        TracegenConfig {
            budget: 300,
            acc_degrade: 0.05,
            seed: None,
            search: SearchSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateConfig {
    pub kinds: Vec<SurrogateKind>,
    pub params: SurrogateParams,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            kinds: SurrogateKind::ALL.to_vec(),
            params: SurrogateParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub repeats: usize,
    pub train_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    pub sigma_rule: SigmaRule,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            repeats: 10,
            train_fraction: 0.8,
            base_seed: None,
            sigma_rule: SigmaRule::Best,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftPair {
    pub dataset: String,
    pub base: String,
    pub shifted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub datasets: Vec<DatasetEntry>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub target: Target,
    #[serde(default)]
    pub tracegen: TracegenConfig,
    #[serde(default)]
    pub surrogates: SurrogateConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub shift_pairs: Vec<ShiftPair>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn file_safe(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) && s != "." && s != ".."
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Replaces the study seed and drops per-stage seed overrides so every
    /// stream follows the new seed.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.tracegen.seed = None;
        self.evaluation.base_seed = None;
    }

    pub fn tracegen_seed(&self) -> u64 {
        self.tracegen.seed.unwrap_or_else(|| seed::derive(self.seed, "tracegen", 0))
    }

    pub fn eval_seed(&self) -> u64 {
        self.evaluation.base_seed.unwrap_or_else(|| seed::derive(self.seed, "evaluation", 0))
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings {
            repeats: self.evaluation.repeats,
            train_fraction: self.evaluation.train_fraction,
            target: self.target,
            base_seed: self.eval_seed(),
            sigma_rule: self.evaluation.sigma_rule,
            surrogate_params: self.surrogates.params.clone(),
        }
    }

    pub fn entry(&self, id: &str, release: &str) -> Option<&DatasetEntry> {
        self.datasets.iter().find(|d| d.id == id && d.release == release)
    }

    /// Every problem with the config. Relative paths resolve against
    /// `base_dir`.
    pub fn problems(&self, base_dir: &Path) -> Vec<String> {
        let mut out = Vec::new();
        if self.datasets.is_empty() {
            out.push("no datasets declared".to_string());
        }
        let mut seen = HashSet::new();
        for (i, d) in self.datasets.iter().enumerate() {
            let at = format!("datasets[{i}] ({}/{})", d.id, d.release);
            if !file_safe(&d.id) || !file_safe(&d.release) {
                out.push(format!("{at}: id and release may only use letters, digits, '-', '_' and '.'"));
            }
            if !seen.insert((d.id.as_str(), d.release.as_str())) {
                out.push(format!("{at}: declared twice"));
            }
            match &d.source {
                DatasetSource::Synth(spec) => {
                    if let Err(e) = spec.validate() {
                        out.push(format!("{at}: {e}"));
                    }
                    if d.protected.as_deref().is_some_and(|p| p != "group") {
                        out.push(format!("{at}: synthetic data protects `group`"));
                    }
                }
                DatasetSource::Csv { path, schema } => {
                    if !base_dir.join(path).is_file() {
                        out.push(format!("{at}: data file `{}` not found", base_dir.join(path).display()));
                    }
                    match DatasetSchema::from_json_file(&base_dir.join(schema)) {
                        Ok(s) => {
                            if let Some(p) = d.protected.as_deref().filter(|p| *p != s.protected.column) {
                                out.push(format!("{at}: protected `{p}` but the schema protects `{}`", s.protected.column));
                            }
                        }
                        Err(e) => out.push(format!("{at}: schema: {e}")),
                    }
                }
                DatasetSource::Shift { from, drift } => {
                    let earlier = self.datasets[..i].iter().find(|e| e.id == d.id && &e.release == from);
                    match earlier {
                        None => out.push(format!("{at}: shifts from release `{from}`, which is not declared before it")),
                        Some(e) if matches!(e.source, DatasetSource::Csv { .. }) => {
                            out.push(format!("{at}: only synthetic releases can be re-drawn with drift"))
                        }
                        Some(_) => {}
                    }
                    if !(drift.is_finite() && *drift >= 0.0) {
                        out.push(format!("{at}: drift must be finite and ≥ 0"));
                    }
                }
            }
        }
        if self.algorithms.is_empty() {
            out.push("no algorithms declared".into());
        }
        if self.algorithms.iter().collect::<BTreeSet<_>>().len() != self.algorithms.len() {
            out.push("algorithms contain duplicates".into());
        }
        let t = &self.tracegen;
        if t.search.population == 0 || t.budget < t.search.population {
            out.push(format!("tracegen.budget {} is below the population size {}", t.budget, t.search.population));
        }
        if !(0.0..=1.0).contains(&t.acc_degrade) {
            out.push(format!("tracegen.acc_degrade {} outside [0, 1]", t.acc_degrade));
        }
        if t.search.tournament == 0 {
            out.push("tracegen.search.tournament must be positive".into());
        }
        if !(t.search.classifier_train_fraction > 0.0 && t.search.classifier_train_fraction < 1.0) {
            out.push("tracegen.search.classifier_train_fraction outside (0, 1)".into());
        }
        if self.surrogates.kinds.is_empty() {
            out.push("no surrogate kinds declared".into());
        }
        if self.surrogates.kinds.iter().collect::<BTreeSet<_>>().len() != self.surrogates.kinds.len() {
            out.push("surrogate kinds contain duplicates".into());
        }
        if self.evaluation.repeats < 2 {
            out.push(format!("evaluation.repeats is {}, at least 2 are needed", self.evaluation.repeats));
        }
        let f = self.evaluation.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            out.push(format!("evaluation.train_fraction {f} outside (0, 1)"));
        }
        for (i, p) in self.shift_pairs.iter().enumerate() {
            for rel in [&p.base, &p.shifted] {
                if self.entry(&p.dataset, rel).is_none() {
                    out.push(format!("shift_pairs[{i}]: release `{}/{rel}` is not declared", p.dataset));
                }
            }
            if p.base == p.shifted {
                out.push(format!("shift_pairs[{i}]: base and shifted release are the same"));
            }
        }
        out
    }

    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        let problems = self.problems(base_dir);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("\n")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal() -> StudyConfig {
        StudyConfig::from_json(
            r#"{
                "datasets": [
                    {"id": "syn", "release": "base", "source": {"synth": {"n_rows": 300, "seed": 1}}},
                    {"id": "syn", "release": "drift", "source": {"shift": {"from": "base", "drift": 1.0}}}
                ],
                "algorithms": ["decision_tree"],
                "shift_pairs": [{"dataset": "syn", "base": "base", "shifted": "drift"}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = minimal();
        assert_eq!(c.tracegen.budget, 300);
        assert_eq!(c.evaluation.repeats, 10);
        assert_eq!(c.surrogates.kinds.len(), 5);
        assert!(c.problems(Path::new(".")).is_empty(), "{:?}", c.problems(Path::new(".")));
    }

    #[test]
    fn all_problems_are_listed() {
        let mut c = minimal();
        c.shift_pairs[0].shifted = "2099".into();
        c.evaluation.repeats = 1;
        c.algorithms.clear();
        let p = c.problems(Path::new("."));
        assert_eq!(p.len(), 3, "{p:?}");
        assert!(p.iter().any(|m| m.contains("syn/2099")));
        assert!(c.validate(Path::new(".")).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(StudyConfig::from_json(r#"{"datasets": [], "algorithms": [], "bogus": 1}"#).is_err());
    }

    #[test]
    fn reseeding_drops_overrides() {
        let mut c = minimal();
        c.tracegen.seed = Some(5);
        let before = c.tracegen_seed();
        c.reseed(9);
        assert_ne!(c.tracegen_seed(), before);
        assert_eq!(c.tracegen_seed(), seed::derive(9, "tracegen", 0));
    }
}
