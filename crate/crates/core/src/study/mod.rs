//! End-to-end studies: datasets → traces → surrogates → evaluation → report.
//!
//! Output layout under the study's output directory:
//!
//! ```text
//! datasets/<id>__<release>.json             dataset metadata
//! traces/<id>__<release>__<alg>.jsonl        fairness traces
//! surrogates/<id>__<release>__<alg>__<kind>.json
//! eval/benchmark.json                        in-distribution EvalReport
//! eval/shift.json                            shift-study EvalReport
//! report.json, report.md                     merged report
//! manifest.json                              hashes, seeds, versions
//! ```

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{
    DatasetEntry, DatasetSource, EvaluationConfig, ShiftPair, StudyConfig, SurrogateConfig, TracegenConfig,
};
pub use manifest::{sha256_file, Failure, FileEntry, Manifest, MANIFEST_FILE};

use crate::datasets::{load_csv, synth_generate, synth_shift, DatasetSchema, TabularDataset};
use crate::error::{Error, Result};
use crate::evaluation::{run_benchmark, shift_eval, EvalReport, EvalRow};
use crate::seed;
use crate::surrogates::{self, encode, EncodedConfig};
use crate::tracegen::{read_trace, run_search, write_trace, FairnessTrace};
use crate::trainers::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Trace,
    Fit,
    Eval,
    Shift,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Trace, Stage::Fit, Stage::Eval, Stage::Shift, Stage::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Trace => "trace",
            Stage::Fit => "fit",
            Stage::Eval => "eval",
            Stage::Shift => "shift",
            Stage::Report => "report",
        }
    }
}

/// What a stage did, for the caller to report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageSummary {
    pub written: Vec<String>,
    pub cache_hits: Vec<String>,
    pub failures: Vec<Failure>,
}

pub struct Study {
    config: StudyConfig,
    base_dir: PathBuf,
    out: PathBuf,
    force: bool,
}

fn trace_name(id: &str, release: &str, alg: Algorithm) -> String {
    format!("traces/{id}__{release}__{alg}.jsonl")
}

pub const BENCHMARK_FILE: &str = "eval/benchmark.json";
pub const SHIFT_FILE: &str = "eval/shift.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";

impl Study {
    /// Validates the config; relative paths in it resolve against
    /// `base_dir`, and `out` overrides its output directory when given.
    pub fn new(config: StudyConfig, base_dir: &Path, out: Option<PathBuf>, force: bool) -> Result<Self> {
        config.validate(base_dir)?;
        let out = out.unwrap_or_else(|| base_dir.join(&config.output_dir));
        Ok(Study {
            config,
            base_dir: base_dir.to_path_buf(),
            out,
            force,
        })
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn load_manifest(&self) -> Result<Manifest> {
        let mut m = match Manifest::load(&self.path(MANIFEST_FILE)) {
            Ok(m) => m,
            Err(Error::MissingInput(_)) => Manifest::default(),
            Err(e) => return Err(e),
        };
        m.refresh(&self.config)?;
        Ok(m)
    }

    fn write(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
    }

    /// Builds every declared dataset in declaration order.
    pub fn datasets(&self) -> Vec<(usize, Result<TabularDataset>)> {
        let mut built: Vec<Option<TabularDataset>> = Vec::new();
        let mut out = Vec::new();
        for (i, d) in self.config.datasets.iter().enumerate() {
            let r = match &d.source {
                DatasetSource::Synth(spec) => synth_generate(spec),
                DatasetSource::Csv { path, schema } => DatasetSchema::from_json_file(&self.base_dir.join(schema))
                    .and_then(|s| load_csv(&self.base_dir.join(path), &s)),
                DatasetSource::Shift { from, drift } => {
                    let parent = self.config.datasets[..i]
                        .iter()
                        .position(|e| e.id == d.id && &e.release == from)
                        .and_then(|j| built[j].as_ref());
                    match parent {
                        Some(p) => {
                            let s = seed::derive(self.config.seed, &format!("shift/{}/{}", d.id, d.release), 0);
                            synth_shift(p, *drift, s)
                        }
                        None => Err(Error::Config(format!("release `{}/{from}` could not be built", d.id))),
                    }
                }
            }
            .map(|ds| ds.with_name(&d.id).with_release(&d.release));
            built.push(r.as_ref().ok().cloned());
            out.push((i, r));
        }
        out
    }

    fn cached_trace(&self, rel: &str, ds: &TabularDataset, alg: Algorithm, seed: u64, m: &Manifest) -> Option<FairnessTrace> {
        if self.force {
            return None;
        }
        let path = self.path(rel);
        let recorded = m.files.get(rel)?;
        if sha256_file(&path).ok()? != recorded.sha256 {
            return None;
        }
        let t = read_trace(&path).ok()?;
        let tg = &self.config.tracegen;
        let same = t.algorithm == alg
            && t.dataset_id == ds.name()
            && t.release == ds.release()
            && t.protected == ds.protected_attribute()
            && t.meta.budget == tg.budget
            && t.meta.seed == seed
            && t.meta.acc_degrade == tg.acc_degrade
            && t.meta.settings.as_ref() == Some(&tg.search)
            && t.meta.dataset_fingerprint == ds.fingerprint();
        same.then_some(t)
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageSummary> {
        let mut m = self.load_manifest()?;
        let prior = m.clone();
        m.clear_stage(stage.as_str());
        let mut summary = match stage {
            Stage::Trace => self.stage_trace(&prior)?,
            Stage::Fit => self.stage_fit()?,
            Stage::Eval => self.stage_eval()?,
            Stage::Shift => self.stage_shift()?,
            Stage::Report => self.stage_report()?,
        };
        summary.written.sort();
        for rel in &summary.written {
            m.record(rel, stage.as_str(), &self.path(rel))?;
        }
        m.cache_hits.extend(summary.cache_hits.iter().cloned());
        m.cache_hits.sort();
        m.failures.extend(summary.failures.iter().cloned());
        let text = m.to_json()?;
        self.write(MANIFEST_FILE, text.as_bytes())?;
        Ok(summary)
    }

    /// Runs every stage in order; stops early only on errors that prevent
    /// the next stage from having any input.
    pub fn run(&self) -> Result<Vec<(Stage, StageSummary)>> {
        let mut out = Vec::new();
        for stage in Stage::ALL {
            out.push((stage, self.run_stage(stage)?));
        }
        Ok(out)
    }

    fn trace_jobs(&self) -> Vec<(&DatasetEntry, Algorithm)> {
        self.config
            .datasets
            .iter()
            .flat_map(|d| self.config.algorithms.iter().map(move |a| (d, *a)))
            .collect()
    }

    fn stage_trace(&self, m: &Manifest) -> Result<StageSummary> {
        let mut summary = StageSummary::default();
        let mut ready = Vec::new();
        for (i, r) in self.datasets() {
            let d = &self.config.datasets[i];
            match r {
                Ok(ds) => {
                    let rel = format!("datasets/{}__{}.json", d.id, d.release);
                    let p = self.path(&rel);
                    std::fs::create_dir_all(p.parent().expect("nested path")).map_err(|e| Error::io(&p, e))?;
                    ds.write_metadata(&p)?;
                    summary.written.push(rel);
                    ready.push(ds);
                }
                Err(e) => summary.failures.push(Failure::new("trace", format!("{}/{}", d.id, d.release), &e)),
            }
        }
        let base = self.config.tracegen_seed();
        let tg = &self.config.tracegen;
        let jobs: Vec<(&TabularDataset, Algorithm)> = ready
            .iter()
            .flat_map(|ds| self.config.algorithms.iter().map(move |a| (ds, *a)))
            .collect();
        let results: Vec<(String, bool, Result<()>)> = jobs
            .par_iter()
            .map(|&(ds, alg)| {
                let rel = trace_name(ds.name(), ds.release(), alg);
                // releases share a seed so a shift pair differs only in its data
                let s = seed::derive(base, &format!("trace/{}/{alg}", ds.name()), 0);
                if self.cached_trace(&rel, ds, alg, s, m).is_some() {
                    return (rel, true, Ok(()));
                }
                let r = run_search(alg, ds, tg.budget, tg.acc_degrade, s, &tg.search)
                    .and_then(|(t, _)| {
                        let p = self.path(&rel);
                        std::fs::create_dir_all(p.parent().expect("nested path")).map_err(|e| Error::io(&p, e))?;
                        write_trace(&t, &p)
                    });
                (rel, false, r)
            })
            .collect();
        for (rel, hit, r) in results {
            match r {
                Ok(()) if hit => {
                    summary.cache_hits.push(rel.clone());
                    summary.written.push(rel);
                }
                Ok(()) => summary.written.push(rel),
                Err(e) => summary.failures.push(Failure::new("trace", rel, &e)),
            }
        }
        Ok(summary)
    }

    /// Reads every expected trace. Unreadable ones become failures of
    /// `stage`; if none can be read the first error is returned.
    fn read_traces(&self, stage: Stage, summary: &mut StageSummary) -> Result<BTreeMap<String, FairnessTrace>> {
        let mut out = BTreeMap::new();
        let mut first_err = None;
        for (d, alg) in self.trace_jobs() {
            let rel = trace_name(&d.id, &d.release, alg);
            match read_trace(&self.path(&rel)) {
                Ok(t) => {
                    out.insert(rel, t);
                }
                Err(e) => {
                    summary.failures.push(Failure::new(stage.as_str(), rel, &e));
                    first_err.get_or_insert(e);
                }
            }
        }
        match first_err {
            Some(e) if out.is_empty() => Err(e),
            _ => Ok(out),
        }
    }

    fn stage_fit(&self) -> Result<StageSummary> {
        let mut summary = StageSummary::default();
        let traces = self.read_traces(Stage::Fit, &mut summary)?;
        let kinds = &self.config.surrogates.kinds;
        let jobs: Vec<(&FairnessTrace, surrogates::SurrogateKind)> =
            traces.values().flat_map(|t| kinds.iter().map(move |k| (t, *k))).collect();
        let results: Vec<(String, Result<()>)> = jobs
            .par_iter()
            .map(|&(t, kind)| {
                let rel = format!("surrogates/{}__{}__{}__{kind}.json", t.dataset_id, t.release, t.algorithm);
                let name = format!("fit/{}/{}/{}/{kind}", t.dataset_id, t.release, t.algorithm);
                let r = (|| {
                    let data: Vec<(EncodedConfig, f64)> = t
                        .records
                        .iter()
                        .map(|r| Ok((encode(&r.config, &t.space)?, self.config.target.value(r))))
                        .collect::<Result<_>>()?;
                    let s = surrogates::fit_with(
                        kind,
                        &t.space,
                        &data,
                        seed::derive(self.config.seed, &name, 0),
                        &self.config.surrogates.params,
                    )?;
                    self.write(&rel, s.to_json()?.as_bytes())
                })();
                (rel, r)
            })
            .collect();
        for (rel, r) in results {
            match r {
                Ok(()) => summary.written.push(rel),
                Err(e) => summary.failures.push(Failure::new("fit", rel, &e)),
            }
        }
        Ok(summary)
    }

    fn save_report(&self, rel: &str, rows: Vec<EvalRow>, summary: &mut StageSummary) -> Result<()> {
        let report = EvalReport::new(&self.config.eval_settings(), rows);
        self.write(rel, (report.to_json()? + "\n").as_bytes())?;
        summary.written.push(rel.to_string());
        Ok(())
    }

    fn stage_eval(&self) -> Result<StageSummary> {
        let mut summary = StageSummary::default();
        let traces = self.read_traces(Stage::Eval, &mut summary)?;
        let settings = self.config.eval_settings();
        let mut rows = Vec::new();
        for (rel, t) in &traces {
            match run_benchmark(t, &self.config.surrogates.kinds, &settings) {
                Ok(row) => rows.push(row),
                Err(e) => summary.failures.push(Failure::new("eval", rel.clone(), &e)),
            }
        }
        self.save_report(BENCHMARK_FILE, rows, &mut summary)?;
        Ok(summary)
    }

    fn stage_shift(&self) -> Result<StageSummary> {
        let mut summary = StageSummary::default();
        if self.config.shift_pairs.is_empty() {
            return Ok(summary);
        }
        let settings = self.config.eval_settings();
        let mut rows = Vec::new();
        for p in &self.config.shift_pairs {
            for alg in &self.config.algorithms {
                let base_rel = trace_name(&p.dataset, &p.base, *alg);
                let shifted_rel = trace_name(&p.dataset, &p.shifted, *alg);
                let r = read_trace(&self.path(&base_rel)).and_then(|base| {
                    let shifted = read_trace(&self.path(&shifted_rel))?;
                    shift_eval(&base, &shifted, &self.config.surrogates.kinds, &settings)
                });
                match r {
                    Ok(row) => rows.push(row),
                    Err(e) => summary.failures.push(Failure::new("shift", format!("{base_rel} -> {shifted_rel}"), &e)),
                }
            }
        }
        self.save_report(SHIFT_FILE, rows, &mut summary)?;
        Ok(summary)
    }

    fn stage_report(&self) -> Result<StageSummary> {
        let mut summary = StageSummary::default();
        let mut report = EvalReport::load(&self.path(BENCHMARK_FILE))?;
        if !self.config.shift_pairs.is_empty() {
            report.extend(EvalReport::load(&self.path(SHIFT_FILE))?.rows);
        }
        self.write(REPORT_JSON, (report.to_json()? + "\n").as_bytes())?;
        self.write(REPORT_MD, report.to_markdown().as_bytes())?;
        summary.written.push(REPORT_JSON.into());
        summary.written.push(REPORT_MD.into());
        Ok(summary)
    }
}
