use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::StudyConfig;
use crate::error::{Error, Result};
use crate::evaluation::REPORT_FORMAT_VERSION;
use crate::seed;
use crate::surrogates::SURROGATE_FORMAT_VERSION;
use crate::tracegen::TRACE_FORMAT_VERSION;
use crate::trainers::hp_space;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub sha256: String,
    pub stage: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub item: String,
    pub message: String,
}

impl Failure {
    pub fn new(stage: &str, item: impl Into<String>, err: &Error) -> Self {
        Failure {
            stage: stage.into(),
            item: item.into(),
            message: err.to_string(),
        }
    }
}

/// Record of one output directory: every file with its content hash, every
/// seed, and the format and space versions in effect.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub versions: BTreeMap<String, String>,
    pub files: BTreeMap<String, FileEntry>,
    pub cache_hits: Vec<String>,
    pub failures: Vec<Failure>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Brings the config-derived fields up to date. Entries written under a
    /// different config are dropped.
    pub fn refresh(&mut self, config: &StudyConfig) -> Result<()> {
        let hash = hex::encode(Sha256::digest(serde_json::to_vec(config)?));
        if !self.config_sha256.is_empty() && self.config_sha256 != hash {
            self.cache_hits.clear();
            self.failures.clear();
        }
        self.config_sha256 = hash;
        self.tool_version = env!("CARGO_PKG_VERSION").into();
        self.seed = config.seed;
        let mut seeds = BTreeMap::new();
        seeds.insert("tracegen".to_string(), config.tracegen_seed());
        seeds.insert("evaluation".to_string(), config.eval_seed());
        for d in &config.datasets {
            if matches!(d.source, super::DatasetSource::Shift { .. }) {
                let name = format!("shift/{}/{}", d.id, d.release);
                seeds.insert(name.clone(), seed::derive(config.seed, &name, 0));
            }
            for alg in &config.algorithms {
                let name = format!("trace/{}/{}/{alg}", d.id, d.release);
                seeds.insert(name.clone(), seed::derive(config.tracegen_seed(), &name, 0));
                for kind in &config.surrogates.kinds {
                    let name = format!("fit/{}/{}/{alg}/{kind}", d.id, d.release);
                    seeds.insert(name.clone(), seed::derive(config.seed, &name, 0));
                }
            }
        }
        self.seeds = seeds;
        let mut versions = BTreeMap::new();
        versions.insert("trace_format".to_string(), TRACE_FORMAT_VERSION.to_string());
        versions.insert("surrogate_format".to_string(), SURROGATE_FORMAT_VERSION.to_string());
        versions.insert("report_format".to_string(), REPORT_FORMAT_VERSION.to_string());
        for alg in &config.algorithms {
            versions.insert(format!("space/{alg}"), hp_space(*alg).version_tag());
        }
        self.versions = versions;
        Ok(())
    }

    pub fn clear_stage(&mut self, stage: &str) {
        self.files.retain(|_, f| f.stage != stage);
        self.failures.retain(|f| f.stage != stage);
        if stage == "trace" {
            self.cache_hits.clear();
        }
    }

    pub fn record(&mut self, rel: &str, stage: &str, path: &Path) -> Result<()> {
        self.files.insert(
            rel.to_string(),
            FileEntry {
                sha256: sha256_file(path)?,
                stage: stage.into(),
            },
        );
        Ok(())
    }

    /// Files whose content no longer matches the recorded hash.
    pub fn verify(&self, out: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|(rel, f)| sha256_file(&out.join(rel)).ok().as_deref() != Some(f.sha256.as_str()))
            .map(|(rel, _)| rel.clone())
            .collect()
    }
}
