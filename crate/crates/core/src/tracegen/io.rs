//! Trace files.
//!
//! JSON Lines: the first line is a header object (dataset, release,
//! algorithm, protected attribute, HP space snapshot, generation metadata);
//! each following line is one record with HP values keyed by dimension name.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{FairnessRecord, FairnessTrace, TraceMeta};
use crate::error::{Error, Result};
use crate::trainers::{hp_space, Algorithm, HpSpace};

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    format_version: u32,
    dataset_id: String,
    release: String,
    algorithm: Algorithm,
    protected: String,
    space: HpSpace,
    meta: TraceMeta,
}

#[derive(Serialize, Deserialize)]
struct Line {
    config: Map<String, Value>,
    aod: f64,
    eod: f64,
    accuracy: f64,
    degenerate: bool,
    eval_seed: u64,
}

const FORMAT: &str = "hpfair-trace";

pub fn write_trace(trace: &FairnessTrace, path: &Path) -> Result<()> {
    trace.validate()?;
    let mut out = Vec::new();
    let header = Header {
        format: FORMAT.into(),
        format_version: TRACE_FORMAT_VERSION,
        dataset_id: trace.dataset_id.clone(),
        release: trace.release.clone(),
        algorithm: trace.algorithm,
        protected: trace.protected.clone(),
        space: trace.space.clone(),
        meta: trace.meta.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    for r in &trace.records {
        let line = Line {
            config: trace.space.config_to_map(&r.config),
            aod: r.aod,
            eod: r.eod,
            accuracy: r.accuracy,
            degenerate: r.degenerate,
            eval_seed: r.eval_seed,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.push(b'\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<FairnessTrace> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Trace(format!("`{}` is empty", path.display())))?
        .map_err(|e| Error::io(path, e))?;
    let header: Header = serde_json::from_str(&first)
        .map_err(|e| Error::Trace(format!("bad header in `{}`: {e}", path.display())))?;
    if header.format != FORMAT || header.format_version != TRACE_FORMAT_VERSION {
        return Err(Error::Incompatible(format!(
            "`{}` is {} v{}, expected {FORMAT} v{TRACE_FORMAT_VERSION}",
            path.display(),
            header.format,
            header.format_version
        )));
    }
    let current = hp_space(header.algorithm);
    if header.space != current {
        return Err(Error::Incompatible(format!(
            "`{}` was written against {} which differs from the current {}",
            path.display(),
            header.space.version_tag(),
            current.version_tag()
        )));
    }

    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(&line)
            .map_err(|e| Error::Trace(format!("line {}: {e}", k + 2)))?;
        let config = current
            .config_from_map(&l.config)
            .map_err(|e| Error::Trace(format!("line {}: {e}", k + 2)))?;
        records.push(FairnessRecord {
            config,
            aod: l.aod,
            eod: l.eod,
            accuracy: l.accuracy,
            degenerate: l.degenerate,
            eval_seed: l.eval_seed,
        });
    }
    let trace = FairnessTrace {
        dataset_id: header.dataset_id,
        release: header.release,
        algorithm: header.algorithm,
        protected: header.protected,
        space: current,
        records,
        meta: header.meta,
    };
    trace.validate()?;
    Ok(trace)
}

/// One column per dimension, then `aod,eod,accuracy`.
pub fn write_trace_csv(trace: &FairnessTrace, path: &Path) -> Result<()> {
    let mut w = Vec::new();
    {
        let mut writer = csv::Writer::from_writer(&mut w);
        let mut header: Vec<&str> = trace.space.dims.iter().map(|d| d.name.as_str()).collect();
        header.extend(["aod", "eod", "accuracy"]);
        writer.write_record(&header)?;
        for r in &trace.records {
            let map = trace.space.config_to_map(&r.config);
            let mut row: Vec<String> = trace
                .space
                .dims
                .iter()
                .map(|d| match &map[&d.name] {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            row.extend([r.aod.to_string(), r.eod.to_string(), r.accuracy.to_string()]);
            writer.write_record(&row)?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&w).map_err(|e| Error::io(path, e))
}
