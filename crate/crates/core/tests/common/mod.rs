#![allow(dead_code)]

use hpfair_core::seed::rng;
use hpfair_core::tracegen::TraceMeta;
use hpfair_core::trainers::{hp_space, HpConfig, HpValue};
use hpfair_core::{Algorithm, FairnessRecord, FairnessTrace};

/// Trace of `n` uniformly drawn configurations whose AOD and EOD are both
/// `target(config)`.
pub fn synthetic_trace(
    algorithm: Algorithm,
    n: usize,
    seed: u64,
    mut target: impl FnMut(&HpConfig) -> f64,
) -> FairnessTrace {
    let space = hp_space(algorithm);
    let mut r = rng(seed);
    let records = (0..n)
        .map(|i| {
            let config = space.sample_uniform(&mut r);
            let t = target(&config);
            FairnessRecord {
                config,
                aod: t,
                eod: t,
                accuracy: 0.8,
                degenerate: false,
                eval_seed: i as u64,
            }
        })
        .collect();
    FairnessTrace {
        dataset_id: "synthetic".into(),
        release: "base".into(),
        algorithm,
        protected: "group".into(),
        space,
        records,
        meta: TraceMeta::default(),
    }
}

pub fn num(config: &HpConfig, index: usize) -> f64 {
    match config.values[index] {
        HpValue::Num(v) => v,
        HpValue::Cat(c) => c as f64,
    }
}

/// Sets dimension `name` to a numeric value or, for categorical
/// dimensions, to the level called `level`.
pub fn set_num(space: &hpfair_core::HpSpace, config: &mut HpConfig, name: &str, value: f64) {
    let i = space.index_of(name).unwrap_or_else(|| panic!("no dimension {name}"));
    config.values[i] = HpValue::Num(value);
}

pub fn set_cat(space: &hpfair_core::HpSpace, config: &mut HpConfig, name: &str, level: &str) {
    let i = space.index_of(name).unwrap_or_else(|| panic!("no dimension {name}"));
    let hpfair_core::trainers::DimKind::Categorical { levels } = &space.dims[i].kind else {
        panic!("{name} is numeric");
    };
    let k = levels.iter().position(|l| l == level).unwrap_or_else(|| panic!("{name} has no level {level}"));
    config.values[i] = HpValue::Cat(k);
}

pub fn small_dataset(n: usize, seed: u64) -> hpfair_core::TabularDataset {
    hpfair_core::datasets::synth_generate(&hpfair_core::SynthSpec {
        n_rows: n,
        seed,
        ..hpfair_core::SynthSpec::default()
    })
    .unwrap()
}
