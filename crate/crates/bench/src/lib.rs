//! Shared fixtures for the benchmarks.

use hpfair_core::seed::rng;
use hpfair_core::surrogates::{encode, EncodedConfig};
use hpfair_core::trainers::{hp_space, HpValue};
use hpfair_core::{Algorithm, HpSpace};

/// `n` uniform decision-tree configurations with a step-shaped target in
/// two dimensions.
pub fn step_trace(n: usize, seed: u64) -> (HpSpace, Vec<(EncodedConfig, f64)>) {
    let space = hp_space(Algorithm::DecisionTree);
    let mut r = rng(seed);
    let rows = (0..n)
        .map(|_| {
            let c = space.sample_uniform(&mut r);
            let depth = match c.values[0] {
                HpValue::Num(v) => v,
                HpValue::Cat(_) => 0.0,
            };
            let split = match c.values[1] {
                HpValue::Num(v) => v,
                HpValue::Cat(_) => 0.0,
            };
            let t = 0.1 + if depth >= 10.0 { 0.3 } else { 0.0 } + if split < 30.0 { 0.2 } else { 0.0 };
            (encode(&c, &space).expect("sampled configs are valid"), t)
        })
        .collect();
    (space, rows)
}
