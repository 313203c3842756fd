use criterion::{criterion_group, criterion_main, Criterion};
use hpfair_core::datasets::synth_generate;
use hpfair_core::tracegen::generate_trace;
use hpfair_core::{Algorithm, SynthSpec};

fn trace_budget_60(c: &mut Criterion) {
    let ds = synth_generate(&SynthSpec {
        n_rows: 1000,
        ..SynthSpec::default()
    })
    .unwrap();
    let mut group = c.benchmark_group("trace_budget_60");
    group.sample_size(10);
    for alg in Algorithm::ALL {
        group.bench_function(alg.as_str(), |b| b.iter(|| generate_trace(alg, &ds, 60, 0.05, 1).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, trace_budget_60);
criterion_main!(benches);
