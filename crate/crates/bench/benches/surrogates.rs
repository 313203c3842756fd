use criterion::{criterion_group, criterion_main, Criterion};
use hpfair_bench::step_trace;
use hpfair_core::surrogates::{fit, SurrogateKind};

fn fit_each_kind(c: &mut Criterion) {
    let (space, rows) = step_trace(800, 1);
    let mut group = c.benchmark_group("fit_800");
    group.sample_size(10);
    for kind in SurrogateKind::ALL {
        group.bench_function(kind.as_str(), |b| b.iter(|| fit(kind, &space, &rows, 0).unwrap()));
    }
    group.finish();
}

fn predict_forest(c: &mut Criterion) {
    let (space, rows) = step_trace(800, 2);
    let s = fit(SurrogateKind::Forest, &space, &rows, 0).unwrap();
    let probe: Vec<_> = rows.iter().take(200).map(|r| r.0.clone()).collect();
    c.bench_function("forest_predict_200", |b| b.iter(|| s.predict(&space, &probe).unwrap()));
}

criterion_group!(benches, fit_each_kind, predict_forest);
criterion_main!(benches);
