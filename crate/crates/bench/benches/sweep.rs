use criterion::{criterion_group, criterion_main, Criterion};
use ifofdm_core::sim::{run_sweep, ExperimentConfig, Scheme, SnrGrid, TapProfile};

fn bench_sweep_point(c: &mut Criterion) {
    let cfg = ExperimentConfig::new(
        vec![Scheme::IfOfdm],
        vec![4],
        TapProfile::Symmetric { l_d: 2, l_i: 1 },
        SnrGrid::new(30.0, 30.0, 5.0).unwrap(),
        200,
        9,
    );
    c.bench_function("sweep_point_200_trials", |b| b.iter(|| run_sweep(&cfg).unwrap()));
}

criterion_group!(benches, bench_sweep_point);
criterion_main!(benches);
