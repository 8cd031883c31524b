//! Forward and adjoint throughput, rayon pool against the sequential path.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use curvetomo::geometry::{make_dynamic_phase, Breathing, ConstantWeight, Phase};
use curvetomo::operators::{GridSpec, ImageGrid, LevelSetOperator, OperatorOptions, SinoSpec};
use curvetomo::par::Exec;

fn operator(n: usize, nt: usize, exec: Exec) -> LevelSetOperator {
    let grid = GridSpec::square(n, 1.0, 1.0);
    let pf: Arc<dyn Phase> = Arc::new(make_dynamic_phase(Arc::new(Breathing::new(0.05, 1.0).unwrap())));
    let sino = SinoSpec::fitted(&*pf, &grid, nt, 1.0).unwrap();
    let opts = OperatorOptions { exec, ..Default::default() };
    let op = LevelSetOperator::with_options(pf, Arc::new(ConstantWeight(1.0)), grid, sino, opts).unwrap();
    op.prepare().unwrap();
    op
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("operators");
    group.sample_size(10);
    for exec in [Exec::Parallel, Exec::Sequential] {
        let op = operator(64, 90, exec);
        let f = ImageGrid::from_fn(op.grid, |x| (-(x.norm_squared()) / 0.1).exp());
        let g = op.forward(&f).unwrap();
        // warm the cached plans outside the timed loops
        op.adjoint(&g).unwrap();
        op.forward_adjoint(&g).unwrap();
        let label = format!("{exec:?}").to_lowercase();
        group.bench_with_input(BenchmarkId::new("forward", &label), &f, |b, f| {
            b.iter(|| op.forward(black_box(f)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("adjoint", &label), &g, |b, g| {
            b.iter(|| op.adjoint(black_box(g)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("transpose", &label), &g, |b, g| {
            b.iter(|| op.forward_adjoint(black_box(g)).unwrap())
        });
    }
    group.bench_function("trace_plan/parallel", |b| b.iter(|| operator(48, 45, Exec::Parallel)));
    group.bench_function("trace_plan/sequential", |b| b.iter(|| operator(48, 45, Exec::Sequential)));
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
