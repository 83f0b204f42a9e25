use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nmx::dp::{solve, SolveOptions};
use nmx::exec::Exec;
use nmx::pursuit::{build, PursuitParams, Surround, TargetView};

fn pursuit(c: &mut Criterion) {
    let p = PursuitParams {
        lambda: 5,
        horizon: 2,
        penalty: 10,
        x1: 1,
        x2: 5,
        y0: 3,
        view: TargetView::Delayed,
    };
    let (model, info) = build(&p, Surround::Inclusive).unwrap();
    let mut group = c.benchmark_group("pursuit_lambda5_t2");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::Parallel),
    ] {
        let opts = SolveOptions {
            exec,
            ..SolveOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| black_box(solve(&model, &info, opts).unwrap().1.value))
        });
    }
    group.finish();
}

criterion_group!(benches, pursuit);
criterion_main!(benches);
