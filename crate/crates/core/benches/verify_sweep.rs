use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lattice_core::par::{ExecMode, Executor};
use lattice_core::verify::{run_suite, Suite, VerifyConfig};

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_sweep");
    group.sample_size(10);
    for suite in [Suite::Brackets, Suite::Hierarchy, Suite::Moser] {
        let cfg = VerifyConfig { suite, n: 5, points: 32, seed: 7 };
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            let exec = Executor::new(mode, None).unwrap();
            let label = format!("{mode:?}").to_lowercase();
            group.bench_with_input(BenchmarkId::new(suite.name(), label), &cfg, |b, cfg| {
                b.iter(|| run_suite(*cfg, &exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
