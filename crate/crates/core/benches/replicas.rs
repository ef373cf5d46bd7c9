use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use percap::montecarlo::{estimate_one_arm, estimate_tau, Sampler};
use percap::{Exec, GraphSpec, Point};

fn sampler(exec: Exec) -> Sampler {
    Sampler::new(GraphSpec::nearest_neighbor(11, 0.0478).unwrap(), 7)
        .unwrap()
        .with_budget(20_000)
        .with_exec(exec)
}

fn replicas(c: &mut Criterion) {
    let mut g = c.benchmark_group("replicas");
    g.sample_size(10);
    let z = {
        let mut v = vec![0i64; 11];
        v[0] = 1;
        v[1] = 1;
        Point::new(&v).unwrap()
    };
    for (name, exec) in [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::Parallel { workers: 0 }),
    ] {
        let s = sampler(exec);
        g.bench_with_input(BenchmarkId::new("tau_d11", name), &s, |b, s| {
            b.iter(|| estimate_tau(s, &z, 8192).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("one_arm_d11_r6", name), &s, |b, s| {
            b.iter(|| estimate_one_arm(s, 6, 8192).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, replicas);
criterion_main!(benches);
