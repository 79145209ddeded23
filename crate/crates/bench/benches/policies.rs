use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use dpncb_bench::bern50;
use dpncb_core::rng::derive_stream;
use dpncb_core::sim::run_policy;
use dpncb_core::{PolicyKind, PolicyParams};

fn full_runs(c: &mut Criterion) {
    let inst = bern50();
    let horizon = 10_000;
    let params = PolicyParams::new(inst.k(), horizon, 0.2).unwrap();
    let mut group = c.benchmark_group("run bern50 T=1e4");
    group.throughput(Throughput::Elements(horizon));
    group.sample_size(20);
    for kind in [
        PolicyKind::GdpNcb,
        PolicyKind::LdpNcb,
        PolicyKind::AdapUcb,
        PolicyKind::LdpUcb,
        PolicyKind::Ucb1,
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(kind), &kind, |bn, &kind| {
            let mut i = 0u64;
            bn.iter(|| {
                i += 1;
                run_policy(kind, params, &inst, &derive_stream(3, i)).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, full_runs);
criterion_main!(benches);
