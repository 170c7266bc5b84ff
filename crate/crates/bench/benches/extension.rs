use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lipext_cli::{generate_instance, Family, Instance, SubspaceRule};
use lipext_core::{
    bound_constants, dilation_estimate, doubling_constant, gen_lipschitz_field, ExtensionOperator,
    FieldFamily, LiftConfig, Norm,
};

fn ball(n: usize) -> (Instance, LiftConfig) {
    let inst = generate_instance(
        Family::RandomBall,
        &format!("n={n},d=2").parse().unwrap(),
        SubspaceRule::RandomP,
        1,
    )
    .unwrap()
    .validate()
    .unwrap();
    let cfg = LiftConfig::for_doubling(doubling_constant(&inst.space, &inst.measure).value).unwrap();
    (inst, cfg)
}

fn bench_doubling(c: &mut Criterion) {
    let mut group = c.benchmark_group("doubling_constant");
    for n in [100, 400] {
        let (inst, _) = ball(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| doubling_constant(black_box(&inst.space), black_box(&inst.measure)))
        });
    }
    group.finish();
}

fn bench_operator(c: &mut Criterion) {
    let mut group = c.benchmark_group("extension");
    for n in [100, 400] {
        let (inst, cfg) = ball(n);
        group.bench_with_input(BenchmarkId::new("build", n), &inst, |b, inst| {
            b.iter(|| ExtensionOperator::new(&inst.space, &inst.measure, &cfg).unwrap())
        });
        let op = ExtensionOperator::new(&inst.space, &inst.measure, &cfg).unwrap();
        let f = gen_lipschitz_field(&inst.space, inst.subspace(), FieldFamily::Bump, 4, Norm::L2, 3)
            .unwrap();
        group.bench_with_input(BenchmarkId::new("apply_k4", n), &f, |b, f| {
            b.iter(|| op.apply(black_box(f)).unwrap())
        });
    }
    group.finish();
}

fn bench_dilation(c: &mut Criterion) {
    let (inst, cfg) = ball(200);
    let l = bound_constants(&cfg).l;
    c.bench_function("dilation_estimate/200", |b| {
        b.iter(|| dilation_estimate(&inst.space, &inst.measure, &cfg, l, 16, 0).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_doubling, bench_operator, bench_dilation
}
criterion_main!(benches);
