use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use moldsched::{generate_taskset, solve_instance, taskmodel::Machine, ProblemInstance, SchedulerKind};

fn instance(n: usize, p: u32, seed: u64) -> ProblemInstance {
    let machine = Machine::evenly_spaced(p, 0.6, 1.6, 3).unwrap();
    let d = if p == 4 { 0.8 } else { 1.0 };
    ProblemInstance::with_factor(generate_taskset(n, seed), machine, d).unwrap()
}

fn schedulers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_n3_p4");
    group.sample_size(10);
    let inst = instance(3, 4, 7);
    for kind in SchedulerKind::ALL {
        group.bench_with_input(BenchmarkId::from_parameter(kind), &inst, |b, inst| {
            b.iter(|| solve_instance(black_box(inst), kind, 60.0).unwrap())
        });
    }
    group.finish();
}

fn crown_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("crown_p4");
    group.sample_size(10);
    for n in [2usize, 4, 6] {
        let inst = instance(n, 4, 11);
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| solve_instance(black_box(inst), SchedulerKind::Crown, 60.0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, schedulers, crown_scaling);
criterion_main!(benches);
