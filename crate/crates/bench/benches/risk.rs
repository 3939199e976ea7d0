use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use oce_core::bounds::{binomial_tail_exact, rademacher_mc, FiniteClassLosses};
use oce_core::{oce_empirical, oce_empirical_with, Disutility, LossVector, SolverPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn losses(n: usize, seed: u64) -> LossVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LossVector::new((0..n).map(|_| rng.gen_range(0.0..1.0)).collect(), 1.0).unwrap()
}

fn oce(c: &mut Criterion) {
    let mut group = c.benchmark_group("oce_empirical");
    let specs = [
        ("entropic", Disutility::Entropic { gamma: 1.0 }),
        ("cvar", Disutility::CVaR { alpha: 0.1 }),
        (
            "softcvar",
            Disutility::SoftCVaR {
                gamma1: 2.0,
                gamma2: 0.5,
            },
        ),
    ];
    for n in [100, 10_000] {
        let lv = losses(n, 1);
        for (name, spec) in &specs {
            group.bench_with_input(BenchmarkId::new(*name, n), &lv, |b, lv| {
                b.iter(|| oce_empirical(black_box(lv), spec).unwrap())
            });
        }
        group.bench_with_input(BenchmarkId::new("cvar_ternary", n), &lv, |b, lv| {
            b.iter(|| {
                oce_empirical_with(black_box(lv), &specs[1].1, SolverPolicy::Ternary).unwrap()
            })
        });
    }
    group.finish();
}

fn rademacher(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows = (0..20)
        .map(|_| (0..200).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let class = FiniteClassLosses::new(rows, 1.0).unwrap();
    c.bench_function("rademacher_mc/20x200/1000", |b| {
        b.iter(|| rademacher_mc(black_box(&class), 1000, 7).unwrap())
    });
}

fn binomial(c: &mut Criterion) {
    let mut group = c.benchmark_group("binomial_tail_exact");
    for n in [100u64, 10_000, 1_000_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| binomial_tail_exact(black_box(n), 0.55, n as f64 * 0.45).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, oce, rademacher, binomial);
criterion_main!(benches);
