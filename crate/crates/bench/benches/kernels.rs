use std::hint::black_box;
use std::sync::Arc;

use compser_bench::{random_vector, spherical_basis};
use compser_core::asymptotics::{matcoef_direct, matcoef_nbar, MatcoefConfig};
use compser_core::group::{iwasawa, random_word};
use compser_core::harmonic::{cplus, m_grid_for, t_operator_full, CPlusConfig};
use compser_core::model::act_sampled;
use compser_core::quadrature::k_quadrature;
use compser_core::su2::wigner_d;
use compser_core::{ActConfig, Quat};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn group(c: &mut Criterion) {
    let mut g = c.benchmark_group("iwasawa");
    for d in 1..=3 {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let words: Vec<_> = (0..64)
            .map(|_| random_word(d, 5, 1.5, 1.0, &mut rng))
            .collect();
        g.bench_with_input(BenchmarkId::from_parameter(d), &words, |b, w| {
            b.iter(|| {
                w.iter()
                    .map(|x| iwasawa(black_box(x)).unwrap().h)
                    .sum::<f64>()
            })
        });
    }
    g.finish();
}

fn wigner(c: &mut Criterion) {
    let q = Quat {
        w: 0.6,
        x: 0.48,
        y: -0.36,
        z: 0.52,
    }
    .normalized();
    let mut g = c.benchmark_group("wigner_d");
    for j2 in [4usize, 16, 64] {
        g.bench_with_input(BenchmarkId::from_parameter(j2), &j2, |b, &j2| {
            b.iter(|| wigner_d(j2, black_box(q)))
        });
    }
    g.finish();
}

fn matcoef(c: &mut Criterion) {
    let mut g = c.benchmark_group("matcoef");
    g.sample_size(20);
    for (d, s, cut) in [(1, 0.75, 16), (2, 1.4, 6)] {
        let basis = spherical_basis(d, s, cut);
        let (u, v) = (random_vector(&basis, 2), random_vector(&basis, 3));
        g.bench_function(format!("direct d={d}"), |b| {
            b.iter(|| matcoef_direct(&u, &v, black_box(6.0), &MatcoefConfig::default()).unwrap())
        });
        g.bench_function(format!("nbar d={d}"), |b| {
            b.iter(|| matcoef_nbar(&u, &v, black_box(6.0)).unwrap())
        });
    }
    g.finish();
}

fn operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("operators");
    g.sample_size(10);
    let basis = spherical_basis(2, 1.4, 8);
    g.bench_function("cplus d=2 cutoff 8", |b| {
        b.iter(|| cplus(&basis, &CPlusConfig::default()).unwrap())
    });
    let mg = m_grid_for(&basis).unwrap();
    g.bench_function("T d=2 cutoff 8", |b| {
        b.iter(|| t_operator_full(&basis, &mg).unwrap())
    });
    let basis1 = spherical_basis(1, 0.75, 32);
    let v = random_vector(&basis1, 4);
    let cfg = ActConfig {
        grid: Arc::new(k_quadrature(1, 256).unwrap()),
        tolerance: 1.0,
    };
    let a = compser_core::group::make_a(1.0, 1);
    g.bench_function("act_sampled d=1 cutoff 32", |b| {
        b.iter(|| act_sampled(&a, &v, &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, group, wigner, matcoef, operators);
criterion_main!(benches);
