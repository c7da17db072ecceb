use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use l0cca::deep::{total_correlation_grad, EmbeddingPair};
use l0cca::eval::kmeans;
use l0cca::gates::{expected_l0_grad, sample_gates};
use l0cca::linear::{l0cca_grad, LinearCcaModel};
use l0cca::numerics::sym_eig;
use l0cca::{Activation, GateVector, MlpParams, SeededRng, TrainConfig};
use l0cca_bench::{gaussian, model_one};

fn gates(c: &mut Criterion) {
    let g = GateVector::new((0..1000).map(|i| (i as f64 / 500.0) - 1.0).collect(), 0.25).unwrap();
    c.bench_function("expected_l0_grad/1000", |b| b.iter(|| expected_l0_grad(black_box(&g))));
    let mut rng = SeededRng::new(1);
    c.bench_function("sample_gates/1000", |b| b.iter(|| sample_gates(black_box(&g), &mut rng)));
}

fn linear_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("linear_grad");
    for &(n, d) in &[(200, 400), (400, 800)] {
        let (x, y, _) = model_one(n, d, 0);
        let cfg = TrainConfig::linear_preset();
        let mut rng = SeededRng::new(0);
        let m = LinearCcaModel::init(&x, &y, &cfg, &mut rng).unwrap();
        let zx = sample_gates(&m.gates_x, &mut rng);
        let zy = sample_gates(&m.gates_y, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{d}")), &(), |b, _| {
            b.iter(|| l0cca_grad(&m, &zx, &zy, &x, &y, &cfg).unwrap())
        });
    }
    group.finish();
}

fn deep_kernels(c: &mut Criterion) {
    let e = EmbeddingPair::new(gaussian(4, 1000, 1), gaussian(4, 1000, 2), false).unwrap();
    c.bench_function("total_correlation_grad/d4_n1000", |b| {
        b.iter(|| total_correlation_grad(black_box(&e), 1e-4).unwrap())
    });
    let net = MlpParams::new(&[50, 32, 32, 4], Activation::Tanh, &mut SeededRng::new(3)).unwrap();
    let x = gaussian(50, 1000, 4);
    let d_out = gaussian(4, 1000, 5);
    c.bench_function("mlp_forward_backward/50-32-32-4_n1000", |b| {
        b.iter(|| {
            let (_, cache) = net.forward(&x).unwrap();
            net.backward(&cache, &d_out).unwrap()
        })
    });
}

fn numerics(c: &mut Criterion) {
    let a = gaussian(10, 10, 6);
    let s = a.t_matmul(&a).unwrap();
    c.bench_function("sym_eig/10", |b| b.iter(|| sym_eig(black_box(&s)).unwrap()));
    let z = gaussian(500, 4, 7);
    c.bench_function("kmeans/n500_k4_r5", |b| b.iter(|| kmeans(black_box(&z), 4, 5, 100, 0).unwrap()));
}

criterion_group!(benches, gates, linear_step, deep_kernels, numerics);
criterion_main!(benches);
