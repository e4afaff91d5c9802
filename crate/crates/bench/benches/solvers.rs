use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use kvshape::fourier;
use kvshape::spectral::fourier_normal_fields;
use kvshape::{assemble_gradient_and_hessian, hessian_at_critical, BasisSpec, JumpData, ShapeParams};
use kvshape_bench::{bundle, mild_target, solver};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for n in [64, 128, 256] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| solver(n, &mild_target())));
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("dirichlet_solve");
    for n in [64, 128, 256] {
        let s = solver(n, &mild_target());
        let f: Vec<f64> = fourier::grid(n).iter().map(|t| t.cos()).collect();
        let jumps = JumpData::zeros(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| s.solve_dirichlet(black_box(&jumps), &f)));
    }
    group.finish();
}

fn hessian(c: &mut Criterion) {
    let n = 128;
    let current = ShapeParams::circle([0.0, 0.0], 0.75);
    let noncritical = bundle(n, &current);
    let basis = BasisSpec { max_mode: 4, translations: true };
    c.bench_function("general_hessian_k4", |b| b.iter(|| assemble_gradient_and_hessian(&noncritical, &basis)));

    let critical = [bundle(n, &mild_target())];
    let fields = fourier_normal_fields(critical[0].inner(), 8);
    c.bench_function("critical_hessian_k8", |b| b.iter(|| hessian_at_critical(&critical, &fields)));
}

criterion_group!(benches, assembly, solve, hessian);
criterion_main!(benches);
