use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use meshcond::{
    assemble_mass, assemble_stiffness, dense_eigenvalues, extreme_eigenvalues,
    generate_chebyshev_mesh, generate_skew_mesh_2d, DiffusionField,
};

fn assembly(c: &mut Criterion) {
    let mesh = generate_skew_mesh_2d(64, 16.0).unwrap();
    let field = DiffusionField::identity(2).unwrap();
    c.bench_function("assemble_stiffness skew2d n=64", |b| {
        b.iter(|| assemble_stiffness(&mesh, &field).unwrap())
    });
    c.bench_function("assemble_mass skew2d n=64", |b| {
        b.iter(|| assemble_mass(&mesh).unwrap())
    });
}

fn extreme(c: &mut Criterion) {
    let mut g = c.benchmark_group("extreme_eigenvalues");
    g.sample_size(10);
    let field = DiffusionField::identity(2).unwrap();
    for n in [16, 32, 64] {
        let a = assemble_stiffness(&generate_skew_mesh_2d(n, 16.0).unwrap(), &field).unwrap();
        g.bench_with_input(BenchmarkId::new("skew2d", n), &a, |b, a| {
            b.iter(|| extreme_eigenvalues(a, 1e-8).unwrap())
        });
    }
    let field = DiffusionField::identity(1).unwrap();
    for n in [256, 1024, 4096] {
        let a = assemble_stiffness(&generate_chebyshev_mesh(n).unwrap(), &field).unwrap();
        g.bench_with_input(BenchmarkId::new("chebyshev", n), &a, |b, a| {
            b.iter(|| extreme_eigenvalues(a, 1e-8).unwrap())
        });
    }
    g.finish();
}

fn dense(c: &mut Criterion) {
    let mut g = c.benchmark_group("dense_eigenvalues");
    g.sample_size(10);
    let field = DiffusionField::identity(2).unwrap();
    let a = assemble_stiffness(&generate_skew_mesh_2d(16, 16.0).unwrap(), &field).unwrap();
    g.bench_function("skew2d n=16", |b| b.iter(|| dense_eigenvalues(&a).unwrap()));
    g.finish();
}

criterion_group!(benches, assembly, extreme, dense);
criterion_main!(benches);
