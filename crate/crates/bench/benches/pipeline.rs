use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use entchain_bench::{chain_basis, ramp};
use entchain_core::configspace::DEFAULT_BUDGET;
use entchain_core::*;

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate_chain_basis");
    for n in [5, 7, 9] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| enumerate_chain_basis(Model::chain(), n, ChainFilter::BracketedWellFormed, DEFAULT_BUDGET).unwrap())
        });
    }
    g.finish();
}

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble_chain");
    g.sample_size(10);
    for n in [5, 7, 9] {
        let basis = chain_basis(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &basis, |b, basis| {
            b.iter(|| assemble_chain(Model::chain(), ChainVariant::Core, basis).unwrap())
        });
    }
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let basis = chain_basis(9);
    let op = assemble_chain(Model::chain(), ChainVariant::Core, &basis).unwrap();
    let x = ramp(op.dim());
    let mut y = vec![0.0; op.dim()];
    c.bench_function("apply_slice/9", |b| b.iter(|| op.apply_slice(&x, &mut y)));
}

fn eigenpairs(c: &mut Criterion) {
    let mut g = c.benchmark_group("lowest_eigenpairs");
    g.sample_size(10);
    for n in [5, 7] {
        let op = assemble_chain(Model::chain(), ChainVariant::Core, &chain_basis(n)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &op, |b, op| {
            b.iter(|| lowest_eigenpairs(op, 2, &SolverConfig::default()).unwrap())
        });
    }
    g.finish();
}

fn densities(c: &mut Criterion) {
    let mut g = c.benchmark_group("reduced_density");
    for n in [11, 15] {
        let v = construct_phi_g(n).unwrap();
        let region = Region::new(0, n / 2, n, Topology::Chain).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &(v, region), |b, (v, region)| {
            b.iter(|| entropy(&reduced_density(v, region).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, enumeration, assembly, matvec, eigenpairs, densities);
criterion_main!(benches);
