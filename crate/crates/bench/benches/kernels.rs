use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eventum::chain::{poisson_expectation_product, BlockDiagOperator, Chain, Grid};
use eventum::dilation::{project_unitary_step, traceout_step, uniform_schedule, DensityOperator, Generator};
use eventum::duhamel::{direct_solve, duhamel_solve, multiple_sum_kernel, DuhamelProblem, Exponent};
use eventum::ito::ItoElement;
use eventum::linalg::{basis, random, real, sigma_minus, sigma_x, sigma_z, CMatrix, CVector};
use eventum::measurement::TrajectoryModel;
use eventum::minkowski::BlockOperator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ito_product(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = ItoElement::from_table(2, 2, random::matrix(&mut rng, 6, 6)).unwrap();
    let b = ItoElement::from_table(2, 2, random::matrix(&mut rng, 6, 6)).unwrap();
    c.bench_function("ito product n=2 d=2", |bench| bench.iter(|| black_box(&a).product(black_box(&b))));
}

fn step_maps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step map");
    let schrodinger = Generator::schrodinger(&sigma_z()).unwrap();
    let damping = Generator::lindblad(&CMatrix::zeros(2, 2), &[sigma_minus()], None).unwrap();
    let rho0 = DensityOperator::pure(&basis(2, 1)).unwrap();
    for n in [256usize, 1024] {
        let grid = Grid::new(1.0, n).unwrap();
        let unitary = uniform_schedule(&grid, &schrodinger);
        let damped = uniform_schedule(&grid, &damping);
        group.bench_with_input(BenchmarkId::new("project unitary", n), &n, |b, _| {
            b.iter(|| project_unitary_step(&grid, &unitary, 1.0))
        });
        group.bench_with_input(BenchmarkId::new("trace-out", n), &n, |b, _| {
            b.iter(|| traceout_step(&grid, &damped, &rho0, 1.0))
        });
    }
    group.finish();
}

fn poisson(c: &mut Criterion) {
    let h = CMatrix::from_element(1, 1, real(std::f64::consts::FRAC_PI_2));
    let g = Generator::schrodinger(&h).unwrap();
    let phi = CVector::from_element(2, real(0.5f64.sqrt()));
    let mut group = c.benchmark_group("poisson expectation");
    for n in [256usize, 2048] {
        let grid = Grid::new(1.0, n).unwrap();
        let x = BlockDiagOperator::uniform(grid, g.block_operator()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| poisson_expectation_product(&x, 4.0, 1.0, &phi, 12))
        });
    }
    group.finish();
}

fn duhamel(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d, f, n) = (2, 3, 8);
    let mut per_point = || {
        Exponent::PerPoint(
            (0..n)
                .map(|_| BlockOperator::new(1, d, random::matrix(&mut rng, d * f, d * f) * real(0.3)).unwrap())
                .collect(),
        )
    };
    let p = DuhamelProblem {
        grid: Grid::new(1.0, n).unwrap(),
        system_dim: d,
        fiber_dim: f,
        k: per_point(),
        l: per_point(),
    };
    let chain = Chain::new(vec![1, 3, 4, 6]).unwrap();
    let size = d * f.pow(4);
    let t0 = random::matrix(&mut rng, size, size);
    let mut group = c.benchmark_group("duhamel |ϑ|=4");
    group.bench_function("direct", |b| b.iter(|| direct_solve(&p, &t0, 1.0, &chain)));
    group.bench_function("recursive", |b| b.iter(|| duhamel_solve(&p, &t0, 1.0, &chain)));
    group.bench_function("multiple-sum kernel", |b| b.iter(|| multiple_sum_kernel(&p, &t0, 1.0, &chain)));
    group.finish();
}

fn trajectories(c: &mut Criterion) {
    let model = TrajectoryModel::from_jumps(sigma_x(), &[sigma_minus() * real(0.5)], 5.0, basis(2, 0)).unwrap();
    c.bench_function("trajectory sample", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            model.sample(1.0, seed)
        })
    });
    c.bench_function("ensemble of 1000", |b| b.iter(|| model.sample_ensemble(1.0, 3, 1000, None)));
}

criterion_group!(benches, ito_product, step_maps, poisson, duhamel, trajectories);
criterion_main!(benches);
