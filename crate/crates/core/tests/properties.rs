//! Property tests for the structural invariants of each layer.

use eventum::chain::{embed, enumerate_chains, project, BlockDiagOperator, Chain, ChainVector, Fiber, Grid, PointFamily};
use eventum::dilation::{
    chronological_product, dilation_operator, project_unitary_step, random_generator, traceout_step, uniform_schedule,
    DensityOperator, Generator,
};
use eventum::duhamel::{direct_solve, duhamel_solve, multiple_sum_kernel, DuhamelProblem, Exponent};
use eventum::linalg::{
    commutator, frobenius, identity, operator_norm, random, real, trace, unitarity_residual, CMatrix, CVector,
};
use eventum::measurement::{
    apparatus_marginal, apparatus_unitary, causality_check, decoherence_map, output_intensities, KrausFamily,
    TrajectoryModel,
};
use eventum::minkowski::{BlockOperator, LorentzBoost, TemporalSpin};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_block(r: &mut ChaCha8Rng, n: usize, d: usize) -> BlockOperator {
    let m = (n + 2) * d;
    BlockOperator::new(n, d, random::matrix(r, m, m)).unwrap()
}

fn random_chain_vector(r: &mut ChaCha8Rng, grid: Grid, n_max: usize, fiber: Fiber, d: usize) -> ChainVector {
    let mut v = ChainVector::zero(grid, n_max, fiber, d);
    for c in enumerate_chains(&grid, n_max).unwrap() {
        let len = v.value_len(c.len());
        v.set(c, random::vector(r, len)).unwrap();
    }
    v
}

/// Jump operators with `Σ E*E ≤ s I` for a random `s < 1`.
fn contractive_jumps(r: &mut ChaCha8Rng, count: usize, d: usize) -> Vec<CMatrix> {
    let raw: Vec<CMatrix> = (0..count).map(|_| random::matrix(r, d, d)).collect();
    let total = raw.iter().fold(CMatrix::zeros(d, d), |acc, a| acc + a.adjoint() * a);
    let scale = r.random_range(0.2..0.95) / operator_norm(&total).sqrt();
    raw.into_iter().map(|a| a * real(scale)).collect()
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn pseudo_adjoint_is_an_involutive_anti_homomorphism(seed in any::<u64>(), n in 0usize..3, d in 1usize..3) {
        let mut r = rng(seed);
        let x = random_block(&mut r, n, d);
        let y = random_block(&mut r, n, d);
        prop_assert_eq!(x.pseudo_adjoint().pseudo_adjoint(), x.clone());
        let lhs = x.try_mul(&y).unwrap().pseudo_adjoint();
        let rhs = y.pseudo_adjoint().try_mul(&x.pseudo_adjoint()).unwrap();
        prop_assert!(lhs.distance(&rhs) <= 1e-12 * (1.0 + lhs.matrix().norm()));
    }

    #[test]
    fn xi_is_null_and_reads_dt(n in 0usize..4) {
        let xi = TemporalSpin::new(n);
        prop_assert_eq!(xi.pseudo_norm(), 0.0);
        let dt = eventum::ito::ItoElement::dt(n, &identity(1)).represent();
        let sandwich = xi.lifted_star(1) * dt.matrix() * xi.lifted(1);
        prop_assert_eq!(sandwich[(0, 0)], real(1.0));
    }

    #[test]
    fn boosts_compose_multiplicatively(nu in 0.01f64..50.0, mu in 0.01f64..50.0, n in 1usize..4) {
        let a = LorentzBoost::new(nu, n).unwrap();
        let b = LorentzBoost::new(mu, n).unwrap();
        let ab = a.compose(&b).unwrap();
        for ((x, y), z) in a.diagonal().iter().zip(b.diagonal()).zip(ab.diagonal()) {
            prop_assert!((x * y - z).abs() <= 4.0 * f64::EPSILON * z.abs());
        }
    }

    #[test]
    fn pseudo_unitarity_passes_to_the_pseudo_adjoint(seed in any::<u64>(), n in 1usize..3, d in 1usize..3) {
        let mut r = rng(seed);
        let g = random_generator(&mut r, n, d);
        let op = g.block_operator();
        let direct = op.pseudo_unitarity(1e-12).residual;
        let adjoint = op.pseudo_adjoint().pseudo_unitarity(1e-12).residual;
        prop_assert!(adjoint <= 2.0 * direct + 1e-14);
    }

    #[test]
    fn gradient_and_skorokhod_are_adjoint(seed in any::<u64>(), n_max in 1usize..4) {
        let mut r = rng(seed);
        let grid = Grid::new(1.0, 4).unwrap();
        let fiber = Fiber::Hilbert(2);
        let chi = random_chain_vector(&mut r, grid, n_max, fiber, 1);
        let mut zeta = PointFamily::zero(grid, n_max - 1, fiber, 1);
        for sigma in enumerate_chains(&grid, n_max - 1).unwrap() {
            for t in (0..grid.len()).filter(|t| !sigma.contains(*t)) {
                let len = 2usize.pow(sigma.len() as u32 + 1);
                zeta.set(t, sigma.clone(), random::vector(&mut r, len)).unwrap();
            }
        }
        let lhs = zeta.skorokhod_adjoint().inner(&chi).unwrap();
        let rhs = zeta.inner(&chi.point_derivative());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn projection_inverts_embedding_exactly(seed in any::<u64>(), n_max in 0usize..4, noise in 1usize..3) {
        let mut r = rng(seed);
        let grid = Grid::new(1.0, 4).unwrap();
        let v = random_chain_vector(&mut r, grid, n_max, Fiber::Hilbert(noise), 2);
        prop_assert_eq!(project(&embed(&v).unwrap()).unwrap(), v);
    }

    #[test]
    fn block_diagonal_action_is_chainwise(seed in any::<u64>()) {
        let mut r = rng(seed);
        let grid = Grid::new(1.0, 4).unwrap();
        let factors = (0..4).map(|_| random_block(&mut r, 1, 1)).collect();
        let x = BlockDiagOperator::chronological(grid, factors).unwrap();
        let psi = random_chain_vector(&mut r, grid, 2, Fiber::Minkowski(1), 1);
        let mut bumped = psi.clone();
        let other = Chain::new(vec![0, 3]).unwrap();
        let len = bumped.value_len(2);
        bumped.set(other.clone(), random::vector(&mut r, len)).unwrap();
        let a = x.apply(&psi).unwrap();
        let b = x.apply(&bumped).unwrap();
        for c in enumerate_chains(&grid, 2).unwrap().into_iter().filter(|c| *c != other) {
            prop_assert_eq!(a.value(&c), b.value(&c));
        }
    }

    #[test]
    fn number_operator_counts_points(seed in any::<u64>(), n_max in 0usize..4) {
        let mut r = rng(seed);
        let grid = Grid::new(1.0, 5).unwrap();
        let v = random_chain_vector(&mut r, grid, n_max, Fiber::Hilbert(1), 1);
        let nv = v.number_operator();
        for c in enumerate_chains(&grid, n_max).unwrap() {
            let expected = v.value(&c).unwrap() * real(c.len() as f64);
            let got = nv.value(&c).cloned().unwrap_or_else(|| CVector::zeros(expected.len()));
            prop_assert_eq!(got, expected);
        }
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn projected_propagator_is_unitary_to_first_order(seed in any::<u64>(), d in 1usize..4) {
        let mut r = rng(seed);
        let h = random::hermitian(&mut r, d);
        let g = Generator::schrodinger(&h).unwrap();
        let residual = |n: usize| {
            let grid = Grid::new(1.0, n).unwrap();
            unitarity_residual(&project_unitary_step(&grid, &uniform_schedule(&grid, &g), 1.0).unwrap())
        };
        let norm = operator_norm(&h);
        let (coarse, fine) = (residual(64), residual(128));
        prop_assert!(fine <= 2.0 * (d as f64).sqrt() * norm * norm / 128.0 * (norm * norm / 128.0).exp());
        prop_assert!(fine <= coarse);
    }

    #[test]
    fn traceout_preserves_trace_and_hermiticity(seed in any::<u64>(), d in 1usize..4, n in 1usize..3) {
        let mut r = rng(seed);
        let h = random::hermitian(&mut r, d);
        let ls: Vec<CMatrix> = (0..n).map(|_| random::matrix(&mut r, d, d) * real(0.5)).collect();
        let g = Generator::lindblad(&h, &ls, None).unwrap();
        let grid = Grid::new(1.0, 64).unwrap();
        let rho0 = DensityOperator::new(random::density(&mut r, d)).unwrap();
        for s in traceout_step(&grid, &uniform_schedule(&grid, &g), &rho0, 1.0).unwrap() {
            prop_assert!(s.health.trace_error <= 1e-10);
            prop_assert!(s.health.hermiticity <= 1e-10);
        }
    }

    #[test]
    fn chronological_cocycle_law(seed in any::<u64>(), r_idx in 0usize..3, gap1 in 1usize..3, gap2 in 1usize..3) {
        let mut r = rng(seed);
        let grid = Grid::new(1.0, 8).unwrap();
        let schedule: Vec<Generator> = (0..8).map(|_| random_generator(&mut r, 1, 1)).collect();
        let x = dilation_operator(grid, &schedule).unwrap();
        let h = grid.h();
        let (t0, t1, t2) = (r_idx as f64 * h, (r_idx + gap1) as f64 * h, (r_idx + gap1 + gap2) as f64 * h);
        for chain in enumerate_chains(&grid, 3).unwrap() {
            let whole = chronological_product(&x, &chain, t0, t2).unwrap();
            let split = chronological_product(&x, &chain, t1, t2).unwrap() * chronological_product(&x, &chain, t0, t1).unwrap();
            prop_assert!((whole - split).norm() <= 1e-13);
        }
    }

    #[test]
    fn duhamel_solvers_agree(seed in any::<u64>(), len in 0usize..5) {
        let mut r = rng(seed);
        let (d, f, n) = (r.random_range(1..=2usize), r.random_range(2..=3usize), 6usize);
        let exponent = |r: &mut ChaCha8Rng| {
            let base: Vec<CMatrix> = (0..n).map(|_| random::matrix(r, d * f, d * f) * real(0.4)).collect();
            let coupling: Vec<CMatrix> = (0..n).map(|_| random::matrix(r, d * f, d * f) * real(0.2)).collect();
            Exponent::chain_dependent(move |x, rest| {
                rest.points().iter().fold(base[x].clone(), |m, &y| m + &coupling[x] * real(1.0 / (1.0 + y as f64)))
            })
        };
        let p = DuhamelProblem { grid: Grid::new(1.0, n).unwrap(), system_dim: d, fiber_dim: f, k: exponent(&mut r), l: exponent(&mut r) };
        let mut pts: Vec<usize> = (0..n).collect();
        for i in 0..len {
            let j = r.random_range(i..n);
            pts.swap(i, j);
        }
        let chain = Chain::new(pts[..len].to_vec()).unwrap();
        let size = d * f.pow(len as u32);
        let t0 = random::matrix(&mut r, size, size);
        let t = r.random_range(0.0..=1.0);
        let direct = direct_solve(&p, &t0, t, &chain).unwrap();
        prop_assert!((duhamel_solve(&p, &t0, t, &chain).unwrap() - &direct).camax() <= 1e-12);
        prop_assert!((multiple_sum_kernel(&p, &t0, t, &chain).unwrap() - &direct).camax() <= 1e-12);
    }

    #[test]
    fn kraus_layer_invariants(seed in any::<u64>(), d in 1usize..4, count in 1usize..4, nu in 0.1f64..10.0) {
        let mut r = rng(seed);
        let jumps = contractive_jumps(&mut r, count, d);
        let family = KrausFamily::from_jumps(&jumps).unwrap();
        let rho = DensityOperator::new(random::density(&mut r, d)).unwrap();
        let out = decoherence_map(&rho, &family).unwrap();
        prop_assert!((trace(out.matrix()).re - 1.0).abs() <= 1e-13);

        let g = apparatus_unitary(&jumps).unwrap();
        prop_assert!(unitarity_residual(&g) <= 1e-12);
        let marginal = apparatus_marginal(&g, rho.matrix()).unwrap();
        prop_assert!(frobenius(&(marginal - out.matrix())) <= 1e-12);

        let psi = random::unit_vector(&mut r, d);
        prop_assert!(output_intensities(&psi, &g, nu).unwrap().sum_residual <= 1e-12);
    }

    #[test]
    fn causality_defect_tracks_commutation(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let rho = DensityOperator::new(random::density(&mut r, d)).unwrap();
        // commuting: coordinate projectors
        let mask = |bits: u32| CMatrix::from_diagonal(&CVector::from_iterator(d, (0..d).map(|i| real(((bits >> i) & 1) as f64))));
        let (a, b) = (r.random_range(0..1u32 << d), r.random_range(0..1u32 << d));
        let good = causality_check(&mask(a), &mask(b), &rho).unwrap();
        prop_assert!(good.commutator_norm <= 1e-12);
        prop_assert!(good.defect <= 1e-12);
        // a rotated rank-one projector against a coordinate one
        let v = random::unit_vector(&mut r, d);
        let p = &v * v.adjoint();
        let m = mask(1);
        let report = causality_check(&p, &m, &rho).unwrap();
        prop_assert!((report.commutator_norm - frobenius(&commutator(&p, &m))).abs() <= 1e-12);
    }

    #[test]
    fn trajectories_are_reproducible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random::hermitian(&mut r, 2);
        let jumps = contractive_jumps(&mut r, 2, 2);
        let model = TrajectoryModel::from_jumps(h, &jumps, 3.0, random::unit_vector(&mut r, 2)).unwrap();
        prop_assert_eq!(model.sample(1.0, seed).unwrap(), model.sample(1.0, seed).unwrap());
    }
}
