use eventum::chain::{Chain, Grid};
use eventum::duhamel::{
    direct_solve, duhamel_solve, expanded_kernel, multiple_sum_kernel, DuhamelProblem, Exponent, SUBSET_LIMIT,
};
use eventum::linalg::{random, real, CMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{usage, ExperimentConfig};
use crate::report::{Check, Report};

#[derive(Debug, Serialize)]
pub struct Details {
    pub instances: usize,
    pub seed: u64,
    pub grid_n: usize,
    pub max_chain: usize,
    pub max_duhamel: f64,
    pub max_kernel: f64,
    pub max_expanded: f64,
}

/// `K(x, ϑ) = K_x + Σ_{y∈ϑ} C_x / (1 + y)`: depends on the rest of the chain.
fn exponent(rng: &mut ChaCha8Rng, n: usize, size: usize) -> Exponent {
    let base: Vec<CMatrix> = (0..n).map(|_| random::matrix(rng, size, size) * real(0.4)).collect();
    let coupling: Vec<CMatrix> = (0..n).map(|_| random::matrix(rng, size, size) * real(0.2)).collect();
    Exponent::chain_dependent(move |x, rest| {
        rest.points()
            .iter()
            .fold(base[x].clone(), |m, &y| m + &coupling[x] * real(1.0 / (1.0 + y as f64)))
    })
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Report<Details>> {
    let instances = cfg.count(cfg.instances, 200, "instances")?;
    let tol = cfg.positive(cfg.tol, 1e-12, "tol")?;
    let n = cfg.count(cfg.grid_n, 6, "grid_n")?;
    let max_chain = cfg.n_max.unwrap_or(4).min(n);
    if max_chain > SUBSET_LIMIT {
        return Err(usage(format!("n_max {max_chain} exceeds the subset limit {SUBSET_LIMIT}")));
    }
    let seed = cfg.seed.unwrap_or(5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_duhamel, mut worst_kernel, mut worst_expanded): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..instances {
        let d = rng.random_range(1..=2);
        let f = rng.random_range(2..=3);
        let p = DuhamelProblem {
            grid: Grid::new(1.0, n)?,
            system_dim: d,
            fiber_dim: f,
            k: exponent(&mut rng, n, d * f),
            l: exponent(&mut rng, n, d * f),
        };
        let len = rng.random_range(0..=max_chain);
        let mut pts: Vec<usize> = (0..n).collect();
        for i in 0..len {
            let j = rng.random_range(i..n);
            pts.swap(i, j);
        }
        let chain = Chain::new(pts[..len].to_vec())?;
        let size = d * f.pow(len as u32);
        let t0 = random::matrix(&mut rng, size, size);
        let t = rng.random_range(0.0..=1.0);
        let direct = direct_solve(&p, &t0, t, &chain)?;
        worst_duhamel = worst_duhamel.max((duhamel_solve(&p, &t0, t, &chain)? - &direct).camax());
        worst_kernel = worst_kernel.max((multiple_sum_kernel(&p, &t0, t, &chain)? - &direct).camax());
        worst_expanded = worst_expanded.max((expanded_kernel(&p, &t0, t, &chain)? - &direct).camax());
    }
    let checks = vec![
        Check::at_most("max |duhamel − direct|", worst_duhamel, tol),
        Check::at_most("max |multiple-sum kernel − direct|", worst_kernel, tol),
        Check::at_most("max |expanded kernel − direct|", worst_expanded, tol),
    ];
    Ok(Report::new(
        "duhamel",
        checks,
        Details {
            instances,
            seed,
            grid_n: n,
            max_chain,
            max_duhamel: worst_duhamel,
            max_kernel: worst_kernel,
            max_expanded: worst_expanded,
        },
    ))
}
