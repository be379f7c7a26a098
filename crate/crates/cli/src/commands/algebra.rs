use eventum::dilation::Generator;
use eventum::ito::ItoElement;
use eventum::linalg::{random, sigma_minus, sigma_z};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::report::{Check, Report};

#[derive(Debug, Serialize)]
pub struct Details {
    pub hp_products: String,
    pub damping_residual: f64,
    pub corrupt_damping: bool,
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Report<Details>> {
    let tol = cfg.positive(cfg.tol, 1e-12, "tol")?;
    let instances = cfg.count(cfg.instances, 100, "instances")?;
    let h = cfg.hamiltonian_or(sigma_z())?;
    let d = h.nrows();
    let ls = cfg.lindblad_or(vec![sigma_minus()], d)?;
    let mut checks = Vec::new();

    let basis = ItoElement::scalar_basis();
    let mut star: f64 = 0.0;
    for (na, a) in &basis {
        for (nb, b) in &basis {
            let lhs = a.represent().try_mul(&b.represent())?;
            let residual = lhs.distance(&a.product(b)?.represent());
            checks.push(Check::at_most(format!("hp {na}·{nb}"), residual, tol));
        }
        star = star.max(a.star().represent().distance(&a.represent().pseudo_adjoint()));
    }
    let hp_passed = checks.iter().filter(|c| c.pass).count();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(1));
    let mut hom: f64 = 0.0;
    for _ in 0..instances {
        let m = 3 * 2;
        let a = ItoElement::from_table(2, 2, random::matrix(&mut rng, m, m))?;
        let b = ItoElement::from_table(2, 2, random::matrix(&mut rng, m, m))?;
        hom = hom.max(a.represent().try_mul(&b.represent())?.distance(&a.product(&b)?.represent()));
        star = star.max(a.star().represent().distance(&a.represent().pseudo_adjoint()));
    }
    checks.push(Check::at_most("homomorphism (n=2, d=2)", hom, tol));
    checks.push(Check::at_most("pseudo-adjoint", star, tol));

    let g = if cfg.corrupt_damping {
        Generator::damping_free(&h, &ls)?
    } else {
        Generator::lindblad(&h, &ls, None)?
    };
    let pu = g.pseudo_unitarity(tol);
    checks.push(Check::at_most("pseudo-unitarity", pu.residual, tol));
    log::info!("pseudo-unitarity residual {:.3e}", pu.residual);
    Ok(Report::new(
        "verify-algebra",
        checks,
        Details {
            hp_products: format!("{hp_passed}/{}", basis.len() * basis.len()),
            damping_residual: pu.damping,
            corrupt_damping: cfg.corrupt_damping,
        },
    ))
}
