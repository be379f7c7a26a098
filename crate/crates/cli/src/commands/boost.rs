use eventum::chain::Grid;
use eventum::dilation::boosted_dynamics_check;
use eventum::linalg::{basis, projector, real, CMatrix};
use serde::Serialize;

use crate::config::{usage, ExperimentConfig};
use crate::report::{Check, Report};

const IDENTITY_BOUND: f64 = 1e-13;

#[derive(Debug, Serialize)]
pub struct Details {
    pub nu: f64,
    pub horizon: f64,
    pub grid_n: usize,
    pub n_max: usize,
    pub tail_bound: f64,
    pub grid_bound: f64,
    pub expectation_re: f64,
    pub expectation_im: f64,
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Report<Details>> {
    let nu = cfg.positive(cfg.nu, 2.0, "nu")?;
    let t = cfg.positive(cfg.horizon, 1.0, "horizon")?;
    let tol = cfg.positive(cfg.tol, 5e-2, "tol")?;
    let n = cfg.count(cfg.grid_n, 2048, "grid_n")?;
    let n_max = cfg.n_max.unwrap_or(12);
    let h = cfg.hamiltonian_or(CMatrix::from_element(1, 1, real(std::f64::consts::FRAC_PI_2)))?;
    let d = h.nrows();
    let ls = cfg.lindblad_or(vec![CMatrix::from_element(1, 1, real(0.7))], d)?;
    if ls.is_empty() {
        return Err(usage("boost needs at least one Lindblad operator"));
    }
    let psi = cfg.initial_state_or(basis(d, 0))?;
    if psi.len() != d {
        return Err(usage(format!("initial_state has length {}, the system dimension is {d}", psi.len())));
    }

    let r = boosted_dynamics_check(&h, &ls, nu, t, Grid::new(t, n)?, n_max, &projector(&psi))?;
    let bound = r.expectation.total_bound();
    let checks = vec![
        Check::at_most("υ★π(dt)υ − νπ(dt)", r.dt_residual, 0.0),
        Check::at_most("|E[G^⊙] − e^(−iHνt)| within tail + grid", r.expectation_error, bound),
        Check::at_most("tail + grid bound", bound, tol),
        Check::at_most("V★_ν ρ V_ν − ν V★ρV", r.master_residual, IDENTITY_BOUND),
        Check::at_most("boosted row (I, √ν L̃, νK)", r.row_residual, IDENTITY_BOUND),
    ];
    let e = r.expectation.value[(0, 0)];
    Ok(Report::new(
        "boost",
        checks,
        Details {
            nu,
            horizon: t,
            grid_n: n,
            n_max,
            tail_bound: r.expectation.tail_bound,
            grid_bound: r.expectation.grid_bound,
            expectation_re: e.re,
            expectation_im: e.im,
        },
    ))
}
