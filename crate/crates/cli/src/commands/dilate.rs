use eventum::chain::Grid;
use eventum::dilation::{
    project_unitary_exponential, project_unitary_step, traceout_step, uniform_schedule, DensityOperator, Generator,
};
use eventum::linalg::{basis, sigma_minus, sigma_z, unitary_exp, CMatrix};
use serde::Serialize;

use crate::config::{usage, ExperimentConfig};
use crate::report::{num, Check, Report, Table};

/// Error of the exponential-cell path for a closed system.
const MACHINE_BOUND: f64 = 1e-12;

#[derive(Debug, Serialize)]
pub struct Details {
    pub horizon: f64,
    pub grids: Vec<usize>,
    pub schrodinger_errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub exponential_error: f64,
    pub damping_errors: Vec<f64>,
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<(Report<Details>, String)> {
    let t = cfg.positive(cfg.horizon, 1.0, "horizon")?;
    let tol = cfg.positive(cfg.tol, 2e-2, "tol")?;
    let finest = cfg.count(cfg.grid_n, 256, "grid_n")?;
    if finest % 4 != 0 {
        return Err(usage(format!("grid_n must be a multiple of 4, got {finest}")));
    }
    let grids = vec![finest / 4, finest / 2, finest];
    let h = cfg.hamiltonian_or(sigma_z())?;
    let exact = unitary_exp(&h, t);
    let schrodinger = Generator::schrodinger(&h)?;

    let mut table = Table::new(["case", "path", "h", "error", "order"]);
    let mut errors = Vec::new();
    for &n in &grids {
        let grid = Grid::new(t, n)?;
        let u = project_unitary_step(&grid, &uniform_schedule(&grid, &schrodinger), t)?;
        errors.push((u - &exact).norm());
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for (i, (&n, &e)) in grids.iter().zip(&errors).enumerate() {
        let order = if i == 0 { String::new() } else { num(orders[i - 1]) };
        table.push(vec!["schrodinger".into(), "step".into(), num(t / n as f64), num(e), order]);
    }

    let grid = Grid::new(t, finest)?;
    let u = project_unitary_exponential(&grid, &uniform_schedule(&grid, &schrodinger), t)?;
    let exponential_error = (u - &exact).norm();
    table.push(vec![
        "schrodinger-L0".into(),
        "exponential".into(),
        num(t / finest as f64),
        num(exponential_error),
        String::new(),
    ]);

    let damping = Generator::lindblad(&CMatrix::zeros(2, 2), &[sigma_minus()], None)?;
    let rho0 = DensityOperator::pure(&basis(2, 1))?;
    let closed = (-t).exp();
    let mut damping_errors = Vec::new();
    for &n in &grids {
        let grid = Grid::new(t, n)?;
        let path = traceout_step(&grid, &uniform_schedule(&grid, &damping), &rho0, t)?;
        let rho11 = path.last().map_or(rho0.matrix()[(1, 1)].re, |s| s.rho[(1, 1)].re);
        damping_errors.push((rho11 - closed).abs());
    }
    let damping_orders: Vec<f64> = damping_errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for (i, (&n, &e)) in grids.iter().zip(&damping_errors).enumerate() {
        let order = if i == 0 { String::new() } else { num(damping_orders[i - 1]) };
        table.push(vec!["amplitude-damping".into(), "step".into(), num(t / n as f64), num(e), order]);
    }

    let mut checks: Vec<Check> = orders
        .iter()
        .enumerate()
        .map(|(i, &o)| Check::near(format!("schrodinger order {}→{}", grids[i], grids[i + 1]), o, 1.0, 0.2))
        .collect();
    checks.push(Check::at_most("schrodinger final error", errors[2], tol));
    checks.push(Check::at_most("L=0 exponential error", exponential_error, MACHINE_BOUND));
    checks.push(Check::at_most("amplitude damping final error", damping_errors[2], tol));

    let report = Report::new(
        "dilate",
        checks,
        Details {
            horizon: t,
            grids,
            schrodinger_errors: errors,
            orders,
            exponential_error,
            damping_errors,
        },
    );
    Ok((report, table.render()))
}
