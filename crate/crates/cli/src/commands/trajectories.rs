use eventum::io::write_jsonl;
use eventum::linalg::{basis, real, sigma_minus, sigma_x};
use eventum::measurement::{ensemble_summary, TrajectoryModel};
use serde::Serialize;

use crate::config::{usage, ExperimentConfig};
use crate::report::{num, Check, Report, Table};

const REFERENCE_STEPS_PER_UNIT: usize = 2000;

#[derive(Debug, Serialize)]
pub struct Details {
    pub samples: usize,
    pub seed: u64,
    pub nu: f64,
    pub horizon: f64,
    pub mean_jumps: f64,
    pub max_distance: f64,
    pub max_error_bar: f64,
}

pub struct Artifacts {
    pub records: Vec<u8>,
    pub summary: String,
}

pub fn run(cfg: &ExperimentConfig, workers: Option<usize>) -> anyhow::Result<(Report<Details>, Artifacts)> {
    let horizon = cfg.positive(cfg.horizon, 1.0, "horizon")?;
    let nu = cfg.nu.unwrap_or(5.0);
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(usage(format!("nu must be nonnegative and finite, got {nu}")));
    }
    let tol = cfg.positive(cfg.tol, 5e-2, "tol")?;
    let samples = cfg.count(cfg.mc_samples, 10_000, "mc_samples")?;
    let points = cfg.count(cfg.sample_points, 10, "sample_points")?;
    let seed = cfg.seed.unwrap_or(10);
    let h = cfg.hamiltonian_or(sigma_x())?;
    let d = h.nrows();
    let jumps = cfg.kraus_or(vec![sigma_minus() * real(0.5)], d)?;
    let psi0 = cfg.initial_state_or(basis(d, 0))?;
    if psi0.len() != d {
        return Err(usage(format!("initial_state has length {}, the system dimension is {d}", psi0.len())));
    }

    let model = TrajectoryModel::from_jumps(h, &jumps, nu, psi0)?;
    log::info!("sampling {samples} trajectories");
    let records = model.sample_ensemble(horizon, seed, samples, workers)?;
    let times: Vec<f64> = (0..=points).map(|i| horizon * i as f64 / points as f64).collect();
    let summary = ensemble_summary(&model, &records, &times, REFERENCE_STEPS_PER_UNIT)?;

    let mut header = vec!["time".to_string()];
    for i in 0..d {
        for j in 0..d {
            header.push(format!("rho{i}{j}_re"));
            header.push(format!("rho{i}{j}_im"));
        }
    }
    header.extend(["trace_distance".to_string(), "error_bar".to_string()]);
    let mut table = Table::new(header);
    for p in &summary {
        let mut row = vec![num(p.time)];
        for i in 0..d {
            for j in 0..d {
                row.push(num(p.rho[(i, j)].re));
                row.push(num(p.rho[(i, j)].im));
            }
        }
        row.extend([num(p.distance), num(p.error_bar)]);
        table.push(row);
    }

    let mean_jumps = records.iter().map(|r| r.jumps.len() as f64).sum::<f64>() / samples as f64;
    let sigma = (nu * horizon / samples as f64).sqrt();
    let max_distance = summary.iter().map(|p| p.distance).fold(0.0, f64::max);
    let max_error_bar = summary.iter().map(|p| p.error_bar).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("max trace distance to reference", max_distance, tol),
        Check::near("mean jump count", mean_jumps, nu * horizon, 3.0 * sigma),
    ];

    let mut jsonl = Vec::new();
    write_jsonl(&mut jsonl, &records)?;
    let report = Report::new(
        "trajectories",
        checks,
        Details {
            samples,
            seed,
            nu,
            horizon,
            mean_jumps,
            max_distance,
            max_error_bar,
        },
    );
    Ok((
        report,
        Artifacts {
            records: jsonl,
            summary: table.render(),
        },
    ))
}
