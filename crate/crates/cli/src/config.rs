//! Experiment configuration: a JSON file with optional fields, then flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use eventum::io::{MatrixSpec, VectorSpec};
use eventum::linalg::{CMatrix, CVector};
use serde::Deserialize;

/// A configuration or usage problem. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub hamiltonian: Option<MatrixSpec>,
    /// Lindblad operators `L_1..L_n`.
    pub lindblad: Option<Vec<MatrixSpec>>,
    /// Measurement jump operators `E_1..E_n`; `E_0` is completed internally.
    pub kraus: Option<Vec<MatrixSpec>>,
    pub initial_state: Option<VectorSpec>,
    /// Drops the damping term from `K` in the pseudo-unitarity suite.
    pub corrupt_damping: bool,
    pub horizon: Option<f64>,
    pub grid_n: Option<usize>,
    pub n_max: Option<usize>,
    pub nu: Option<f64>,
    pub mc_samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub instances: Option<usize>,
    pub sample_points: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Flag values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub nu: Option<f64>,
    pub grid_n: Option<usize>,
    pub n_max: Option<usize>,
    pub mc_samples: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        self.out = o.out.clone().or(self.out);
        self.seed = o.seed.or(self.seed);
        self.tol = o.tol.or(self.tol);
        self.nu = o.nu.or(self.nu);
        self.grid_n = o.grid_n.or(self.grid_n);
        self.n_max = o.n_max.or(self.n_max);
        self.mc_samples = o.mc_samples.or(self.mc_samples);
        self
    }

    pub fn hamiltonian_or(&self, default: CMatrix) -> anyhow::Result<CMatrix> {
        let h = match &self.hamiltonian {
            Some(spec) => matrix(spec, "hamiltonian")?,
            None => default,
        };
        if h.nrows() != h.ncols() || h.nrows() == 0 {
            bail!(usage(format!("hamiltonian must be square and nonempty, got {:?}", h.shape())));
        }
        Ok(h)
    }

    pub fn lindblad_or(&self, default: Vec<CMatrix>, d: usize) -> anyhow::Result<Vec<CMatrix>> {
        operators(self.lindblad.as_deref(), default, d, "lindblad")
    }

    pub fn kraus_or(&self, default: Vec<CMatrix>, d: usize) -> anyhow::Result<Vec<CMatrix>> {
        operators(self.kraus.as_deref(), default, d, "kraus")
    }

    pub fn initial_state_or(&self, default: CVector) -> anyhow::Result<CVector> {
        let psi = self.initial_state.as_ref().map_or(default, VectorSpec::to_vector);
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            bail!(usage(format!("initial_state must be normalized, norm is {norm}")));
        }
        Ok(psi)
    }

    pub fn positive(&self, value: Option<f64>, default: f64, name: &str) -> anyhow::Result<f64> {
        let v = value.unwrap_or(default);
        if !(v.is_finite() && v > 0.0) {
            bail!(usage(format!("{name} must be positive and finite, got {v}")));
        }
        Ok(v)
    }

    pub fn count(&self, value: Option<usize>, default: usize, name: &str) -> anyhow::Result<usize> {
        let v = value.unwrap_or(default);
        if v == 0 {
            bail!(usage(format!("{name} must be at least 1")));
        }
        Ok(v)
    }
}

fn matrix(spec: &MatrixSpec, name: &str) -> anyhow::Result<CMatrix> {
    spec.to_matrix().map_err(|e| usage(format!("{name}: {e}")))
}

fn operators(specs: Option<&[MatrixSpec]>, default: Vec<CMatrix>, d: usize, name: &str) -> anyhow::Result<Vec<CMatrix>> {
    let ops = match specs {
        Some(specs) => specs
            .iter()
            .enumerate()
            .map(|(i, s)| matrix(s, &format!("{name}[{i}]")))
            .collect::<anyhow::Result<Vec<_>>>()?,
        None => default,
    };
    if let Some((i, m)) = ops.iter().enumerate().find(|(_, m)| m.shape() != (d, d)) {
        bail!(usage(format!("{name}[{i}] is {:?}, the system dimension is {d}", m.shape())));
    }
    Ok(ops)
}

/// Reads the config file if given, otherwise starts from defaults.
pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> anyhow::Result<ExperimentConfig> {
    let base = match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| "loading configuration")?,
        None => ExperimentConfig::default(),
    };
    Ok(base.apply(overrides))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"nu": 3.0, "seed": 4}"#).unwrap();
        let cfg = cfg.apply(&Overrides {
            nu: Some(7.0),
            ..Overrides::default()
        });
        assert_eq!(cfg.nu, Some(7.0));
        assert_eq!(cfg.seed, Some(4));
    }

    #[test]
    fn unknown_fields_and_bad_shapes_are_usage_errors() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"nuu": 1}"#).is_err());
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"hamiltonian": [[1, 0], [0, -1]], "lindblad": [[[1]]]}"#).unwrap();
        let h = cfg.hamiltonian_or(CMatrix::zeros(1, 1)).unwrap();
        let err = cfg.lindblad_or(vec![], h.nrows()).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn initial_state_must_be_normalized() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"initial_state": [1, 1]}"#).unwrap();
        assert!(cfg.initial_state_or(CVector::zeros(2)).is_err());
    }
}
