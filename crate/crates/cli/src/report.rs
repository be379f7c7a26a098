//! Machine-readable results: named checks plus any tables a command produces.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::usage;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// Passes when `|value − target| ≤ bound`; `value` keeps the raw measurement.
    pub fn near(name: impl Into<String>, value: f64, target: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: (value - target).abs() <= bound,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub command: &'static str,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub total: usize,
    pub details: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &'static str, checks: Vec<Check>, details: T) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        Self {
            command,
            total: checks.len(),
            passed,
            checks,
            details,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.passed == self.total
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Where a command writes its files; `None` means stdout only.
pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<&Path>) -> anyhow::Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).map_err(|e| usage(format!("cannot create output directory {}: {e}", d.display())))?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
        })
    }

    pub fn write(&self, name: &str, contents: &[u8]) -> anyhow::Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            fs::write(&path, contents).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
            log::info!("wrote {}", path.display());
        }
        Ok(())
    }
}

/// CSV with a header row; numbers in shortest round-trip form.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn num(x: f64) -> String {
    format!("{x:?}")
}
