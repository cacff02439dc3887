//! Report bundles: checks, tables, plot series and the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::formats::table_to_csv;
use crate::LabError;

/// One pass/fail comparison. `measured` passes when it is at most
/// `tolerance`, or at least `tolerance` for lower-bound checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub std_error: f64,
    pub bound: Bound,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64, std_error: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            std_error,
            bound: Bound::AtMost,
            note: String::new(),
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, tolerance: f64, std_error: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured >= tolerance,
            measured,
            tolerance,
            std_error,
            bound: Bound::AtLeast,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub y_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bundle {
    pub experiment: String,
    pub seed: u64,
    pub config: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub series: Vec<Series>,
}

impl Bundle {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary(&self) -> Summary {
        Summary { experiment: self.experiment.clone(), passed: self.passed(), checks: self.checks.clone() }
    }

    pub fn file_names(&self) -> Vec<String> {
        let mut files = vec!["summary.json".to_string(), "manifest.json".to_string(), "plotdata.csv".to_string()];
        files.extend(self.tables.iter().map(|t| format!("{}.csv", t.name)));
        files
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            tool: "spdelab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: self.seed,
            config: self.config.clone(),
            files: self.file_names(),
        }
    }

    /// Write every file of the bundle into `dir`, returning their paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: &str, body: String| -> Result<(), LabError> {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| LabError::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        put("summary.json", to_json(&self.summary()))?;
        put("manifest.json", to_json(&self.manifest()))?;
        put("plotdata.csv", crate::plot::emit_plotdata(self, &[])?)?;
        for t in &self.tables {
            put(&format!("{}.csv", t.name), table_to_csv(t)?)?;
        }
        Ok(written)
    }
}

/// `[1.234e-3, …]` for check notes.
pub fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
