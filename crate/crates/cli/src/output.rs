//! In-memory artifacts, written only once a run has completed.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

/// CSV cell formatting: floats with 17 significant digits.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:.16e}")
    }
}

impl Cell for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for i64 {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for bool {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for &str {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl<T: Cell> Cell for Option<T> {
    fn cell(&self) -> String {
        self.as_ref().map(Cell::cell).unwrap_or_default()
    }
}

pub struct Csv {
    body: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { body: header.join(",") + "\n", width: header.len() }
    }

    pub fn row(&mut self, cells: &[&dyn Cell]) {
        debug_assert_eq!(cells.len(), self.width);
        let line: Vec<String> = cells.iter().map(|c| c.cell()).collect();
        let _ = writeln!(self.body, "{}", line.join(","));
    }

    pub fn finish(self) -> String {
        self.body
    }
}

#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }

    pub fn csv(&mut self, name: impl Into<String>, csv: Csv) {
        self.add(name, csv.finish());
    }

    pub fn json(&mut self, name: impl Into<String>, value: &impl Serialize) {
        let body = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
        self.add(name, body);
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|f| f.0.clone()).collect()
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Outcome of one asserted threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
}

#[derive(Default)]
pub struct Checks(pub Vec<Check>);

impl Checks {
    pub fn at_most(&mut self, name: &str, value: f64, limit: Option<f64>) {
        if let Some(l) = limit {
            self.0.push(Check { name: name.into(), value, limit: format!("<= {l}"), passed: value <= l });
        }
    }

    pub fn at_least(&mut self, name: &str, value: f64, limit: Option<f64>) {
        if let Some(l) = limit {
            self.0.push(Check { name: name.into(), value, limit: format!(">= {l}"), passed: value >= l });
        }
    }

    pub fn within(&mut self, name: &str, value: f64, band: Option<(f64, f64)>) {
        if let Some((lo, hi)) = band {
            let passed = (lo..=hi).contains(&value);
            self.0.push(Check { name: name.into(), value, limit: format!("in [{lo}, {hi}]"), passed });
        }
    }

    /// An intrinsic requirement that is always asserted.
    pub fn require(&mut self, name: &str, ok: bool) {
        self.0.push(Check { name: name.into(), value: ok as u8 as f64, limit: "true".into(), passed: ok });
    }

    pub fn passed(&self) -> bool {
        self.0.iter().all(|c| c.passed)
    }
}
