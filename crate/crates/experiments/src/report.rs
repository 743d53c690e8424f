//! Report assembly and output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use choquard_core::io::{csv_text, write_field_with_meta, NdjsonWriter};
use choquard_core::solver::SolverResult;
use choquard_core::Field;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Kind};
use crate::error::Result;

/// SHA-256 over `blob <len>\0<bytes>`, hex encoded.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Scientific notation with enough digits to compare energies.
pub fn sci(x: f64) -> String {
    format!("{x:.12e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextTable {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new(title: impl Into<String>, header: &[&str]) -> Self {
        Self {
            title: title.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn markdown(&self) -> String {
        let mut s = format!("### {}\n\n| {} |\n|", self.title, self.header.join(" | "));
        for _ in &self.header {
            s.push_str("---|");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "| {} |", r.join(" | "));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub kind: Kind,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub tables: Vec<TextTable>,
    pub metrics_header: Vec<String>,
    pub metrics: Vec<Vec<f64>>,
    pub config_text: String,
    pub config_hash: String,
    pub inputs: Vec<(PathBuf, String)>,
    pub elapsed_secs: f64,
}

impl Report {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            kind: cfg.kind,
            checks: Vec::new(),
            notes: Vec::new(),
            tables: Vec::new(),
            metrics_header: Vec::new(),
            metrics: Vec::new(),
            config_text: cfg.resolved_text(),
            config_hash: cfg.content_hash(),
            inputs: cfg.inputs.iter().map(|f| (f.path.clone(), f.hash())).collect(),
            elapsed_secs: 0.0,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn set_metrics(&mut self, header: &[&str], rows: Vec<Vec<f64>>) {
        self.metrics_header = header.iter().map(|s| s.to_string()).collect();
        self.metrics = rows;
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn markdown(&self) -> String {
        let mut s = format!("# choquard-gs {}\n\n", self.kind.as_str());
        let passed = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(
            s,
            "Result: **{}** ({passed}/{} checks passed, {:.2} s)\n",
            if self.all_passed() { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.elapsed_secs
        );
        s.push_str("## Checks\n\n| status | check | detail |\n|---|---|---|\n");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "| {} | {} | {} |",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail.replace('|', "/")
            );
        }
        s.push('\n');
        if !self.tables.is_empty() {
            s.push_str("## Results\n\n");
            for t in &self.tables {
                s.push_str(&t.markdown());
                s.push('\n');
            }
        }
        if !self.notes.is_empty() {
            s.push_str("## Notes\n\n");
            for n in &self.notes {
                let _ = writeln!(s, "- {n}");
            }
            s.push('\n');
        }
        s.push_str("## Reproducibility\n\n");
        let _ = writeln!(s, "Content hash: `{}`\n", self.config_hash);
        for (path, hash) in &self.inputs {
            let _ = writeln!(s, "- input `{}`: `{hash}`", path.display());
        }
        let _ = write!(s, "\nResolved configuration:\n\n```toml\n{}```\n", self.config_text);
        s
    }

    pub fn metrics_csv(&self) -> String {
        let header: Vec<&str> = self.metrics_header.iter().map(String::as_str).collect();
        csv_text(&header, self.metrics.iter().cloned())
    }

    /// Write `report.md` and `metrics.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.md"), self.markdown())?;
        std::fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        Ok(())
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    run: &'a str,
    #[serde(flatten)]
    record: &'a choquard_core::solver::IterRecord,
}

/// Optional output directory for traces and fields.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    dir: Option<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: Option<&Path>) -> Self {
        Self {
            dir: dir.map(Path::to_path_buf),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, name: &str) -> Result<Option<PathBuf>> {
        match &self.dir {
            None => Ok(None),
            Some(d) => {
                std::fs::create_dir_all(d)?;
                Ok(Some(d.join(name)))
            }
        }
    }

    /// Per-iteration records of every run, one JSON object per line, in
    /// `trace.ndjson`.
    pub fn traces(&self, runs: &[(String, &SolverResult)]) -> Result<()> {
        let Some(path) = self.path("trace.ndjson")? else {
            return Ok(());
        };
        let mut w = NdjsonWriter::create(path)?;
        for (label, r) in runs {
            for rec in &r.records {
                w.write(&TraceLine { run: label, record: rec })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn field(&self, label: &str, f: &Field, provenance: serde_json::Value) -> Result<()> {
        if let Some(path) = self.path(&format!("{label}.field"))? {
            write_field_with_meta(path, f, provenance)?;
        }
        Ok(())
    }

    pub fn text(&self, name: &str, content: &str) -> Result<()> {
        if let Some(path) = self.path(name)? {
            std::fs::write(path, content)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git_object_format() {
        // sha256 of "blob 0\0"
        assert_eq!(
            blob_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
        assert_ne!(blob_hash(b"a"), blob_hash(b"b"));
    }

    #[test]
    fn check_lines_carry_status() {
        assert!(Check::new("x", true, "ok").line().starts_with("PASS x"));
        assert!(Check::new("y", false, "no").line().starts_with("FAIL y"));
    }
}
