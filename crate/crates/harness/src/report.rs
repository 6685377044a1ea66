//! Suite outcomes, CSV/JSON emission and provenance.
//!
//! The CSV schema is fixed and versioned through the JSON sidecar; identical
//! config + seed produce byte-identical outputs.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    /// measured value (max residual, fitted order, reduction factor, …)
    pub value: f64,
    /// threshold the value is compared against (sense depends on `op`)
    pub threshold: f64,
    /// "le": pass iff value ≤ threshold; "ge": pass iff value ≥ threshold
    pub op: String,
    pub passed: bool,
    pub details: String,
}

impl Check {
    pub fn le(suite: &str, name: &str, value: f64, threshold: f64, details: String) -> Check {
        Check {
            suite: suite.into(),
            name: name.into(),
            value,
            threshold,
            op: "le".into(),
            passed: value <= threshold && value.is_finite(),
            details,
        }
    }

    pub fn ge(suite: &str, name: &str, value: f64, threshold: f64, details: String) -> Check {
        Check {
            suite: suite.into(),
            name: name.into(),
            value,
            threshold,
            op: "ge".into(),
            passed: value >= threshold && value.is_finite(),
            details,
        }
    }

    /// pass iff |value − threshold| ≤ tol (for fitted orders)
    pub fn near(
        suite: &str,
        name: &str,
        value: f64,
        target: f64,
        tol: f64,
        details: String,
    ) -> Check {
        Check {
            suite: suite.into(),
            name: name.into(),
            value,
            threshold: target,
            op: format!("near±{tol}"),
            passed: (value - target).abs() <= tol && value.is_finite(),
            details,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub checks: Vec<Check>,
    /// free-form numeric tables (convergence series, residual traces)
    pub tables: Vec<Table>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SuiteOutcome {
    pub fn new(suite: &str, config_hash: &str, seed: u64) -> SuiteOutcome {
        SuiteOutcome {
            suite: suite.into(),
            config_hash: config_hash.into(),
            seed,
            code_version: env!("CARGO_PKG_VERSION").into(),
            checks: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn print_summary(&self) {
        for c in &self.checks {
            println!(
                "[{}] {} :: {} = {:.3e} ({} {:.3e})",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.value,
                c.op,
                c.threshold
            );
        }
    }

    /// Write `<dir>/<suite>_checks.csv`, the tables, and a JSON sidecar with
    /// the schema version and provenance.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output dir {}", dir.display()))?;
        let path = dir.join(format!("{}_checks.csv", self.suite));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["suite", "name", "value", "threshold", "op", "passed", "details", "config_hash", "seed"])?;
        for c in &self.checks {
            w.write_record([
                c.suite.as_str(),
                c.name.as_str(),
                &format!("{:.16e}", c.value),
                &format!("{:.16e}", c.threshold),
                c.op.as_str(),
                &c.passed.to_string(),
                c.details.as_str(),
                self.config_hash.as_str(),
                &self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        for t in &self.tables {
            let tpath = dir.join(format!("{}_{}.csv", self.suite, t.name));
            let mut w = csv::Writer::from_path(&tpath)?;
            w.write_record(&t.columns)?;
            for row in &t.rows {
                let rec: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        let sidecar = dir.join(format!("{}_report.json", self.suite));
        #[derive(Serialize)]
        struct Sidecar<'a> {
            csv_schema_version: u32,
            outcome: &'a SuiteOutcome,
        }
        let f = std::fs::File::create(sidecar)?;
        serde_json::to_writer_pretty(f, &Sidecar { csv_schema_version: CSV_SCHEMA_VERSION, outcome: self })?;
        Ok(())
    }
}

/// Write a norm report as CSV (label, p, s, q, value).
pub fn write_norm_report(
    report: &minsurf_core::norms::NormReport,
    dir: &Path,
    stem: &str,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["label", "p", "s", "q", "value"])?;
    for e in &report.entries {
        w.write_record([
            e.label.as_str(),
            &format!("{:?}", e.p),
            &format!("{:?}", e.s),
            &format!("{:?}", e.q),
            &e.value.map(|v| format!("{v:.16e}")).unwrap_or_else(|| "unavailable".into()),
        ])?;
    }
    w.flush()?;
    let side = dir.join(format!("{stem}.json"));
    serde_json::to_writer_pretty(std::fs::File::create(side)?, report)?;
    Ok(())
}
