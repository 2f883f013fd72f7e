//! Report files and their integrity check.
//!
//! Per-seed results go to CSV (one row per seed and arm, signed disparities),
//! aggregates and audits to JSON. Floats are written with Rust's shortest
//! round-trip formatting, so reloading a report reproduces the exact values.

use std::path::Path;

use super::{ArmAggregate, AuditRecord, BenchmarkReport, PrepOutput, SweepReport};
use crate::error::{Error, Result};
use crate::metrics::EvaluationReport;

pub const SEED_CSV_HEADER: [&str; 7] = ["seed", "arm", "accuracy", "f1", "ddp", "deo", "dpe"];

/// One row per seed and arm, in run order.
pub fn write_seed_csv(report: &BenchmarkReport, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(SEED_CSV_HEADER)?;
    for row in &report.rows {
        let r = &row.report;
        writer.write_record([
            row.seed_index.to_string(),
            row.arm.clone(),
            r.accuracy.to_string(),
            r.f1.to_string(),
            r.ddp.to_string(),
            r.deo.to_string(),
            r.dpe.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Full report as pretty JSON: aggregates, per-seed rows, audits, failures.
pub fn write_report_json(report: &BenchmarkReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, report)?;
    Ok(())
}

/// Calibration audit as pretty JSON.
pub fn write_audit_json(audit: &AuditRecord, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, audit)?;
    Ok(())
}

/// The prepared table with its appended perturbed-label column.
pub fn write_prep_csv(prep: &PrepOutput, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(&prep.header)?;
    for row in &prep.rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub const SWEEP_CSV_HEADER: [&str; 9] = [
    "delta",
    "accuracy_mean",
    "accuracy_std",
    "f1_mean",
    "f1_std",
    "disparity_mean",
    "disparity_std",
    "disparity_abs_mean",
    "disparity_abs_std",
];

/// One aggregate row per target disparity.
pub fn write_sweep_csv(sweep: &SweepReport, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(SWEEP_CSV_HEADER)?;
    for row in &sweep.rows {
        writer.write_record([
            row.delta.to_string(),
            row.accuracy_mean.to_string(),
            row.accuracy_std.to_string(),
            row.f1_mean.to_string(),
            row.f1_std.to_string(),
            row.disparity_mean.to_string(),
            row.disparity_std.to_string(),
            row.disparity_abs_mean.to_string(),
            row.disparity_abs_std.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn integrity(message: String) -> Error {
    Error::Numeric(format!("report integrity check failed: {message}"))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn stats_close(a: &ArmAggregate, b: &ArmAggregate) -> bool {
    let pairs = [
        (a.accuracy, b.accuracy),
        (a.f1, b.f1),
        (a.ddp, b.ddp),
        (a.deo, b.deo),
        (a.dpe, b.dpe),
        (a.abs_ddp, b.abs_ddp),
        (a.abs_deo, b.abs_deo),
        (a.abs_dpe, b.abs_dpe),
    ];
    pairs.iter().all(|(x, y)| close(x.mean, y.mean) && close(x.std, y.std))
}

/// Re-derives the aggregates from the per-seed CSV and compares them to the
/// JSON report within 1e-9.
pub fn verify_report(json_path: &Path, csv_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(json_path)?;
    let report: BenchmarkReport = serde_json::from_str(&text)?;

    let mut reader = csv::Reader::from_path(csv_path)?;
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != SEED_CSV_HEADER {
        return Err(integrity(format!("unexpected CSV header {header:?}")));
    }
    let mut by_arm: std::collections::BTreeMap<String, Vec<EvaluationReport>> = Default::default();
    let mut csv_rows = 0usize;
    for record in reader.records() {
        let record = record?;
        let number = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| integrity(format!("bad float {:?} in CSV", &record[i])))
        };
        by_arm.entry(record[1].to_string()).or_default().push(EvaluationReport {
            accuracy: number(2)?,
            f1: number(3)?,
            ddp: number(4)?,
            deo: number(5)?,
            dpe: number(6)?,
        });
        csv_rows += 1;
    }
    if csv_rows != report.rows.len() {
        return Err(integrity(format!(
            "CSV has {csv_rows} rows but JSON has {}",
            report.rows.len()
        )));
    }
    if by_arm.len() != report.aggregates.len() {
        return Err(integrity(format!(
            "CSV arms {:?} differ from JSON arms {:?}",
            by_arm.keys().collect::<Vec<_>>(),
            report.aggregates.keys().collect::<Vec<_>>()
        )));
    }
    for (arm, reports) in &by_arm {
        let expected = ArmAggregate::from_reports(reports);
        let stored = report
            .aggregates
            .get(arm)
            .ok_or_else(|| integrity(format!("arm {arm:?} missing from JSON aggregates")))?;
        if !stats_close(&expected, stored) {
            return Err(integrity(format!(
                "aggregates for arm {arm:?} do not match the per-seed rows"
            )));
        }
    }
    Ok(())
}
