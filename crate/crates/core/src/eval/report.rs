//! CSV tables and the plain-text summary.

use std::fmt::Write as _;
use std::path::Path;

use super::cross::CrossCell;
use super::stats::{stars, Correlation};
use super::subsample::SubsampleRow;
use super::sweep::SweepRow;
use super::table::{format_score, ScoreTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: String,
    pub correlation: Option<Correlation>,
    /// Why the correlation is missing.
    pub note: Option<String>,
}

pub fn evaluate_methods(table: &ScoreTable) -> Vec<MethodResult> {
    table
        .methods()
        .iter()
        .map(|m| match table.correlation(m) {
            Ok(c) => MethodResult {
                method: m.clone(),
                correlation: Some(c),
                note: None,
            },
            Err(e) => MethodResult {
                method: m.clone(),
                correlation: None,
                note: Some(e.to_string()),
            },
        })
        .collect()
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::invalid(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(format_score).unwrap_or_default()
}

pub fn write_evaluation_csv(results: &[MethodResult], path: &Path) -> Result<()> {
    let rows = results
        .iter()
        .map(|m| {
            let c = m.correlation;
            vec![
                m.method.clone(),
                c.map(|c| c.n.to_string()).unwrap_or_default(),
                opt(c.map(|c| c.r)),
                opt(c.map(|c| c.r.abs())),
                opt(c.map(|c| c.p)),
                c.map(|c| stars(c.p).to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(path, &["method", "groups", "r", "abs_r", "p", "stars"], rows)
}

/// Fixed-width table; significance marked `*` p<0.05, `**` p<0.01, `***` p<0.001.
pub fn summary_text(results: &[MethodResult]) -> String {
    let width = results.iter().map(|m| m.method.len()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>7}  {:>9}  groups", "method", "r", "p");
    for m in results {
        match (m.correlation, &m.note) {
            (Some(c), _) => {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>7}  {:>9.2e}  {}",
                    m.method,
                    format!("{:.3}{}", c.r, stars(c.p)),
                    c.p,
                    c.n
                );
            }
            (None, note) => {
                let _ = writeln!(out, "{:<width$}  undefined: {}", m.method, note.as_deref().unwrap_or(""));
            }
        }
    }
    out.push_str("significance: * p<0.05, ** p<0.01, *** p<0.001\n");
    out
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let out = rows
        .iter()
        .map(|r| {
            vec![
                r.method.clone(),
                r.snr_db.map(format_score).unwrap_or_else(|| "clean".into()),
                r.groups.to_string(),
                opt(r.correlation.map(|c| c.r)),
                opt(r.correlation.map(|c| c.p)),
                opt(r.rmse_vs_clean),
            ]
        })
        .collect();
    write_csv(path, &["method", "snr_db", "groups", "r", "p", "rmse_vs_clean"], out)
}

pub fn write_subsample_csv(rows: &[SubsampleRow], path: &Path) -> Result<()> {
    let out = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.repeats.to_string(),
                format_score(r.mean_r),
                format_score(r.ci_low),
                format_score(r.ci_high),
            ]
        })
        .collect();
    write_csv(path, &["n", "repeats", "mean_r", "ci_low", "ci_high"], out)
}

pub fn write_cross_csv(cells: &[CrossCell], path: &Path) -> Result<()> {
    let out = cells
        .iter()
        .map(|c| {
            vec![
                c.train.clone(),
                c.test.clone(),
                c.correlation.n.to_string(),
                format_score(c.correlation.r),
                format_score(c.correlation.r.abs()),
                format_score(c.correlation.p),
            ]
        })
        .collect();
    write_csv(path, &["train", "test", "groups", "r", "abs_r", "p"], out)
}
