//! Trace and report export.
//!
//! CSV floats are written in shortest round-trip form (`{:?}`), so an
//! export → reparse cycle reproduces every f64 bit-exactly; JSON mirrors the
//! type structure with the same lossless number formatting.

use crate::engine::{RunTrace, TraceRecord};
use crate::error::{Error, Result};
use crate::harness::{ReplicationReport, SignCurve};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

impl ExportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn trace_to_csv(trace: &RunTrace) -> String {
    let mut out = String::from("n,gamma,dist_sq,gap,statistic,restart\n");
    for r in &trace.records {
        out.push_str(&format!(
            "{},{:?},{},{},{},{}\n",
            r.n,
            r.gamma,
            opt(r.dist_sq),
            opt(r.gap),
            opt(r.statistic),
            r.restart
        ));
    }
    out
}

pub fn report_to_csv(report: &ReplicationReport) -> String {
    let mut out = String::from("n,mean_gamma,mean_dist_sq,se_dist_sq,mean_gap,se_gap\n");
    for c in &report.checkpoints {
        out.push_str(&format!(
            "{},{:?},{},{},{},{}\n",
            c.n,
            c.mean_gamma,
            opt(c.mean_dist_sq),
            opt(c.se_dist_sq),
            opt(c.mean_gap),
            opt(c.se_gap)
        ));
    }
    out
}

pub fn sign_curve_to_csv(curve: &SignCurve) -> String {
    let mut out = String::from("n,fraction_nonpositive,se,mean_statistic,se_statistic\n");
    for p in &curve.points {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{}\n",
            p.n,
            p.fraction_nonpositive,
            p.se,
            p.mean_statistic,
            opt(p.se_statistic)
        ));
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(path, e))?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn export_trace(trace: &RunTrace, path: &Path, format: ExportFormat) -> Result<()> {
    match format {
        ExportFormat::Csv => write_file(path, &trace_to_csv(trace)),
        ExportFormat::Json => write_file(path, &to_json(trace)),
    }
}

pub fn export_report(report: &ReplicationReport, path: &Path, format: ExportFormat) -> Result<()> {
    match format {
        ExportFormat::Csv => write_file(path, &report_to_csv(report)),
        ExportFormat::Json => write_file(path, &to_json(report)),
    }
}

pub fn export_sign_curve(curve: &SignCurve, path: &Path, format: ExportFormat) -> Result<()> {
    match format {
        ExportFormat::Csv => write_file(path, &sign_curve_to_csv(curve)),
        ExportFormat::Json => write_file(path, &to_json(curve)),
    }
}

/// Reparse of the trace CSV (round-trip checks and external consumers).
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "n,gamma,dist_sq,gap,statistic,restart" {
                return Err(Error::Parse {
                    line: 1,
                    message: "unexpected trace CSV header".into(),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected 6 cells, got {}", cells.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("`{s}` is not a float"),
            })
        };
        let parse_opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f(s).map(Some)
            }
        };
        records.push(TraceRecord {
            n: cells[0].parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("`{}` is not an iteration index", cells[0]),
            })?,
            gamma: parse_f(cells[1])?,
            dist_sq: parse_opt(cells[2])?,
            gap: parse_opt(cells[3])?,
            statistic: parse_opt(cells[4])?,
            restart: match cells[5] {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("`{other}` is not a boolean"),
                    })
                }
            },
        });
    }
    Ok(records)
}
