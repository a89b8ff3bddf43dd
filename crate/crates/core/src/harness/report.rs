//! Report serialization.
//!
//! CSV columns, in order:
//! `method,scheme,r,replications,failures,mean_size,mse,mse_se,coverage,admissible`
//! followed by `d1_ms,d1_pilot_ms,d2_ms` when timing is included. Reals are
//! written with 17 significant digits. JSON output is the serde form of
//! [`ExperimentReport`]; its schema ships as `schema/report.schema.json`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::csvio::format_f64;
use crate::harness::experiment::{ExperimentReport, Record};

pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

const BASE_COLUMNS: [&str; 10] = [
    "method",
    "scheme",
    "r",
    "replications",
    "failures",
    "mean_size",
    "mse",
    "mse_se",
    "coverage",
    "admissible",
];
const TIMING_COLUMNS: [&str; 3] = ["d1_ms", "d1_pilot_ms", "d2_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: impl AsRef<Path>, include_timing: bool) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    write_report(report, format, &mut out, include_timing)?;
    out.flush()?;
    Ok(())
}

pub fn write_report<W: Write>(report: &ExperimentReport, format: ReportFormat, out: W, include_timing: bool) -> Result<()> {
    match format {
        ReportFormat::Csv => write_csv(report, out, include_timing),
        ReportFormat::Json => {
            if include_timing {
                serde_json::to_writer_pretty(out, report)?;
            } else {
                let mut r = report.clone();
                for rec in &mut r.records {
                    rec.d1_ms = 0.0;
                    rec.d1_pilot_ms = 0.0;
                    rec.d2_ms = 0.0;
                }
                serde_json::to_writer_pretty(out, &r)?;
            }
            Ok(())
        }
    }
}

fn write_csv<W: Write>(report: &ExperimentReport, out: W, include_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if include_timing {
        header.extend(TIMING_COLUMNS);
    }
    w.write_record(&header)?;
    for rec in &report.records {
        let mut row = vec![
            rec.method.to_string(),
            rec.scheme.to_string(),
            format_f64(rec.r),
            rec.replications.to_string(),
            rec.failures.to_string(),
            format_f64(rec.mean_size),
            format_f64(rec.mse),
            format_f64(rec.mse_se),
            format_f64(rec.coverage),
            format_f64(rec.admissible),
        ];
        if include_timing {
            row.extend([rec.d1_ms, rec.d1_pilot_ms, rec.d2_ms].map(format_f64));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a CSV report back into records. Missing timing columns read as 0.
pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<Record>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    for name in BASE_COLUMNS {
        if col(name).is_none() {
            return Err(Error::DimensionMismatch(format!("report is missing column `{name}`")));
        }
    }
    let mut records = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let field = |name: &str| -> Option<&str> { col(name).and_then(|j| row.get(j)) };
        let num = |name: &str| -> Result<f64> {
            match field(name) {
                None => Ok(0.0),
                Some(s) => s.parse().map_err(|_| Error::Parse {
                    line,
                    column: col(name).unwrap_or(0) + 1,
                    message: format!("`{s}` is not a number"),
                }),
            }
        };
        let parse_err = |name: &str, e: Error| Error::Parse {
            line,
            column: col(name).unwrap_or(0) + 1,
            message: e.to_string(),
        };
        records.push(Record {
            method: field("method").unwrap_or("").parse().map_err(|e| parse_err("method", e))?,
            scheme: field("scheme").unwrap_or("").parse().map_err(|e| parse_err("scheme", e))?,
            r: num("r")?,
            replications: num("replications")? as usize,
            failures: num("failures")? as usize,
            mean_size: num("mean_size")?,
            mse: num("mse")?,
            mse_se: num("mse_se")?,
            coverage: num("coverage")?,
            admissible: num("admissible")?,
            d1_ms: num("d1_ms")?,
            d1_pilot_ms: num("d1_pilot_ms")?,
            d2_ms: num("d2_ms")?,
        });
    }
    Ok(records)
}
