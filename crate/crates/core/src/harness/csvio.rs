//! Dataset CSV ingestion and export.
//!
//! Exported values use 17 significant digits (`{:.16e}`), which round-trips
//! every finite `f64` exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Dataset, DenseMatrix};

/// Response column selector: zero-based index or header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn load_csv(path: impl AsRef<Path>, y_column: &ColumnRef, header: bool) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    read_csv(BufReader::new(file), y_column, header)
}

/// Parse a rectangular numeric table; the `y_column` becomes the response
/// and every other column, in order, the design.
pub fn read_csv<R: Read>(reader: R, y_column: &ColumnRef, header: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut y_index: Option<usize> = match y_column {
        ColumnRef::Index(i) => Some(*i),
        ColumnRef::Name(_) => None,
    };
    let mut width: Option<usize> = None;
    if header {
        let rec = match records.next() {
            Some(r) => r?,
            None => return Err(Error::DimensionMismatch("CSV has no header row".into())),
        };
        width = Some(rec.len());
        if let ColumnRef::Name(name) = y_column {
            y_index = rec.iter().position(|h| h == name);
            if y_index.is_none() {
                return Err(Error::DimensionMismatch(format!("no column named `{name}` in header")));
            }
        }
    } else if let ColumnRef::Name(name) = y_column {
        return Err(Error::InvalidArgument(format!(
            "response column `{name}` given by name but the file has no header"
        )));
    }

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut rows = 0usize;
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::DimensionMismatch(format!(
                "line {line} has {} fields, expected {w}",
                rec.len()
            )));
        }
        let yi = y_index.expect("set above");
        if yi >= w {
            return Err(Error::DimensionMismatch(format!("response column {yi} out of range for {w} columns")));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: j + 1,
                message: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("`{field}` is not finite"),
                });
            }
            if j == yi {
                y.push(v);
            } else {
                x.push(v);
            }
        }
        rows += 1;
    }
    let w = width.unwrap_or(0);
    if rows == 0 || w < 2 {
        return Err(Error::DimensionMismatch(format!(
            "need at least one row and two columns (got {rows} rows, {w} columns)"
        )));
    }
    Dataset::new(DenseMatrix::new(rows, w - 1, x)?, y)
}

/// Write `x1..xd,y` with a header row.
pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_csv_to(BufWriter::new(file), data)
}

pub fn write_csv_to<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = data.d();
    let mut head: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    head.push("y".into());
    w.write_record(&head)?;
    let mut buf: Vec<String> = Vec::with_capacity(d + 1);
    for i in 0..data.n() {
        buf.clear();
        buf.extend(data.x.row(i).iter().map(|&v| format_f64(v)));
        buf.push(format_f64(data.y[i]));
        w.write_record(&buf)?;
    }
    w.flush()?;
    Ok(())
}
