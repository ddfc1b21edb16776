//! Numeric CSV input and output.
//!
//! Lines starting with `#` are comments. A first row that does not parse as
//! numbers is taken as a header. Floats are written with 17 significant
//! digits and integers as integers, so a write/read round trip is exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A numeric table with optional column names.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub names: Option<Vec<String>>,
    pub data: Matrix,
}

impl Table {
    pub fn new(names: Option<Vec<String>>, data: Matrix) -> Self {
        Self { names, data }
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.as_ref()?.iter().position(|n| n == name)
    }
}

/// Parses CSV text.
pub fn parse_csv(text: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut names = None;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if let Some(w) = width {
            if rec.len() != w {
                return Err(Error::RaggedRows {
                    row: line,
                    expected: w,
                    got: rec.len(),
                });
            }
        } else {
            width = Some(rec.len());
            if names.is_none() && rec.iter().any(|f| f.parse::<f64>().is_err()) {
                names = Some(rec.iter().map(str::to_owned).collect());
                continue;
            }
        }
        for (j, f) in rec.iter().enumerate() {
            let v = f.parse::<f64>().map_err(|e| Error::Parse {
                row: line,
                column: j + 1,
                message: format!("{f:?}: {e}"),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    Ok(Table {
        names,
        data: Matrix::from_vec(rows, cols, values)?,
    })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Table> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Shortest exact text for `v`: integers verbatim, other values with 17
/// significant digits.
pub fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

/// Renders a table with leading `# ` comment lines.
pub fn render_csv(table: &Table, comments: &[String]) -> Result<String> {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    let mut wtr = csv::WriterBuilder::new().from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    if let Some(names) = &table.names {
        if names.len() != table.data.cols() {
            return Err(Error::DimensionMismatch {
                expected: table.data.cols(),
                got: names.len(),
            });
        }
        wtr.write_record(names).map_err(io)?;
    }
    for r in table.data.row_iter() {
        wtr.write_record(r.iter().map(|&v| format_value(v))).map_err(io)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?);
    Ok(out)
}

pub fn write_csv(path: impl AsRef<Path>, table: &Table, comments: &[String]) -> Result<()> {
    fs::write(path, render_csv(table, comments)?)?;
    Ok(())
}
