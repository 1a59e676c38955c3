//! CSV formats.
//!
//! - combined data: header `y,x1,…,xp` (column order free), one row per
//!   observation;
//! - design: header `x1,…,xp`;
//! - response: single column `y` with 0/1 entries;
//! - coefficients: header `x1,…,xp` and exactly one data row.
//!
//! Parse errors cite the 1-based data row (the header is not counted) and
//! the column name.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, Result};

/// Header names and raw string cells of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(path, format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::parse(path, "missing header row"));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, expected_len, .. } => CliError::parse(
                path,
                format!("row {}: expected {expected_len} fields, found {len}", i + 1),
            ),
            _ => CliError::parse(path, format!("row {}: {e}", i + 1)),
        })?;
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok(Table { headers, rows })
}

fn parse_cell(path: &Path, table: &Table, row: usize, col: usize) -> Result<f64> {
    let cell = &table.rows[row][col];
    let name = &table.headers[col];
    let v: f64 = cell
        .parse()
        .map_err(|_| CliError::parse(path, format!("row {}, column {name}: '{cell}' is not a number", row + 1)))?;
    if !v.is_finite() {
        return Err(CliError::parse(path, format!("row {}, column {name}: value {cell} is not finite", row + 1)));
    }
    Ok(v)
}

/// Positions of `x1..xp` in the header; `p` is inferred from the x-columns.
fn design_columns(path: &Path, table: &Table, allowed_extra: &[&str]) -> Result<Vec<usize>> {
    let mut p = 0;
    for h in &table.headers {
        if allowed_extra.contains(&h.as_str()) {
            continue;
        }
        let valid = h.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()).filter(|j| *j >= 1);
        match valid {
            Some(_) => p += 1,
            None => return Err(CliError::parse(path, format!("unexpected column '{h}'"))),
        }
    }
    if p == 0 {
        return Err(CliError::parse(path, "no covariate columns x1..xp"));
    }
    (1..=p)
        .map(|j| {
            let name = format!("x{j}");
            let hits = table.headers.iter().filter(|h| **h == name).count();
            match hits {
                1 => Ok(table.column(&name).expect("counted above")),
                0 => Err(CliError::parse(path, format!("missing column {name} (have {p} covariate columns)"))),
                _ => Err(CliError::parse(path, format!("duplicate column {name}"))),
            }
        })
        .collect()
}

fn read_matrix(path: &Path, table: &Table, cols: &[usize]) -> Result<DMatrix<f64>> {
    let n = table.rows.len();
    if n == 0 {
        return Err(CliError::parse(path, "no data rows"));
    }
    let mut x = DMatrix::zeros(n, cols.len());
    for i in 0..n {
        for (j, &c) in cols.iter().enumerate() {
            x[(i, j)] = parse_cell(path, table, i, c)?;
        }
    }
    Ok(x)
}

fn read_binary(path: &Path, table: &Table, col: usize) -> Result<Vec<f64>> {
    (0..table.rows.len())
        .map(|i| {
            let v = parse_cell(path, table, i, col)?;
            if v == 0.0 || v == 1.0 {
                Ok(v)
            } else {
                Err(CliError::InvalidInput(format!(
                    "{}: row {}, column y: response must be 0 or 1, found {}",
                    path.display(),
                    i + 1,
                    table.rows[i][col]
                )))
            }
        })
        .collect()
}

/// Reads a combined `y,x1..xp` file.
pub fn read_combined(path: &Path) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let table = read_table(path)?;
    let ycol = table.column("y").ok_or_else(|| CliError::parse(path, "missing column y"))?;
    let cols = design_columns(path, &table, &["y"])?;
    let x = read_matrix(path, &table, &cols)?;
    let y = read_binary(path, &table, ycol)?;
    Ok((x, y))
}

pub fn read_design(path: &Path) -> Result<DMatrix<f64>> {
    let table = read_table(path)?;
    let cols = design_columns(path, &table, &[])?;
    read_matrix(path, &table, &cols)
}

pub fn read_response(path: &Path) -> Result<Vec<f64>> {
    let table = read_table(path)?;
    if table.headers != ["y"] {
        return Err(CliError::parse(path, "response file must have the single column y"));
    }
    if table.rows.is_empty() {
        return Err(CliError::parse(path, "no data rows"));
    }
    read_binary(path, &table, 0)
}

/// A dense coefficient vector stored as one `x1..xp` row.
pub fn read_coefficients(path: &Path) -> Result<Vec<f64>> {
    let table = read_table(path)?;
    let cols = design_columns(path, &table, &[])?;
    if table.rows.len() != 1 {
        return Err(CliError::parse(
            path,
            format!("expected exactly one coefficient row, found {}", table.rows.len()),
        ));
    }
    cols.iter().map(|&c| parse_cell(path, &table, 0, c)).collect()
}

/// Writes rows with a header using `\n` line endings.
pub fn write_rows(path: &Path, headers: &[String], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    writeln!(w, "{}", headers.join(",")).map_err(io)?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_combined(path: &Path, x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    let mut headers = vec!["y".to_owned()];
    headers.extend((1..=x.ncols()).map(|j| format!("x{j}")));
    let rows: Vec<Vec<String>> = (0..x.nrows())
        .map(|i| {
            let mut row = vec![format!("{}", y[i] as u8)];
            row.extend(x.row(i).iter().map(|v| format!("{v}")));
            row
        })
        .collect();
    write_rows(path, &headers, &rows)
}
