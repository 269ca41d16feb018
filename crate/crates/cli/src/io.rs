//! CSV and JSON artifacts.
//!
//! Dataset files carry a header with `time`, `event` (0/1) and covariates
//! `z1..zd`; other columns are ignored and lines starting with `#` are comments.
//! Reals are written in Rust's shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use rmst_sl::{DMatrix, Dataset, Observation};
use serde::Serialize;

use crate::error::{CliError, CliResult};

struct Table {
    headers: Vec<String>,
    /// `(line, fields)` per data record.
    records: Vec<(u64, Vec<String>)>,
}

fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        records.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(Table { headers, records })
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Parse { path: path.to_path_buf(), line, message: format!("{other:?}") },
    }
}

fn column(table: &Table, path: &Path, name: &str) -> CliResult<usize> {
    table
        .headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::MissingColumn { path: path.to_path_buf(), column: name.to_string() })
}

/// Indices of `z1..zd`, which must be contiguous from `z1`.
fn covariate_columns(table: &Table, path: &Path) -> CliResult<Vec<usize>> {
    let count = table
        .headers
        .iter()
        .filter(|h| h.strip_prefix('z').is_some_and(|rest| rest.parse::<usize>().is_ok()))
        .count();
    (1..=count).map(|j| column(table, path, &format!("z{j}"))).collect()
}

fn parse_real(path: &Path, line: u64, name: &str, field: &str) -> CliResult<f64> {
    let value: f64 = field.parse().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("column `{name}`: `{field}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(CliError::Parse { path: path.to_path_buf(), line, message: format!("column `{name}` is not finite") });
    }
    Ok(value)
}

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let table = read_table(path)?;
    let time_col = column(&table, path, "time")?;
    let event_col = column(&table, path, "event")?;
    let z_cols = covariate_columns(&table, path)?;
    let mut rows = Vec::with_capacity(table.records.len());
    for (line, fields) in &table.records {
        let time = parse_real(path, *line, "time", &fields[time_col])?;
        if time < 0.0 {
            return Err(CliError::Parse { path: path.to_path_buf(), line: *line, message: "negative time".into() });
        }
        let event = match fields[event_col].as_str() {
            "1" => true,
            "0" => false,
            other => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line: *line,
                    message: format!("column `event`: expected 0 or 1, got `{other}`"),
                })
            }
        };
        let z = z_cols
            .iter()
            .enumerate()
            .map(|(j, &c)| parse_real(path, *line, &format!("z{}", j + 1), &fields[c]))
            .collect::<CliResult<Vec<_>>>()?;
        rows.push(Observation::new(time, event, z));
    }
    Ok(Dataset::with_dim(rows, z_cols.len())?)
}

/// Covariate matrix of a CSV; `time` and `event` are optional here.
pub fn read_covariates(path: &Path) -> CliResult<DMatrix<f64>> {
    let table = read_table(path)?;
    let z_cols = covariate_columns(&table, path)?;
    let mut x = DMatrix::zeros(table.records.len(), z_cols.len());
    for (i, (line, fields)) in table.records.iter().enumerate() {
        for (j, &c) in z_cols.iter().enumerate() {
            x[(i, j)] = parse_real(path, *line, &format!("z{}", j + 1), &fields[c])?;
        }
    }
    Ok(x)
}

pub fn dataset_csv(data: &Dataset) -> String {
    let mut out = String::from("time,event");
    for j in 1..=data.dim() {
        let _ = write!(out, ",z{j}");
    }
    out.push('\n');
    for row in data.rows() {
        let _ = write!(out, "{},{}", row.time, u8::from(row.event));
        for z in &row.covariates {
            let _ = write!(out, ",{z}");
        }
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable artifact");
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config { path: path.display().to_string(), message: e.to_string() })
}
