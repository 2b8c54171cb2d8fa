//! Plain-text matrices: a first line holding `d`, then `d` rows of `d`
//! whitespace-separated decimals. Blank lines are ignored.

use std::fs;
use std::path::Path;

use gradkit_core::linalg::Matrix;

use crate::error::{CliError, CliResult};

pub fn parse_matrix(text: &str) -> CliResult<Matrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (n0, first) = lines.next().ok_or_else(|| CliError::config("matrix file is empty"))?;
    let d: usize = first
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("line {}: expected the dimension, found {:?}", n0 + 1, first.trim())))?;
    if d == 0 {
        return Err(CliError::config(format!("line {}: dimension must be positive", n0 + 1)));
    }
    let mut rows = Vec::with_capacity(d);
    for (n, line) in lines {
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::config(format!("line {}: {tok:?} is not a finite number", n + 1)))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if row.len() != d {
            return Err(CliError::config(format!("line {}: expected {d} entries, found {}", n + 1, row.len())));
        }
        if rows.len() == d {
            return Err(CliError::config(format!("line {}: more than {d} rows", n + 1)));
        }
        rows.push(row);
    }
    if rows.len() != d {
        return Err(CliError::config(format!("expected {d} rows, found {}", rows.len())));
    }
    Ok(Matrix::from_rows(&rows)?)
}

pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn format_matrix(a: &Matrix) -> String {
    let mut out = format!("{}\n", a.rows());
    for i in 0..a.rows() {
        let row: Vec<String> = a.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
