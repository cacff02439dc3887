//! Spectral text files and CSV tables.
//!
//! A spectral file holds `m delta` on the first data line, then `m`
//! eigenvalues one per line, then optionally `growth c alpha`. Blank lines
//! and `#` comments are ignored.

use spdelab_core::{GrowthLaw, SpectralOperator};
use thiserror::Error;

use crate::report::Table;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("expected {expected} eigenvalues, found {found}")]
    Count { expected: usize, found: usize },
    #[error("invalid spectral data: {0}")]
    Operator(spdelab_core::Error),
}

pub fn parse_spectrum(text: &str) -> Result<SpectralOperator, FormatError> {
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut header: Option<(usize, f64)> = None;
    let mut eig = Vec::new();
    let mut growth = None;
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FormatError::Malformed { line, reason: format!("`{s}` is not a number") })
        };
        match header {
            None => {
                if fields.len() != 2 {
                    return Err(FormatError::Malformed { line, reason: "header must be `m delta`".into() });
                }
                let m = fields[0]
                    .parse::<usize>()
                    .map_err(|_| FormatError::Malformed { line, reason: "m must be a positive integer".into() })?;
                header = Some((m, num(fields[1])?));
            }
            Some((m, _)) if eig.len() < m => {
                if fields.len() != 1 {
                    return Err(FormatError::Count { expected: m, found: eig.len() });
                }
                eig.push(num(fields[0])?);
            }
            Some(_) => {
                if growth.is_some() || fields.len() != 3 || fields[0] != "growth" {
                    return Err(FormatError::Malformed { line, reason: "trailing data after the eigenvalues".into() });
                }
                growth = Some(GrowthLaw { c: num(fields[1])?, alpha: num(fields[2])? });
            }
        }
    }
    let (m, delta) = header.ok_or(FormatError::Malformed { line: 0, reason: "empty file".into() })?;
    if eig.len() != m {
        return Err(FormatError::Count { expected: m, found: eig.len() });
    }
    let op = SpectralOperator::new(eig, delta).map_err(FormatError::Operator)?;
    Ok(match growth {
        Some(g) => op.with_growth(g),
        None => op,
    })
}

pub fn write_spectrum(op: &SpectralOperator) -> String {
    let mut out = format!("{} {:?}\n", op.dim(), op.delta());
    for l in op.eigenvalues() {
        out.push_str(&format!("{l:?}\n"));
    }
    if let Some(g) = op.growth() {
        out.push_str(&format!("growth {:?} {:?}\n", g.c, g.alpha));
    }
    out
}

/// Render a table as CSV with shortest round-trip float formatting.
pub fn table_to_csv(table: &Table) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Parse a numeric CSV produced by [`table_to_csv`].
pub fn csv_to_table(name: &str, text: &str) -> Result<Table, csv::Error> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect());
    }
    Ok(Table { name: name.to_string(), header, rows })
}

pub fn mode_header(prefix: &str, m: usize) -> Vec<String> {
    (1..=m).map(|k| format!("{prefix}{k}")).collect()
}
