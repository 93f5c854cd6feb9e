//! CSV ingestion and emission for the fitting commands.

use super::CliError;
use crate::bart::Covariates;
use crate::model::Dataset;
use std::path::Path;

/// Which columns play which role in the input CSV.
#[derive(Debug, Clone)]
pub struct ColumnRoles {
    pub outcome: String,
    pub select: String,
    pub x_cols: Vec<String>,
    pub w_cols: Vec<String>,
    pub treat: Option<String>,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

/// Load a dataset from a UTF-8 CSV with a header row. The outcome must be
/// present exactly where the selection indicator is 1; missing outcomes
/// are empty cells or "NA". Errors name the offending row (1-based data
/// rows, excluding the header).
pub fn load_dataset(path: &Path, roles: &ColumnRoles) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col_idx = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("column '{name}' not found in {headers:?}")))
    };
    let oi = col_idx(&roles.outcome)?;
    let si = col_idx(&roles.select)?;
    let xi: Vec<usize> = roles.x_cols.iter().map(|c| col_idx(c)).collect::<Result<_, _>>()?;
    let wi: Vec<usize> = roles.w_cols.iter().map(|c| col_idx(c)).collect::<Result<_, _>>()?;
    if xi.is_empty() || wi.is_empty() {
        return Err(CliError::Config("x-cols and w-cols must be non-empty".into()));
    }

    let parse = |cell: &str, row: usize, name: &str| -> Result<f64, CliError> {
        cell.trim().parse::<f64>().map_err(|_| {
            CliError::Data(format!("row {row}: non-numeric value '{cell}' in column '{name}'"))
        })
    };

    let mut x_rows = Vec::new();
    let mut w_rows = Vec::new();
    let mut y = Vec::new();
    let mut s = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(CliError::Data(format!(
                "row {row}: {} cells, expected {}",
                rec.len(),
                headers.len()
            )));
        }
        let sel_raw = parse(&rec[si], row, &roles.select)?;
        let sel = if sel_raw == 1.0 {
            true
        } else if sel_raw == 0.0 {
            false
        } else {
            return Err(CliError::Data(format!(
                "row {row}: selection indicator must be 0 or 1, got {sel_raw}"
            )));
        };
        let y_cell = &rec[oi];
        let yi = if is_missing(y_cell) {
            if sel {
                return Err(CliError::Data(format!(
                    "row {row}: outcome missing but selection indicator is 1"
                )));
            }
            None
        } else {
            if !sel {
                return Err(CliError::Data(format!(
                    "row {row}: outcome present but selection indicator is 0"
                )));
            }
            Some(parse(y_cell, row, &roles.outcome)?)
        };
        x_rows.push(
            xi.iter()
                .map(|&j| parse(&rec[j], row, &headers[j]))
                .collect::<Result<Vec<f64>, _>>()?,
        );
        w_rows.push(
            wi.iter()
                .map(|&j| parse(&rec[j], row, &headers[j]))
                .collect::<Result<Vec<f64>, _>>()?,
        );
        y.push(yi);
        s.push(sel);
    }
    if y.is_empty() {
        return Err(CliError::Data("no data rows".into()));
    }
    Dataset::new(
        Covariates::from_rows(&x_rows),
        Covariates::from_rows(&w_rows),
        y,
        s,
    )
    .map_err(|e| CliError::Data(e.to_string()))
}

/// Emit a dataset back to CSV (x columns, w columns, outcome, indicator);
/// mostly for fixtures and round-trip checks.
pub fn write_dataset(path: &Path, data: &Dataset, roles: &ColumnRoles) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = roles.x_cols.clone();
    for w in &roles.w_cols {
        if !header.contains(w) {
            header.push(w.clone());
        }
    }
    header.push(roles.outcome.clone());
    header.push(roles.select.clone());
    wtr.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for j in 0..roles.x_cols.len() {
            rec.push(format!("{:.17e}", data.x.value(i, j)));
        }
        for (j, w) in roles.w_cols.iter().enumerate() {
            if !roles.x_cols.contains(w) {
                rec.push(format!("{:.17e}", data.w.value(i, j)));
            }
        }
        rec.push(match data.y[i] {
            Some(v) => format!("{v:.17e}"),
            None => "NA".into(),
        });
        rec.push(if data.selected[i] { "1".into() } else { "0".into() });
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
