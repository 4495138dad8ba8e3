//! Reading measurement tables: comma-separated, `.` decimal, one header
//! row naming the columns, every cell a finite number. Errors carry the
//! 1-based line number of the offending record.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::CliError;

pub struct NumericTable {
    pub headers: Vec<String>,
    pub data: DMatrix<f64>,
}

fn map_csv_error(path: &Path, err: csv::Error) -> CliError {
    let line = err
        .position()
        .map(csv::Position::line)
        .unwrap_or_default();
    match err.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => CliError::Csv {
            path: path.display().to_string(),
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        other => CliError::Csv {
            path: path.display().to_string(),
            line,
            message: format!("{other:?}"),
        },
    }
}

pub fn read_numeric_csv(path: &Path) -> Result<NumericTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| map_csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| map_csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let bad_header = headers.is_empty()
        || headers.iter().any(String::is_empty)
        // A fully numeric first row means the mandatory header is missing.
        || headers.iter().all(|h| h.parse::<f64>().is_ok());
    if bad_header {
        return Err(CliError::Csv {
            path: path.display().to_string(),
            line: 1,
            message: "header row with column names required".into(),
        });
    }
    let mut cells = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| map_csv_error(path, e))?;
        let line = record.position().map(csv::Position::line).unwrap_or(0);
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| CliError::Csv {
                path: path.display().to_string(),
                line,
                message: format!("column {} ({}): not a number: {cell:?}", j + 1, headers[j]),
            })?;
            if !value.is_finite() {
                return Err(CliError::Csv {
                    path: path.display().to_string(),
                    line,
                    message: format!("column {} ({}): non-finite value {cell:?}", j + 1, headers[j]),
                });
            }
            cells.push(value);
        }
        rows += 1;
    }
    Ok(NumericTable {
        data: DMatrix::from_row_slice(rows, headers.len(), &cells),
        headers,
    })
}
