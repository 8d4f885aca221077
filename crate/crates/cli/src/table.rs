//! CSV ingestion and deterministic numeric formatting.
//!
//! All floating-point output goes through [`sig12`], which prints 12
//! significant digits in scientific notation. That is enough for a
//! lossless `f64::from_str` round trip of every quantity the tool
//! serializes, and it is byte-deterministic across runs and thread
//! counts.

use std::path::Path;

use asqlab_core::{ShotSet, TelegraphTrace};
use thiserror::Error;

/// Errors raised while reading tabular inputs.
#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: &'static str },
    #[error("{path} data row {row}: `{value}` is not a number")]
    BadNumber { path: String, row: usize, value: String },
    #[error("{path}: expected at least {min} data rows, found {got}")]
    TooFewRows { path: String, min: usize, got: usize },
    #[error("{path}: `time_us` steps are not uniform ({a} vs {b})")]
    NonUniformTime { path: String, a: f64, b: f64 },
}

/// Formats a float with 12 significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Required columns in request order, then optional columns (`None` when
/// the header is absent).
type ColumnSets = (Vec<Vec<f64>>, Vec<Option<Vec<f64>>>);

/// `x`, `y` and an optional per-point `sigma` column.
type XySigma = (Vec<f64>, Vec<f64>, Option<Vec<f64>>);

/// Reads named float columns from a headed CSV file.
///
/// Every `required` column must be present; `optional` columns yield
/// `None` when absent. Cells are parsed as `f64`, with the 1-based data
/// row reported on failure.
pub fn read_float_columns(
    path: &Path,
    required: &[&'static str],
    optional: &[&'static str],
) -> Result<ColumnSets, TableError> {
    let shown = path.display().to_string();
    let csv_err = |source| TableError::Csv { path: shown.clone(), source };
    let mut reader =
        csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;

    let headers = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &'static str| headers.iter().position(|h| h == name);
    let required_idx: Vec<usize> = required
        .iter()
        .map(|&column| {
            find(column).ok_or(TableError::MissingColumn { path: shown.clone(), column })
        })
        .collect::<Result<_, _>>()?;
    let optional_idx: Vec<Option<usize>> = optional.iter().map(|&n| find(n)).collect();

    let mut required_cols = vec![Vec::new(); required.len()];
    let mut optional_cols: Vec<Option<Vec<f64>>> =
        optional_idx.iter().map(|o| o.map(|_| Vec::new())).collect();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let parse = |i: usize| -> Result<f64, TableError> {
            let cell = record.get(i).unwrap_or("");
            cell.parse().map_err(|_| TableError::BadNumber {
                path: shown.clone(),
                row: row + 1,
                value: cell.to_string(),
            })
        };
        for (k, &i) in required_idx.iter().enumerate() {
            required_cols[k].push(parse(i)?);
        }
        for (k, idx) in optional_idx.iter().enumerate() {
            if let Some(i) = idx {
                optional_cols[k].as_mut().expect("allocated with index").push(parse(*i)?);
            }
        }
    }
    Ok((required_cols, optional_cols))
}

/// Reads a fit input: columns `x`, `y` and optionally `sigma`.
pub fn read_xy(path: &Path) -> Result<XySigma, TableError> {
    let (required, optional) = read_float_columns(path, &["x", "y"], &["sigma"])?;
    let mut required = required.into_iter();
    let xs = required.next().expect("two required columns");
    let ys = required.next().expect("two required columns");
    Ok((xs, ys, optional.into_iter().next().expect("one optional column")))
}

/// Reads a telegraph trace: columns `time_us`, `signal`, uniform steps.
pub fn read_trace(path: &Path) -> Result<TelegraphTrace, TableError> {
    let shown = path.display().to_string();
    let (required, _) = read_float_columns(path, &["time_us", "signal"], &[])?;
    let mut required = required.into_iter();
    let times = required.next().expect("two required columns");
    let samples = required.next().expect("two required columns");
    if times.len() < 2 {
        return Err(TableError::TooFewRows { path: shown, min: 2, got: times.len() });
    }
    let dt = times[1] - times[0];
    for pair in times.windows(2) {
        let step = pair[1] - pair[0];
        if (step - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(TableError::NonUniformTime { path: shown, a: dt, b: step });
        }
    }
    Ok(TelegraphTrace { dt_us: dt, samples })
}

/// Reads a shot set: columns `i`, `q`.
pub fn read_shots(path: &Path) -> Result<ShotSet, TableError> {
    let shown = path.display().to_string();
    let (required, _) = read_float_columns(path, &["i", "q"], &[])?;
    let mut required = required.into_iter();
    let i = required.next().expect("two required columns");
    let q = required.next().expect("two required columns");
    if i.is_empty() {
        return Err(TableError::TooFewRows { path: shown, min: 1, got: 0 });
    }
    Ok(ShotSet::new(i.into_iter().zip(q).collect()))
}
