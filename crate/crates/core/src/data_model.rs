//! Core numeric containers, standardization, and CSV ingestion.
//!
//! A [`Dataset`] holds a standardized design matrix (each column mean 0,
//! sample sd 1) and a centered response. Columns carry their name and their
//! original 1-based position so that any reordering can be traced back to the
//! variables the user supplied. Datasets are immutable after construction and
//! safe to share across threads.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Standard deviations below this are treated as a constant column.
const CONSTANT_SD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("column {0} is constant (standard deviation below 1e-12)")]
    ConstantColumn(usize),
    #[error("response has {response} entries but the design has {rows} rows")]
    DimensionMismatch { rows: usize, response: usize },
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("non-numeric value at data row {row}, column {col}")]
    ParseError { row: usize, col: usize },
    #[error("response column '{0}' not found in header")]
    MissingColumn(String),
    #[error("order is not a permutation of 1..={0}")]
    InvalidPermutation(usize),
    #[error("csv error: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for DataError {
    fn from(e: csv::Error) -> Self {
        DataError::Csv(e.to_string())
    }
}

/// A standardized design matrix with a centered response.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    column_names: Vec<String>,
    original_index: Vec<usize>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// 1-based positions of the columns in the matrix the dataset was built
    /// from. A permutation of 1..=p until columns are dropped.
    pub fn original_index(&self) -> &[usize] {
        &self.original_index
    }

    /// Keeps only the first `k` columns, preserving names and indices.
    pub fn retain_leading(&self, k: usize) -> Dataset {
        assert!(k >= 1 && k <= self.p(), "retain count out of range");
        Dataset {
            x: self.x.columns(0, k).into_owned(),
            y: self.y.clone(),
            column_names: self.column_names[..k].to_vec(),
            original_index: self.original_index[..k].to_vec(),
        }
    }
}

/// A coefficient vector together with its support (0-based positions of the
/// nonzero entries).
#[derive(Debug, Clone)]
pub struct CoefficientVector {
    values: DVector<f64>,
    support: Vec<usize>,
}

impl CoefficientVector {
    pub fn new(values: DVector<f64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| j)
            .collect();
        CoefficientVector { values, support }
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }
}

/// Centers and scales each column by its mean and sample standard deviation
/// (divisor n - 1) and centers the response. Column names default to
/// `x1..xp`; use [`standardize_named`] to keep names from a source file.
pub fn standardize(raw_x: &DMatrix<f64>, raw_y: &DVector<f64>) -> Result<Dataset, DataError> {
    let names = (1..=raw_x.ncols()).map(|j| format!("x{j}")).collect();
    standardize_named(raw_x, raw_y, names)
}

/// [`standardize`] with explicit column names.
pub fn standardize_named(
    raw_x: &DMatrix<f64>,
    raw_y: &DVector<f64>,
    column_names: Vec<String>,
) -> Result<Dataset, DataError> {
    let n = raw_x.nrows();
    let p = raw_x.ncols();
    if n < 2 {
        return Err(DataError::TooFewRows(n));
    }
    if raw_y.len() != n {
        return Err(DataError::DimensionMismatch {
            rows: n,
            response: raw_y.len(),
        });
    }
    assert_eq!(column_names.len(), p, "one name per column");

    let mut x = raw_x.clone();
    for j in 0..p {
        let mut col = x.column_mut(j);
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / (n as f64 - 1.0)).sqrt();
        if sd < CONSTANT_SD {
            return Err(DataError::ConstantColumn(j + 1));
        }
        col /= sd;
    }

    let mut y = raw_y.clone();
    let y_mean = y.sum() / n as f64;
    y.add_scalar_mut(-y_mean);

    Ok(Dataset {
        x,
        y,
        column_names,
        original_index: (1..=p).collect(),
    })
}

/// Reorders columns so that new column k is old column `order[k]` (1-based).
/// Names and original indices move with their columns, so the permutation is
/// invertible through [`Dataset::original_index`].
pub fn permute_columns(d: &Dataset, order: &[usize]) -> Result<Dataset, DataError> {
    let p = d.p();
    if order.len() != p {
        return Err(DataError::InvalidPermutation(p));
    }
    let mut seen = vec![false; p];
    for &o in order {
        if o < 1 || o > p || seen[o - 1] {
            return Err(DataError::InvalidPermutation(p));
        }
        seen[o - 1] = true;
    }

    let mut x = DMatrix::zeros(d.n(), p);
    let mut names = Vec::with_capacity(p);
    let mut original = Vec::with_capacity(p);
    for (k, &o) in order.iter().enumerate() {
        x.set_column(k, &d.x.column(o - 1));
        names.push(d.column_names[o - 1].clone());
        original.push(d.original_index[o - 1]);
    }
    Ok(Dataset {
        x,
        y: d.y.clone(),
        column_names: names,
        original_index: original,
    })
}

fn parse_cell(raw: &str, row: usize, col: usize) -> Result<f64, DataError> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| DataError::ParseError { row, col })?;
    if !v.is_finite() {
        // Missing or non-finite values are rejected, not imputed.
        return Err(DataError::ParseError { row, col });
    }
    Ok(v)
}

/// Reads an RFC-4180 CSV with a header row where every cell is numeric.
/// Returns the full matrix and the header names.
pub fn load_csv_matrix(path: &Path) -> Result<(DMatrix<f64>, Vec<String>), DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let ncols = names.len();

    let mut values: Vec<f64> = Vec::new();
    let mut nrows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != ncols {
            return Err(DataError::Csv(format!(
                "row {} has {} fields, expected {}",
                i + 1,
                record.len(),
                ncols
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            values.push(parse_cell(cell, i + 1, j + 1)?);
        }
        nrows += 1;
    }
    Ok((DMatrix::from_row_slice(nrows, ncols, &values), names))
}

/// Reads a CSV and splits out the named response column. Returns the raw
/// predictor matrix, the raw response, and the predictor names in file order.
pub fn load_csv(
    path: &Path,
    response_column: &str,
) -> Result<(DMatrix<f64>, DVector<f64>, Vec<String>), DataError> {
    let (full, names) = load_csv_matrix(path)?;
    let response_idx = names
        .iter()
        .position(|n| n == response_column)
        .ok_or_else(|| DataError::MissingColumn(response_column.to_string()))?;

    let y = DVector::from_iterator(full.nrows(), full.column(response_idx).iter().copied());
    let keep: Vec<usize> = (0..full.ncols()).filter(|&j| j != response_idx).collect();
    let x = full.select_columns(keep.iter());
    let predictor_names = keep.iter().map(|&j| names[j].clone()).collect();
    Ok((x, y, predictor_names))
}

/// Writes a matrix as CSV with the given header names, one row per line.
/// Values are formatted with the shortest representation that round-trips,
/// so `load_csv_matrix` recovers them bit-exactly.
pub fn write_matrix_csv(
    path: &Path,
    names: &[String],
    matrix: &DMatrix<f64>,
) -> Result<(), DataError> {
    assert_eq!(names.len(), matrix.ncols(), "one name per column");
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(names)?;
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format!("{}", matrix[(i, j)]))
            .collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
