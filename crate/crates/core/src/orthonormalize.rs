//! Gram-Schmidt orthonormalization of a standardized design.
//!
//! Produces the decorrelated design `Q` and the upper-triangular factor `R`
//! with `X = QR`. Column order matters: earlier columns claim shared
//! directions, later correlated columns keep only what they add. The
//! classical variant computes every projection against the original column;
//! the modified variant subtracts projections from the running residual and
//! is the numerically safer choice.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::Dataset;

/// Residual norms below this fraction of the column norm signal linear
/// dependence.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OrthoError {
    #[error("column {0} is linearly dependent on earlier columns")]
    RankDeficient(usize),
    #[error("cannot orthonormalize {p} columns with only {n} rows")]
    TooManyColumns { n: usize, p: usize },
    #[error("row index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("row index {0} repeated")]
    DuplicateRow(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GsMode {
    Classical,
    Modified,
}

/// The factorization `X_ordered = Q R` plus the column ordering it was
/// computed under.
#[derive(Debug, Clone)]
pub struct QrFactors {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    ordering: Vec<usize>,
    mode: GsMode,
}

impl QrFactors {
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Original 1-based indices of the factored columns, in factorization
    /// order.
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn mode(&self) -> GsMode {
        self.mode
    }
}

/// Gram-Schmidt on a plain matrix. Returns `(Q, R)` with `x = Q R`, `R`
/// upper triangular with positive diagonal.
pub fn factorize(x: &DMatrix<f64>, mode: GsMode) -> Result<(DMatrix<f64>, DMatrix<f64>), OrthoError> {
    let (n, p) = (x.nrows(), x.ncols());
    if p > n {
        return Err(OrthoError::TooManyColumns { n, p });
    }

    let mut q = DMatrix::<f64>::zeros(n, p);
    let mut r = DMatrix::<f64>::zeros(p, p);

    for j in 0..p {
        let xj = x.column(j).into_owned();
        let mut v = xj.clone();
        for i in 0..j {
            let qi: DVector<f64> = q.column(i).into_owned();
            let rij = match mode {
                GsMode::Classical => qi.dot(&xj),
                GsMode::Modified => qi.dot(&v),
            };
            r[(i, j)] = rij;
            v.axpy(-rij, &qi, 1.0);
        }
        let rjj = v.norm();
        if rjj < RANK_TOLERANCE * xj.norm() {
            return Err(OrthoError::RankDeficient(j + 1));
        }
        r[(j, j)] = rjj;
        v /= rjj;
        q.set_column(j, &v);
    }

    Ok((q, r))
}

/// Orthonormalizes the columns of `d.x()` in their current order.
pub fn gram_schmidt(d: &Dataset, mode: GsMode) -> Result<QrFactors, OrthoError> {
    let (q, r) = factorize(d.x(), mode)?;
    Ok(QrFactors {
        q,
        r,
        ordering: d.original_index().to_vec(),
        mode,
    })
}

/// Restricts `Q` to the given rows. The result still reconstructs the same
/// rows of the ordered design: `X_rows = Q_rows R`.
pub fn project_rows(f: &QrFactors, row_indices: &[usize]) -> Result<DMatrix<f64>, OrthoError> {
    let n = f.q.nrows();
    let mut seen = vec![false; n];
    for &i in row_indices {
        if i >= n {
            return Err(OrthoError::IndexOutOfRange(i));
        }
        if seen[i] {
            return Err(OrthoError::DuplicateRow(i));
        }
        seen[i] = true;
    }
    Ok(f.q.select_rows(row_indices.iter()))
}

/// Max entrywise deviation of `GᵀG` from the identity.
pub fn orthonormality_defect(design: &DMatrix<f64>) -> f64 {
    let p = design.ncols();
    let gram = design.transpose() * design;
    (gram - DMatrix::<f64>::identity(p, p)).amax()
}
