//! Lasso solvers over a regularization grid.
//!
//! Both solvers minimize `(1/(2n))‖Y − Xβ‖² + λ‖β‖₁`; λ means the same thing
//! everywhere in this crate. Cyclic coordinate descent handles arbitrary
//! designs. For a design with orthonormal columns the coordinate problems
//! decouple and the solution is a single soft-threshold of `QᵀY` at `nλ`,
//! which the cross-solver tests pin against coordinate descent.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::data_model::{CoefficientVector, Dataset};
use crate::orthonormalize::orthonormality_defect;

/// Columns must satisfy `max|QᵀQ − I|` below this to qualify for the closed
/// form.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;
pub const DEFAULT_GRID_COUNT: usize = 100;

#[derive(Debug, Error)]
pub enum LassoError {
    #[error("coordinate descent did not converge within {0} sweeps")]
    NotConverged(usize, Box<LassoFit>),
    #[error("columns are not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("lambda_max is zero; the response carries no signal")]
    GridDegenerate,
    #[error("grid needs count >= 2 and ratio in (0, 1)")]
    InvalidGrid,
    #[error("tolerance must be positive and max_sweeps at least 1")]
    InvalidSolverParams,
}

/// Decreasing geometric sequence of candidate penalties.
#[derive(Debug, Clone)]
pub struct RegularizationGrid {
    values: Vec<f64>,
    lambda_max: f64,
    ratio: f64,
}

impl RegularizationGrid {
    /// Builds the grid from any design/response pair: `lambda_max` is the
    /// smallest penalty with an all-zero solution, `max_j |X_jᵀY| / n`.
    pub fn from_design(
        design: &DMatrix<f64>,
        y: &DVector<f64>,
        count: usize,
        ratio: f64,
    ) -> Result<Self, LassoError> {
        if count < 2 || !(ratio > 0.0 && ratio < 1.0) {
            return Err(LassoError::InvalidGrid);
        }
        let n = design.nrows() as f64;
        // Same dot kernel as the coordinate-descent updates, so a fit at
        // exactly lambda_max shrinks every coordinate to zero.
        let lambda_max = (0..design.ncols())
            .map(|j| design.column(j).dot(y).abs() / n)
            .fold(0.0f64, f64::max);
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return Err(LassoError::GridDegenerate);
        }
        let log_ratio = ratio.ln();
        let values = (0..count)
            .map(|i| lambda_max * (log_ratio * i as f64 / (count - 1) as f64).exp())
            .collect();
        Ok(RegularizationGrid {
            values,
            lambda_max,
            ratio,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// Grid over a standardized dataset.
pub fn make_grid(d: &Dataset, count: usize, ratio: f64) -> Result<RegularizationGrid, LassoError> {
    RegularizationGrid::from_design(d.x(), d.y(), count, ratio)
}

#[derive(Debug, Clone)]
pub struct LassoFit {
    pub lambda: f64,
    pub coefficients: CoefficientVector,
    pub iterations: usize,
    pub converged: bool,
}

pub fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on an arbitrary design. `init` warm-starts the
/// coefficients (used when walking a grid).
///
/// Between full cyclic passes the solver iterates only over the coordinates
/// that are currently nonzero, which is where all the work concentrates on
/// underdetermined designs. Convergence is always judged by a full pass in
/// fixed column order, so the result is deterministic and the converged flag
/// keeps its meaning: max coordinate change in the last (full) sweep below
/// `tolerance`.
pub fn coordinate_descent_on(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    tolerance: f64,
    max_sweeps: usize,
    init: Option<&DVector<f64>>,
) -> Result<LassoFit, LassoError> {
    if !(tolerance > 0.0) || max_sweeps < 1 {
        return Err(LassoError::InvalidSolverParams);
    }
    let n = design.nrows();
    let p = design.ncols();
    let n_f = n as f64;

    // Per-column curvature of the quadratic part.
    let col_sq_norms: Vec<f64> = (0..p).map(|j| design.column(j).norm_squared() / n_f).collect();

    let mut beta = match init {
        Some(b) => {
            assert_eq!(b.len(), p, "warm start length mismatch");
            b.clone()
        }
        None => DVector::zeros(p),
    };
    let mut residual = y - design * &beta;

    let update = |j: usize, beta: &mut DVector<f64>, residual: &mut DVector<f64>| -> f64 {
        let aj = col_sq_norms[j];
        if aj == 0.0 {
            return 0.0;
        }
        let old = beta[j];
        let zj = design.column(j).dot(residual) / n_f + aj * old;
        let new = soft_threshold(zj, lambda) / aj;
        if new != old {
            residual.axpy(old - new, &design.column(j).into_owned(), 1.0);
            beta[j] = new;
            (new - old).abs()
        } else {
            0.0
        }
    };

    let mut sweeps = 0;
    let mut converged = false;
    let mut active: Vec<usize> = Vec::with_capacity(p);
    'outer: while sweeps < max_sweeps {
        // Full pass: the only pass that can settle convergence or bring an
        // inactive coordinate in.
        sweeps += 1;
        let mut max_delta = 0.0f64;
        for j in 0..p {
            max_delta = max_delta.max(update(j, &mut beta, &mut residual));
        }
        if max_delta < tolerance {
            converged = true;
            break;
        }

        // Polish the current support before the next full pass.
        loop {
            active.clear();
            active.extend((0..p).filter(|&j| beta[j] != 0.0));
            if active.is_empty() {
                break;
            }
            if sweeps >= max_sweeps {
                break 'outer;
            }
            sweeps += 1;
            let mut inner_delta = 0.0f64;
            for &j in &active {
                inner_delta = inner_delta.max(update(j, &mut beta, &mut residual));
            }
            if inner_delta < tolerance {
                break;
            }
        }
    }

    let fit = LassoFit {
        lambda,
        coefficients: CoefficientVector::new(beta),
        iterations: sweeps,
        converged,
    };
    if converged {
        Ok(fit)
    } else {
        Err(LassoError::NotConverged(max_sweeps, Box::new(fit)))
    }
}

/// Coordinate descent on a standardized dataset.
pub fn coordinate_descent(
    d: &Dataset,
    lambda: f64,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<LassoFit, LassoError> {
    coordinate_descent_on(d.x(), d.y(), lambda, tolerance, max_sweeps, None)
}

/// Exact Lasso solution for a design with orthonormal columns:
/// soft-threshold the least-squares estimate `QᵀY` at `nλ`.
pub fn orthonormal_lasso(
    q_design: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<CoefficientVector, LassoError> {
    let defect = orthonormality_defect(q_design);
    if defect > ORTHONORMALITY_TOLERANCE {
        return Err(LassoError::NotOrthonormal(defect));
    }
    let threshold = q_design.nrows() as f64 * lambda;
    let ls = q_design.transpose() * y;
    Ok(CoefficientVector::new(ls.map(|b| soft_threshold(b, threshold))))
}

/// Fits every grid value from largest to smallest penalty, warm-starting each
/// fit from the previous one.
pub fn lasso_path(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    grid: &RegularizationGrid,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<Vec<LassoFit>, LassoError> {
    let mut fits = Vec::with_capacity(grid.count());
    let mut warm: Option<DVector<f64>> = None;
    for &lambda in grid.values() {
        let fit = coordinate_descent_on(design, y, lambda, tolerance, max_sweeps, warm.as_ref())?;
        warm = Some(fit.coefficients.values().clone());
        fits.push(fit);
    }
    Ok(fits)
}

/// Max violation of the Lasso stationarity conditions at `beta`: subgradient
/// slack for zero coefficients, `|g_j − λ·sign(β_j)|` for active ones.
pub fn kkt_violation(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    beta: &DVector<f64>,
) -> f64 {
    let n = design.nrows() as f64;
    let residual = y - design * beta;
    let grad = design.transpose() * residual / n;
    let mut worst = 0.0f64;
    for j in 0..design.ncols() {
        let v = if beta[j] == 0.0 {
            (grad[j].abs() - lambda).max(0.0)
        } else {
            (grad[j] - lambda * beta[j].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Objective value `(1/(2n))‖Y − Xβ‖² + λ‖β‖₁`.
pub fn objective(design: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, beta: &DVector<f64>) -> f64 {
    let n = design.nrows() as f64;
    let residual = y - design * beta;
    residual.norm_squared() / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}
