//! Executable checks of the selection-consistency conditions.
//!
//! The irrepresentable check evaluates `‖X_Nᵀ X_S (X_Sᵀ X_S)⁻¹‖_∞` for a
//! split of the columns into signal and noise sets; values below 1 are the
//! classical sufficient condition for the Lasso to recover the signal set.
//! For an orthonormal design the cross-product vanishes and the norm is 0.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

/// Gram matrices with a condition number beyond this are treated as singular.
const GRAM_CONDITION_CAP: f64 = 1e12;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("signal set must be a nonempty proper subset of the columns")]
    InvalidSignalSet,
    #[error("signal index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("signal gram matrix is numerically singular (condition {0:.3e})")]
    SingularGram(f64),
    #[error("matrix is not positive definite (min eigenvalue {0:.3e})")]
    NotPd(f64),
    #[error("matrix must be square and symmetric")]
    NotSymmetric,
}

/// Outcome of the irrepresentable-condition check. Index sets are 0-based
/// column positions of the design that was checked.
#[derive(Debug, Clone, Serialize)]
pub struct IrrepReport {
    pub norm_value: f64,
    pub satisfied: bool,
    pub signal_set: Vec<usize>,
    pub noise_set: Vec<usize>,
}

/// Computes the infinity norm of `X_Nᵀ X_S (X_Sᵀ X_S)⁻¹` by solving against
/// the signal gram matrix rather than inverting it.
pub fn irrepresentable_norm(
    design: &DMatrix<f64>,
    signal: &[usize],
) -> Result<IrrepReport, DiagnosticsError> {
    let p = design.ncols();
    let mut signal_set: Vec<usize> = signal.to_vec();
    signal_set.sort_unstable();
    signal_set.dedup();
    for &j in &signal_set {
        if j >= p {
            return Err(DiagnosticsError::IndexOutOfRange(j));
        }
    }
    if signal_set.is_empty() || signal_set.len() == p {
        return Err(DiagnosticsError::InvalidSignalSet);
    }
    let noise_set: Vec<usize> = (0..p).filter(|j| !signal_set.contains(j)).collect();

    let xs = design.select_columns(signal_set.iter());
    let xn = design.select_columns(noise_set.iter());
    let gram = xs.transpose() * &xs;

    let eig = gram.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.max();
    let min_eig = eig.eigenvalues.min();
    let condition = if min_eig <= 0.0 {
        f64::INFINITY
    } else {
        max_eig / min_eig
    };
    if condition > GRAM_CONDITION_CAP {
        return Err(DiagnosticsError::SingularGram(condition));
    }

    // Solve gram * Z = XsᵀXn, then the quantity of interest is Zᵀ.
    let rhs = xs.transpose() * &xn;
    let chol = nalgebra::Cholesky::new(gram)
        .ok_or(DiagnosticsError::SingularGram(condition))?;
    let z = chol.solve(&rhs);

    let mut norm_value = 0.0f64;
    for col in 0..z.ncols() {
        // Row of Zᵀ = column of Z.
        let row_sum: f64 = z.column(col).iter().map(|v| v.abs()).sum();
        norm_value = norm_value.max(row_sum);
    }

    Ok(IrrepReport {
        satisfied: norm_value < 1.0,
        norm_value,
        signal_set,
        noise_set,
    })
}

/// Ratio of the largest to the smallest eigenvalue of a symmetric positive
/// definite matrix.
pub fn condition_number(sigma: &DMatrix<f64>) -> Result<f64, DiagnosticsError> {
    if sigma.nrows() != sigma.ncols() {
        return Err(DiagnosticsError::NotSymmetric);
    }
    let asym = (sigma - sigma.transpose()).amax();
    if asym > 1e-10 * sigma.amax().max(1.0) {
        return Err(DiagnosticsError::NotSymmetric);
    }
    let eig: DVector<f64> = sigma.clone().symmetric_eigen().eigenvalues;
    let min = eig.min();
    if min <= 0.0 {
        return Err(DiagnosticsError::NotPd(min));
    }
    Ok(eig.max() / min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthonormalize::{factorize, GsMode};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::rng::substream(seed, "diag-test", 0);
        DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn orthonormal_design_satisfies_the_condition_exactly() {
        for seed in 0..5u64 {
            let x = random_matrix(40, 8, seed);
            let (q, _) = factorize(&x, GsMode::Modified).unwrap();
            let report = irrepresentable_norm(&q, &[0, 2, 5]).unwrap();
            assert!(report.norm_value < 1e-10, "norm {}", report.norm_value);
            assert!(report.satisfied);
            assert_eq!(report.signal_set, vec![0, 2, 5]);
            assert_eq!(report.noise_set, vec![1, 3, 4, 6, 7]);
        }
    }

    #[test]
    fn perfectly_correlated_noise_sits_on_the_boundary() {
        // Noise column identical to the single unit-norm signal column.
        let mut x = DMatrix::zeros(4, 2);
        let col = DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5]);
        x.set_column(0, &col);
        x.set_column(1, &col);
        let report = irrepresentable_norm(&x, &[0]).unwrap();
        assert_abs_diff_eq!(report.norm_value, 1.0, epsilon = 1e-12);
        assert!(!report.satisfied);
    }

    #[test]
    fn matches_dense_algebra_oracle() {
        // Independent oracle: explicit inverse through LU on a small case.
        let x = random_matrix(50, 6, 42);
        let signal = [0usize, 1];
        let report = irrepresentable_norm(&x, &signal).unwrap();

        let xs = x.select_columns(signal.iter());
        let noise: Vec<usize> = (2..6).collect();
        let xn = x.select_columns(noise.iter());
        let inv = (xs.transpose() * &xs).try_inverse().unwrap();
        let c = xn.transpose() * &xs * inv;
        let oracle = (0..c.nrows())
            .map(|i| (0..c.ncols()).map(|j| c[(i, j)].abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        assert_abs_diff_eq!(report.norm_value, oracle, epsilon = 1e-10);
    }

    #[test]
    fn orthogonal_signal_noise_blocks_give_zero() {
        // Block design: signal columns touch only the first rows, noise only
        // the rest, so the cross product vanishes without full orthonormality.
        let mut x = DMatrix::<f64>::zeros(10, 4);
        let mut rng = crate::rng::substream(7, "blocks", 0);
        for j in 0..2 {
            for i in 0..5 {
                x[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        for j in 2..4 {
            for i in 5..10 {
                x[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let report = irrepresentable_norm(&x, &[0, 1]).unwrap();
        assert!(report.norm_value < 1e-10);
    }

    #[test]
    fn degenerate_signal_sets_are_rejected() {
        let x = random_matrix(10, 3, 1);
        assert!(matches!(
            irrepresentable_norm(&x, &[]),
            Err(DiagnosticsError::InvalidSignalSet)
        ));
        assert!(matches!(
            irrepresentable_norm(&x, &[0, 1, 2]),
            Err(DiagnosticsError::InvalidSignalSet)
        ));
        assert!(matches!(
            irrepresentable_norm(&x, &[9]),
            Err(DiagnosticsError::IndexOutOfRange(9))
        ));
    }

    #[test]
    fn duplicated_signal_columns_are_singular() {
        let mut x = DMatrix::zeros(6, 3);
        let col = DVector::from_fn(6, |i, _| i as f64 + 1.0);
        x.set_column(0, &col);
        x.set_column(1, &col);
        x.set_column(2, &DVector::from_fn(6, |i, _| (i as f64).sin()));
        assert!(matches!(
            irrepresentable_norm(&x, &[0, 1]),
            Err(DiagnosticsError::SingularGram(_))
        ));
    }

    #[test]
    fn condition_number_basics() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert_abs_diff_eq!(condition_number(&id).unwrap(), 1.0);

        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        assert_abs_diff_eq!(condition_number(&diag).unwrap(), 4.0);

        // Compound symmetry rho = 0.9: eigenvalues 1 ± rho, ratio 19.
        let cs = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        assert_abs_diff_eq!(condition_number(&cs).unwrap(), 19.0, epsilon = 1e-10);
    }

    #[test]
    fn condition_number_is_scale_invariant_and_at_least_one() {
        let mut rng = crate::rng::substream(3, "cond", 0);
        for _ in 0..10 {
            let a = DMatrix::<f64>::from_fn(5, 5, |_, _| rng.sample(StandardNormal));
            let spd = &a * a.transpose() + DMatrix::identity(5, 5);
            let k = condition_number(&spd).unwrap();
            assert!(k >= 1.0);
            let k2 = condition_number(&(spd * 3.7)).unwrap();
            assert_abs_diff_eq!(k, k2, epsilon = 1e-8 * k);
        }
    }

    #[test]
    fn non_pd_matrices_are_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            condition_number(&m),
            Err(DiagnosticsError::NotPd(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(matches!(
            condition_number(&asym),
            Err(DiagnosticsError::NotSymmetric)
        ));
    }
}
