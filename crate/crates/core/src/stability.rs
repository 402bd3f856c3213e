//! Stability selection over random half-samples.
//!
//! For every penalty in a shared grid, the engine fits the Lasso on `B`
//! half-samples of the design rows and records each fit's support as a row of
//! a binary selection matrix `M(λ)`. The per-λ stability statistic compares
//! the column variances of `M(λ)` against the variance of selection that is
//! random at the same sparsity; tuning picks the penalty by stability rather
//! than prediction error.
//!
//! Half-sampled rows of an orthonormal design are no longer orthonormal, so
//! subsample fits go through coordinate descent; the closed form is only used
//! when a row subset actually passes the orthonormality check.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rayon::prelude::*;
use thiserror::Error;

use crate::lasso::{
    coordinate_descent_on, kkt_violation, orthonormal_lasso, LassoError, RegularizationGrid,
    ORTHONORMALITY_TOLERANCE,
};
use crate::orthonormalize::orthonormality_defect;

/// Stability threshold defining `lambda_stable`.
pub const STABLE_THRESHOLD: f64 = 0.75;

/// Default subsample counts: synthetic runs and real-data runs.
pub const DEFAULT_SUBSAMPLES_SYNTHETIC: usize = 100;
pub const DEFAULT_SUBSAMPLES_REAL: usize = 200;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("need n >= 4 rows to draw half-samples, got {0}")]
    TooFewRows(usize),
    #[error("need at least {min} subsamples, got {got}")]
    TooFewSubsamples { min: usize, got: usize },
    #[error("subsample {subsample} at lambda {lambda}: {source}")]
    Solver {
        subsample: usize,
        lambda: f64,
        source: LassoError,
    },
    #[error("every phi in the profile is undefined")]
    NoDefinedStability,
    #[error("lambda {0} is not on the grid")]
    UnknownLambda(f64),
    #[error("pi_thr must lie in (0.5, 1], got {0}")]
    InvalidThreshold(f64),
}

/// Row-index sets for the subsample draws, each of size `n / 2`, drawn
/// without replacement and deterministically from the seed.
#[derive(Debug, Clone)]
pub struct SubsamplePlan {
    sets: Vec<Vec<usize>>,
    n: usize,
    seed: u64,
}

impl SubsamplePlan {
    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draws `b` half-samples of `0..n`.
pub fn subsample_plan(n: usize, b: usize, seed: u64) -> Result<SubsamplePlan, StabilityError> {
    if n < 4 {
        return Err(StabilityError::TooFewRows(n));
    }
    if b < 2 {
        return Err(StabilityError::TooFewSubsamples { min: 2, got: b });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let sets = (0..b)
        .map(|_| {
            let mut rows = rand::seq::index::sample(&mut rng, n, half).into_vec();
            rows.sort_unstable();
            rows
        })
        .collect();
    Ok(SubsamplePlan { sets, n, seed })
}

/// Binary selection outcomes for one penalty: entry `(b, j)` is 1 when
/// subsample `b` selected column `j`.
#[derive(Debug, Clone)]
pub struct SelectionMatrix {
    entries: Vec<u8>,
    b: usize,
    p: usize,
    lambda: f64,
    /// Original 1-based variable index of each column.
    column_index: Vec<usize>,
}

impl SelectionMatrix {
    pub fn new(b: usize, p: usize, lambda: f64, column_index: Vec<usize>) -> Self {
        assert_eq!(column_index.len(), p);
        SelectionMatrix {
            entries: vec![0; b * p],
            b,
            p,
            lambda,
            column_index,
        }
    }

    /// Builds a matrix from explicit rows (tests and traces).
    pub fn from_rows(rows: &[Vec<u8>], lambda: f64, column_index: Vec<usize>) -> Self {
        let b = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut m = SelectionMatrix::new(b, p, lambda, column_index);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), p);
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v != 0);
            }
        }
        m
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn column_index(&self) -> &[usize] {
        &self.column_index
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.entries[row * self.p + col] != 0
    }

    fn set(&mut self, row: usize, col: usize, value: bool) {
        self.entries[row * self.p + col] = u8::from(value);
    }

    fn column_counts_upto(&self, rows: usize) -> Vec<u32> {
        let mut counts = vec![0u32; self.p];
        for i in 0..rows {
            let row = &self.entries[i * self.p..(i + 1) * self.p];
            for (c, &v) in counts.iter_mut().zip(row) {
                *c += u32::from(v);
            }
        }
        counts
    }

    /// Column means: per-variable selection frequencies.
    pub fn frequencies(&self) -> Vec<f64> {
        self.column_counts_upto(self.b)
            .into_iter()
            .map(|c| f64::from(c) / self.b as f64)
            .collect()
    }

    /// Average number of selected variables per subsample.
    pub fn average_selected(&self) -> f64 {
        let total: u64 = self.entries.iter().map(|&v| u64::from(v)).sum();
        total as f64 / self.b as f64
    }

    /// View of the first `rows` rows as a standalone matrix.
    fn head(&self, rows: usize) -> SelectionMatrix {
        SelectionMatrix {
            entries: self.entries[..rows * self.p].to_vec(),
            b: rows,
            p: self.p,
            lambda: self.lambda,
            column_index: self.column_index.clone(),
        }
    }
}

fn phi_from_counts(counts: &[u32], b: usize, p: usize) -> Option<f64> {
    let b_f = b as f64;
    let p_f = p as f64;
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 || total == (b * p) as u64 {
        return None;
    }
    // Unbiased variance of a binary column with c ones among B rows.
    let sum_var: f64 = counts
        .iter()
        .map(|&c| {
            let c = f64::from(c);
            c * (b_f - c) / (b_f * (b_f - 1.0))
        })
        .sum();
    let q = total as f64 / b_f;
    let denom = (q / p_f) * (1.0 - q / p_f);
    Some(1.0 - (sum_var / p_f) / denom)
}

/// The stability statistic of a selection matrix: 1 minus the ratio of the
/// mean unbiased column variance to the variance of random selection at the
/// observed sparsity. `None` when no or all variables are selected.
pub fn stability_phi(m: &SelectionMatrix) -> Option<f64> {
    if m.b < 2 {
        return None;
    }
    phi_from_counts(&m.column_counts_upto(m.b), m.b, m.p)
}

/// Delete-one-row jackknife standard deviation of the stability statistic:
/// `sqrt(((B-1)/B) * Σ (φ_(-b) − mean)²)`. Undefined leave-one-out values are
/// skipped; returns 0 when fewer than two remain.
pub fn phi_jackknife_sd(m: &SelectionMatrix) -> f64 {
    if m.b < 3 {
        return 0.0;
    }
    let full = m.column_counts_upto(m.b);
    let mut loo = Vec::with_capacity(m.b);
    for i in 0..m.b {
        let mut counts = full.clone();
        let row = &m.entries[i * m.p..(i + 1) * m.p];
        for (c, &v) in counts.iter_mut().zip(row) {
            *c -= u32::from(v);
        }
        if let Some(phi) = phi_from_counts(&counts, m.b - 1, m.p) {
            loo.push(phi);
        }
    }
    let k = loo.len();
    if k < 2 {
        return 0.0;
    }
    let mean = loo.iter().sum::<f64>() / k as f64;
    let ss: f64 = loo.iter().map(|v| (v - mean) * (v - mean)).sum();
    ((k as f64 - 1.0) / k as f64 * ss).sqrt()
}

/// Selection matrices for every grid penalty.
#[derive(Debug, Clone)]
pub struct StabilityRun {
    matrices: Vec<SelectionMatrix>,
}

impl StabilityRun {
    pub fn matrices(&self) -> &[SelectionMatrix] {
        &self.matrices
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.matrices.iter().map(SelectionMatrix::lambda).collect()
    }

    /// The matrix whose penalty is closest to `lambda` (exact in practice:
    /// tuning hands back values taken from the grid).
    pub fn matrix_at(&self, lambda: f64) -> Result<&SelectionMatrix, StabilityError> {
        self.matrices
            .iter()
            .min_by(|a, b| {
                (a.lambda() - lambda)
                    .abs()
                    .total_cmp(&(b.lambda() - lambda).abs())
            })
            .filter(|m| (m.lambda() - lambda).abs() <= 1e-12 * lambda.max(1.0))
            .ok_or(StabilityError::UnknownLambda(lambda))
    }
}

/// Solver settings for the subsample fits.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// A fit that exhausts `max_sweeps` is still accepted when its
    /// stationarity violation is below this; only the support enters `M(λ)`,
    /// and on underdetermined half-samples the optimum can be a flat valley
    /// where coefficients keep drifting long after the solution has settled.
    pub kkt_slack: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: crate::lasso::DEFAULT_TOLERANCE,
            max_sweeps: 50_000,
            kkt_slack: 1e-4,
        }
    }
}

/// Runs the subsample-by-penalty fits and assembles `M(λ)` for each grid
/// value. Subsamples are independent tasks; the merge is keyed by index so
/// scheduling never affects the result.
pub fn run_stability(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    grid: &RegularizationGrid,
    plan: &SubsamplePlan,
    column_index: &[usize],
    solver: SolverOptions,
) -> Result<StabilityRun, StabilityError> {
    assert_eq!(plan.n(), design.nrows(), "plan drawn for a different row count");
    assert_eq!(column_index.len(), design.ncols());
    let b = plan.sets().len();
    let p = design.ncols();

    let per_subsample: Vec<Result<Vec<Vec<usize>>, StabilityError>> = plan
        .sets()
        .par_iter()
        .enumerate()
        .map(|(bi, rows)| subsample_supports(design, y, grid, bi, rows, solver))
        .collect();

    let mut matrices: Vec<SelectionMatrix> = grid
        .values()
        .iter()
        .map(|&lambda| SelectionMatrix::new(b, p, lambda, column_index.to_vec()))
        .collect();
    for (bi, result) in per_subsample.into_iter().enumerate() {
        let supports = result?;
        for (li, support) in supports.into_iter().enumerate() {
            for j in support {
                matrices[li].set(bi, j, true);
            }
        }
    }
    Ok(StabilityRun { matrices })
}

/// Supports along the grid for one subsample, largest penalty first.
fn subsample_supports(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    grid: &RegularizationGrid,
    subsample: usize,
    rows: &[usize],
    solver: SolverOptions,
) -> Result<Vec<Vec<usize>>, StabilityError> {
    let xb = design.select_rows(rows.iter());
    let yb = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));

    // Row subsets of an orthonormal design lose orthonormality; only use the
    // closed form when this subset genuinely passes the check.
    if orthonormality_defect(&xb) <= ORTHONORMALITY_TOLERANCE {
        return grid
            .values()
            .iter()
            .map(|&lambda| {
                orthonormal_lasso(&xb, &yb, lambda)
                    .map(|c| c.support().to_vec())
                    .map_err(|source| StabilityError::Solver {
                        subsample,
                        lambda,
                        source,
                    })
            })
            .collect();
    }

    let mut warm: Option<DVector<f64>> = None;
    let mut supports = Vec::with_capacity(grid.count());
    for &lambda in grid.values() {
        let fit = match coordinate_descent_on(
            &xb,
            &yb,
            lambda,
            solver.tolerance,
            solver.max_sweeps,
            warm.as_ref(),
        ) {
            Ok(fit) => fit,
            Err(LassoError::NotConverged(cap, fit)) => {
                let violation = kkt_violation(&xb, &yb, lambda, fit.coefficients.values());
                if violation <= solver.kkt_slack {
                    *fit
                } else {
                    return Err(StabilityError::Solver {
                        subsample,
                        lambda,
                        source: LassoError::NotConverged(cap, fit),
                    });
                }
            }
            Err(source) => {
                return Err(StabilityError::Solver {
                    subsample,
                    lambda,
                    source,
                })
            }
        };
        warm = Some(fit.coefficients.values().clone());
        supports.push(fit.coefficients.support().to_vec());
    }
    Ok(supports)
}

/// Per-penalty summary of a stability run.
#[derive(Debug, Clone)]
pub struct ProfilePoint {
    pub lambda: f64,
    pub phi: Option<f64>,
    pub phi_sd: f64,
    pub q: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityProfile {
    pub points: Vec<ProfilePoint>,
    /// Selection frequencies per penalty, aligned with `points`.
    pub frequencies: Vec<Vec<f64>>,
}

pub fn build_profile(run: &StabilityRun) -> StabilityProfile {
    let points = run
        .matrices()
        .par_iter()
        .map(|m| ProfilePoint {
            lambda: m.lambda(),
            phi: stability_phi(m),
            phi_sd: phi_jackknife_sd(m),
            q: m.average_selected(),
        })
        .collect();
    let frequencies = run.matrices().iter().map(SelectionMatrix::frequencies).collect();
    StabilityProfile { points, frequencies }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningRule {
    Stable,
    Stable1Sd,
}

#[derive(Debug, Clone)]
pub struct TuningResult {
    pub lambda_stable: Option<f64>,
    pub lambda_stable_1sd: f64,
    pub rule_used: TuningRule,
}

impl TuningResult {
    /// The penalty a selection run should operate at: `lambda_stable` when it
    /// exists, the 1-sd value otherwise.
    pub fn operating_lambda(&self) -> f64 {
        self.lambda_stable.unwrap_or(self.lambda_stable_1sd)
    }
}

/// Scans the profile for the two tuning rules. `lambda_stable` is the
/// smallest penalty whose stability exceeds 0.75; the 1-sd rule takes the
/// smallest penalty whose stability stays within one standard deviation of
/// the maximum. Undefined stabilities are skipped.
pub fn tune_lambda(profile: &StabilityProfile) -> Result<TuningResult, StabilityError> {
    let defined: Vec<&ProfilePoint> = profile
        .points
        .iter()
        .filter(|pt| pt.phi.is_some())
        .collect();
    if defined.is_empty() {
        return Err(StabilityError::NoDefinedStability);
    }

    let lambda_stable = defined
        .iter()
        .filter(|pt| pt.phi.unwrap() > STABLE_THRESHOLD)
        .map(|pt| pt.lambda)
        .min_by(f64::total_cmp);

    // Largest penalty attaining the maximum decides the sd on ties.
    let best = defined
        .iter()
        .max_by(|a, b| {
            a.phi
                .unwrap()
                .total_cmp(&b.phi.unwrap())
                .then(a.lambda.total_cmp(&b.lambda))
        })
        .expect("nonempty");
    let floor = best.phi.unwrap() - best.phi_sd;
    let lambda_stable_1sd = defined
        .iter()
        .filter(|pt| pt.phi.unwrap() >= floor)
        .map(|pt| pt.lambda)
        .min_by(f64::total_cmp)
        .expect("the maximum itself qualifies");

    Ok(TuningResult {
        lambda_stable,
        lambda_stable_1sd,
        rule_used: if lambda_stable.is_some() {
            TuningRule::Stable
        } else {
            TuningRule::Stable1Sd
        },
    })
}

/// Variables whose selection frequency reaches `pi_thr`, reported as original
/// 1-based indices.
pub fn select_variables(m: &SelectionMatrix, pi_thr: f64) -> Result<Vec<usize>, StabilityError> {
    if !(pi_thr > 0.5 && pi_thr <= 1.0) {
        return Err(StabilityError::InvalidThreshold(pi_thr));
    }
    let mut selected: Vec<usize> = m
        .frequencies()
        .iter()
        .enumerate()
        .filter(|(_, f)| **f >= pi_thr)
        .map(|(j, _)| m.column_index()[j])
        .collect();
    selected.sort_unstable();
    Ok(selected)
}

#[derive(Debug, Clone)]
pub struct TracePoint {
    pub b: usize,
    pub phi: Option<f64>,
    pub ci_halfwidth: f64,
}

/// Stability of the leading `b` rows for b = 2..=B, with a 95% jackknife
/// confidence half-width per point. Shows how quickly the statistic settles
/// as subsamples accumulate.
pub fn convergence_trace(
    run: &StabilityRun,
    lambda: f64,
) -> Result<Vec<TracePoint>, StabilityError> {
    let m = run.matrix_at(lambda)?;
    if m.b() < 2 {
        return Err(StabilityError::TooFewSubsamples { min: 2, got: m.b() });
    }
    Ok((2..=m.b())
        .into_par_iter()
        .map(|b| {
            let head = m.head(b);
            TracePoint {
                b,
                phi: stability_phi(&head),
                ci_halfwidth: 1.96 * phi_jackknife_sd(&head),
            }
        })
        .collect())
}
