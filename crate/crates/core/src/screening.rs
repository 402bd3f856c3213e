//! Predictor ranking by ridge high-dimensional OLS projection.
//!
//! Scores are `|Xᵀ(XXᵀ + rI)⁻¹Y|`, solved through the n x n system so the
//! cost never depends on p x p storage. The adaptive variant re-selects the
//! ridge penalty from a fixed candidate grid until the set of top-ranked
//! variables stops changing, then returns a full ordering over all columns.

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

use crate::data_model::Dataset;

/// Candidate penalties for the adaptive update: a geometric grid spanning
/// [1e-2, 1e4].
const PENALTY_GRID_SIZE: usize = 20;
const PENALTY_GRID_MIN: f64 = 1e-2;
const PENALTY_GRID_MAX: f64 = 1e4;

#[derive(Debug, Error)]
pub enum ScreenError {
    #[error("ridge system is numerically singular at penalty {0}")]
    SingularSystem(f64),
    #[error("penalty must be positive, got {0}")]
    InvalidPenalty(f64),
    #[error("threshold {threshold} must be in 1..={p}")]
    InvalidThreshold { threshold: usize, p: usize },
    #[error("max_iterations must be at least 1")]
    InvalidIterations,
}

/// A full ordering of the columns by predictive power.
#[derive(Debug, Clone)]
pub struct Ranking {
    order: Vec<usize>,
    scores: Vec<f64>,
    penalty_used: f64,
    iterations: usize,
}

impl Ranking {
    /// 1-based column positions, best predictor first. Ties are broken by
    /// ascending position.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Absolute projection coefficients, aligned with the dataset columns
    /// (not with `order`).
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn penalty_used(&self) -> f64 {
        self.penalty_used
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn top_set(&self, k: usize) -> Vec<usize> {
        let mut top: Vec<usize> = self.order[..k].to_vec();
        top.sort_unstable();
        top
    }
}

fn solve_ridge_alpha(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: f64,
) -> Result<DVector<f64>, ScreenError> {
    let n = x.nrows();
    let mut gram = x * x.transpose();
    for i in 0..n {
        gram[(i, i)] += penalty;
    }
    let chol = Cholesky::new(gram).ok_or(ScreenError::SingularSystem(penalty))?;
    Ok(chol.solve(y))
}

/// Ridge-HOLP scores `|Xᵀ(XXᵀ + rI)⁻¹Y|` for an arbitrary design.
pub fn ridge_holp_scores_on(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: f64,
) -> Result<DVector<f64>, ScreenError> {
    if !(penalty > 0.0) {
        return Err(ScreenError::InvalidPenalty(penalty));
    }
    let alpha = solve_ridge_alpha(x, y, penalty)?;
    Ok((x.transpose() * alpha).abs())
}

/// Ridge-HOLP scores for a standardized dataset.
pub fn ridge_holp_scores(d: &Dataset, penalty: f64) -> Result<DVector<f64>, ScreenError> {
    ridge_holp_scores_on(d.x(), d.y(), penalty)
}

fn order_from_scores(scores: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..=scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b - 1]
            .total_cmp(&scores[a - 1])
            .then(a.cmp(&b))
    });
    idx
}

fn pearson(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len() as f64;
    let am = a.sum() / n;
    let bm = b.sum() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..a.len() {
        let xa = a[i] - am;
        let xb = b[i] - bm;
        num += xa * xb;
        da += xa * xa;
        db += xb * xb;
    }
    if da <= 0.0 || db <= 0.0 {
        return f64::NEG_INFINITY;
    }
    num / (da * db).sqrt()
}

/// Correlation between the response and the fitted values from the current
/// top set under a candidate penalty. Used to score penalty candidates.
fn penalty_fitness(d: &Dataset, top: &[usize], penalty: f64) -> Result<f64, ScreenError> {
    let alpha = solve_ridge_alpha(d.x(), d.y(), penalty)?;
    let beta = d.x().transpose() * alpha;
    let mut fitted = DVector::<f64>::zeros(d.n());
    for &j in top {
        fitted.axpy(beta[j - 1], &d.x().column(j - 1).into_owned(), 1.0);
    }
    Ok(pearson(d.y(), &fitted))
}

fn candidate_penalties() -> Vec<f64> {
    let ratio = (PENALTY_GRID_MAX / PENALTY_GRID_MIN).ln();
    (0..PENALTY_GRID_SIZE)
        .map(|i| PENALTY_GRID_MIN * (ratio * i as f64 / (PENALTY_GRID_SIZE - 1) as f64).exp())
        .collect()
}

/// Ranks all columns, re-selecting the ridge penalty adaptively.
///
/// Each iteration scores a fixed grid of candidate penalties by how well the
/// fitted values from the current top `threshold` variables track the
/// response, moves to the best candidate (lowest penalty on ties), and
/// re-ranks. Stops when the top set reaches a fixed point or after
/// `max_iterations` rankings.
pub fn adaptive_rank(
    d: &Dataset,
    threshold: usize,
    max_iterations: usize,
    initial_penalty: f64,
) -> Result<Ranking, ScreenError> {
    if threshold < 1 || threshold > d.p() {
        return Err(ScreenError::InvalidThreshold {
            threshold,
            p: d.p(),
        });
    }
    if max_iterations < 1 {
        return Err(ScreenError::InvalidIterations);
    }
    if !(initial_penalty > 0.0) {
        return Err(ScreenError::InvalidPenalty(initial_penalty));
    }

    let mut penalty = initial_penalty;
    let mut scores = ridge_holp_scores(d, penalty)?;
    let mut ranking = Ranking {
        order: order_from_scores(&scores),
        scores: scores.iter().copied().collect(),
        penalty_used: penalty,
        iterations: 1,
    };
    let mut top = ranking.top_set(threshold);

    while ranking.iterations < max_iterations {
        let mut best = (f64::NEG_INFINITY, penalty);
        for cand in candidate_penalties() {
            let fitness = penalty_fitness(d, &top, cand)?;
            if fitness > best.0 {
                best = (fitness, cand);
            }
        }
        penalty = best.1;
        scores = ridge_holp_scores(d, penalty)?;
        ranking = Ranking {
            order: order_from_scores(&scores),
            scores: scores.iter().copied().collect(),
            penalty_used: penalty,
            iterations: ranking.iterations + 1,
        };
        let new_top = ranking.top_set(threshold);
        if new_top == top {
            break;
        }
        top = new_top;
    }
    log::debug!(
        "adaptive rank: penalty {} after {} iterations",
        ranking.penalty_used,
        ranking.iterations
    );
    Ok(ranking)
}
