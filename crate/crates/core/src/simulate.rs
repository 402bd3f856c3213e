//! Synthetic benchmark scenarios and evaluation metrics.
//!
//! Scenarios describe a block compound-symmetric Gaussian design: groups of
//! consecutive variables share one within-group covariance, groups are
//! mutually independent, and one variable per group is active (or an explicit
//! active set is given). Negative within-group covariances make the block
//! indefinite, in which case the matrix is repaired to the nearest positive
//! definite one before sampling.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::standardize;
use crate::pipeline::{run_selection, PipelineKind, PipelineOptions};
use crate::rng::{derive_seed, substream};
use crate::stability::{select_variables, stability_phi};

/// Eigenvalue floor applied during positive-definite repair.
const PD_FLOOR: f64 = 1e-8;

/// Repair must leave the smallest eigenvalue at or above this.
const PD_MIN_EIGENVALUE: f64 = 1e-10;

/// Decision thresholds swept when scoring selections.
pub const PI_GRID: [f64; 7] = [0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9];

/// A run aborts when more than this fraction of replicates fail.
const MAX_FAILURE_FRACTION: f64 = 0.2;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("covariance repair left min eigenvalue {0:.3e}, below 1e-10")]
    NotRepairable(f64),
    #[error("repaired covariance is not factorizable")]
    FactorizationFailed,
    #[error("true support is empty; F1 is undefined")]
    UndefinedTruth,
    #[error("{failed} of {total} replicates failed: first error: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error(transparent)]
    Pipeline(#[from] crate::pipeline::PipelineError),
    #[error(transparent)]
    Data(#[from] crate::data_model::DataError),
}

/// One block of consecutive variables sharing a covariance value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    /// 1-based inclusive index range.
    pub range: (usize, usize),
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ActiveRule {
    LowestIndex,
    HighestIndex,
    Explicit { indices: Vec<usize> },
}

/// Declarative description of a synthetic experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub groups: Vec<GroupSpec>,
    pub active_rule: ActiveRule,
    /// Coefficients of the active variables, in ascending index order.
    pub beta: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
    /// Subsamples per stability run.
    pub b: usize,
    pub dataset_count: usize,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimulateError> {
        let err = |msg: String| Err(SimulateError::InvalidScenario(msg));
        if self.n < 4 {
            return err(format!("n = {} is too small", self.n));
        }
        let mut covered = vec![false; self.p];
        for g in &self.groups {
            let (lo, hi) = g.range;
            if lo < 1 || hi > self.p || lo > hi {
                return err(format!("group range {:?} outside 1..={}", g.range, self.p));
            }
            if g.rho.abs() >= 1.0 {
                return err(format!("|rho| must be below 1, got {}", g.rho));
            }
            for j in lo..=hi {
                if covered[j - 1] {
                    return err(format!("variable {j} appears in two groups"));
                }
                covered[j - 1] = true;
            }
        }
        if !covered.iter().all(|&c| c) {
            return err("groups do not partition 1..=p".to_string());
        }
        let actives = self.active_set();
        if actives.len() != self.beta.len() {
            return err(format!(
                "{} beta values for {} active variables",
                self.beta.len(),
                actives.len()
            ));
        }
        if let ActiveRule::Explicit { indices } = &self.active_rule {
            if indices.iter().any(|&j| j < 1 || j > self.p) {
                return err("explicit active index outside 1..=p".to_string());
            }
        }
        if !(self.noise_sd > 0.0) {
            return err(format!("noise_sd must be positive, got {}", self.noise_sd));
        }
        if self.dataset_count == 0 {
            return err("dataset_count must be at least 1".to_string());
        }
        Ok(())
    }

    /// Active variable indices (1-based, ascending).
    pub fn active_set(&self) -> Vec<usize> {
        let mut actives = match &self.active_rule {
            ActiveRule::LowestIndex => self.groups.iter().map(|g| g.range.0).collect(),
            ActiveRule::HighestIndex => self.groups.iter().map(|g| g.range.1).collect(),
            ActiveRule::Explicit { indices } => indices.clone(),
        };
        actives.sort_unstable();
        actives.dedup();
        actives
    }
}

/// Assembles the block compound-symmetric covariance, repairing it when a
/// negative within-group covariance breaks positive definiteness.
pub fn build_covariance(cfg: &ScenarioConfig) -> Result<DMatrix<f64>, SimulateError> {
    cfg.validate()?;
    let mut sigma = DMatrix::<f64>::identity(cfg.p, cfg.p);
    for g in &cfg.groups {
        let (lo, hi) = g.range;
        for j in lo..=hi {
            for k in lo..=hi {
                if j != k {
                    sigma[(j - 1, k - 1)] = g.rho;
                }
            }
        }
    }
    let has_negative = cfg.groups.iter().any(|g| g.rho < 0.0);
    if has_negative && min_eigenvalue(&sigma) <= 0.0 {
        sigma = nearest_pd(&sigma);
        let min_eig = min_eigenvalue(&sigma);
        if min_eig < PD_MIN_EIGENVALUE {
            return Err(SimulateError::NotRepairable(min_eig));
        }
    }
    Ok(sigma)
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Nearest positive definite repair: floor the eigenvalues, reconstruct, and
/// rescale back to a unit diagonal.
pub fn nearest_pd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let floored = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| v.max(PD_FLOOR)),
    );
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
    // Symmetrize away rounding, then normalize the diagonal.
    let sym = (&rebuilt + rebuilt.transpose()) * 0.5;
    let scale: Vec<f64> = (0..sym.nrows()).map(|i| sym[(i, i)].sqrt()).collect();
    DMatrix::from_fn(sym.nrows(), sym.ncols(), |i, j| {
        sym[(i, j)] / (scale[i] * scale[j])
    })
}

/// Draws one replicate: rows i.i.d. N(0, Σ), response `Xβ + ε`. Returns the
/// raw design, raw response, and the true support (1-based).
pub fn generate_dataset(
    cfg: &ScenarioConfig,
    replicate: usize,
) -> Result<(DMatrix<f64>, DVector<f64>, Vec<usize>), SimulateError> {
    let sigma = build_covariance(cfg)?;
    let chol = Cholesky::new(sigma).ok_or(SimulateError::FactorizationFailed)?;
    let l = chol.l();

    let mut rng = substream(cfg.seed, "data", replicate as u64);
    // Draw order is fixed: the design row by row, then the noise vector.
    let z = DMatrix::from_fn(cfg.n, cfg.p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = z * l.transpose();

    let actives = cfg.active_set();
    let mut y = DVector::<f64>::zeros(cfg.n);
    for (&j, &b) in actives.iter().zip(cfg.beta.iter()) {
        y.axpy(b, &x.column(j - 1).into_owned(), 1.0);
    }
    for i in 0..cfg.n {
        y[i] += cfg.noise_sd * rng.sample::<f64, _>(StandardNormal);
    }
    Ok((x, y, actives))
}

/// Harmonic mean of precision and recall of `selected` against `truth`.
/// Empty selections score 0; an empty truth set is an error.
pub fn f1_score(selected: &[usize], truth: &[usize]) -> Result<f64, SimulateError> {
    if truth.is_empty() {
        return Err(SimulateError::UndefinedTruth);
    }
    if selected.is_empty() {
        return Ok(0.0);
    }
    let hits = selected.iter().filter(|j| truth.contains(j)).count() as f64;
    if hits == 0.0 {
        return Ok(0.0);
    }
    let precision = hits / selected.len() as f64;
    let recall = hits / truth.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Outcome of one replicate: stability and accuracy at the tuned penalty.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub tuned_lambda: f64,
    pub phi: Option<f64>,
    /// F1 against the true support for each threshold in [`PI_GRID`].
    pub f1_by_pi: Vec<f64>,
    /// Selection frequencies at the tuned penalty, by design column.
    pub frequencies: Vec<f64>,
    /// Original 1-based variable index of each design column.
    pub column_index: Vec<usize>,
}

/// Aggregated evaluation of one pipeline over all replicates.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub pipeline: PipelineKind,
    pub pi_grid: Vec<f64>,
    pub mean_f1: Vec<f64>,
    pub outcomes: Vec<ReplicateOutcome>,
    pub failures: Vec<(usize, String)>,
}

impl EvalReport {
    /// Mean stability over replicates with a defined value.
    pub fn mean_phi(&self) -> Option<f64> {
        let vals: Vec<f64> = self.outcomes.iter().filter_map(|o| o.phi).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

/// Runs the full evaluation loop: generate, standardize, select with the
/// requested pipeline, tune by the 1-sd rule, and score the F1 sweep.
/// Individual replicate failures are recorded; the run only aborts when more
/// than 20% fail.
pub fn run_experiment(
    cfg: &ScenarioConfig,
    kind: PipelineKind,
    opts: &PipelineOptions,
) -> Result<EvalReport, SimulateError> {
    cfg.validate()?;
    let results: Vec<Result<ReplicateOutcome, String>> = (0..cfg.dataset_count)
        .into_par_iter()
        .map(|r| run_replicate(cfg, kind, opts, r).map_err(|e| e.to_string()))
        .collect();

    let total = results.len();
    let mut outcomes = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(outcome) => outcomes.push(outcome),
            Err(msg) => failures.push((r, msg)),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(SimulateError::TooManyFailures {
            failed: failures.len(),
            total,
            first: failures[0].1.clone(),
        });
    }

    let mut mean_f1 = vec![0.0; PI_GRID.len()];
    for outcome in &outcomes {
        for (acc, f1) in mean_f1.iter_mut().zip(&outcome.f1_by_pi) {
            *acc += f1;
        }
    }
    let count = outcomes.len().max(1) as f64;
    for acc in &mut mean_f1 {
        *acc /= count;
    }

    log::info!(
        "experiment '{}' pipeline {:?}: mean phi {:?} over {} replicates ({} failed)",
        cfg.name,
        kind,
        outcomes
            .iter()
            .filter_map(|o| o.phi)
            .sum::<f64>()
            / outcomes.len().max(1) as f64,
        outcomes.len(),
        failures.len()
    );

    Ok(EvalReport {
        pipeline: kind,
        pi_grid: PI_GRID.to_vec(),
        mean_f1,
        outcomes,
        failures,
    })
}

fn run_replicate(
    cfg: &ScenarioConfig,
    kind: PipelineKind,
    opts: &PipelineOptions,
    replicate: usize,
) -> Result<ReplicateOutcome, SimulateError> {
    let (raw_x, raw_y, truth) = generate_dataset(cfg, replicate)?;
    let d = standardize(&raw_x, &raw_y)?;

    let mut opts = opts.clone();
    opts.subsamples = cfg.b;
    opts.plan_seed = derive_seed(cfg.seed, "plan", replicate as u64);
    let outcome = run_selection(&d, kind, &opts)?;

    // Experiments tune by the 1-sd rule so every replicate uses the same rule
    // even when the 0.75 crossing exists.
    let lambda = outcome.tuning.lambda_stable_1sd;
    let m = outcome.run.matrix_at(lambda).map_err(crate::pipeline::PipelineError::from)?;
    let phi = stability_phi(m);
    let frequencies = m.frequencies();

    let mut f1_by_pi = Vec::with_capacity(PI_GRID.len());
    for &pi in &PI_GRID {
        let selected =
            select_variables(m, pi).map_err(crate::pipeline::PipelineError::from)?;
        f1_by_pi.push(f1_score(&selected, &truth)?);
    }

    Ok(ReplicateOutcome {
        replicate,
        tuned_lambda: lambda,
        phi,
        f1_by_pi,
        frequencies,
        column_index: m.column_index().to_vec(),
    })
}

/// Built-in scenario presets covering the benchmark settings.
pub mod presets {
    use super::{ActiveRule, GroupSpec, ScenarioConfig};

    pub const NAMES: [&str; 6] = [
        "scenario1",
        "scenario2",
        "negative_signs",
        "mixed_signs",
        "lowdim20",
        "corollary2_toy",
    ];

    fn grouped(p: usize, rhos: &[f64]) -> Vec<GroupSpec> {
        let size = p / rhos.len();
        rhos.iter()
            .enumerate()
            .map(|(g, &rho)| GroupSpec {
                range: (g * size + 1, (g + 1) * size),
                rho,
            })
            .collect()
    }

    fn base(name: &str, rhos: &[f64], active_rule: ActiveRule) -> ScenarioConfig {
        ScenarioConfig {
            name: name.to_string(),
            n: 50,
            p: 500,
            groups: grouped(500, rhos),
            active_rule,
            beta: vec![4.0, 3.5, 3.0, 2.5, 2.0],
            noise_sd: 1.0,
            seed: 2024,
            b: 100,
            dataset_count: 100,
        }
    }

    /// Five groups of 100 with increasing positive covariance; the
    /// lowest-indexed variable in each group is active.
    pub fn scenario1() -> ScenarioConfig {
        base("scenario1", &[0.2, 0.4, 0.6, 0.8, 0.9], ActiveRule::LowestIndex)
    }

    /// Like `scenario1` but the highest-indexed variable in each group is
    /// active.
    pub fn scenario2() -> ScenarioConfig {
        base("scenario2", &[0.2, 0.4, 0.6, 0.8, 0.9], ActiveRule::HighestIndex)
    }

    /// Scenario 2 with all within-group covariances negated; the covariance
    /// matrix is repaired to the nearest positive definite one.
    pub fn negative_signs() -> ScenarioConfig {
        base(
            "negative_signs",
            &[-0.2, -0.4, -0.6, -0.8, -0.9],
            ActiveRule::HighestIndex,
        )
    }

    /// Scenario 2 with alternating covariance signs.
    pub fn mixed_signs() -> ScenarioConfig {
        base(
            "mixed_signs",
            &[0.2, -0.4, 0.6, -0.8, 0.9],
            ActiveRule::HighestIndex,
        )
    }

    /// Low-dimensional variant: 20 variables in five groups of four, highest
    /// index active.
    pub fn lowdim20() -> ScenarioConfig {
        let mut cfg = base("lowdim20", &[0.2, 0.4, 0.6, 0.8, 0.9], ActiveRule::HighestIndex);
        cfg.p = 20;
        cfg.groups = grouped(20, &[0.2, 0.4, 0.6, 0.8, 0.9]);
        cfg
    }

    /// Three variables: a strongly correlated, equally relevant pair plus an
    /// independent weaker signal.
    pub fn corollary2_toy() -> ScenarioConfig {
        ScenarioConfig {
            name: "corollary2_toy".to_string(),
            n: 200,
            p: 3,
            groups: vec![
                GroupSpec { range: (1, 2), rho: 0.95 },
                GroupSpec { range: (3, 3), rho: 0.0 },
            ],
            active_rule: ActiveRule::Explicit { indices: vec![1, 2, 3] },
            beta: vec![2.0, 2.0, 1.0],
            noise_sd: 1.0,
            seed: 2024,
            b: 100,
            dataset_count: 100,
        }
    }

    pub fn by_name(name: &str) -> Option<ScenarioConfig> {
        match name {
            "scenario1" => Some(scenario1()),
            "scenario2" => Some(scenario2()),
            "negative_signs" => Some(negative_signs()),
            "mixed_signs" => Some(mixed_signs()),
            "lowdim20" => Some(lowdim20()),
            "corollary2_toy" => Some(corollary2_toy()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_scenario() -> ScenarioConfig {
        ScenarioConfig {
            name: "tiny".to_string(),
            n: 30,
            p: 4,
            groups: vec![
                GroupSpec { range: (1, 2), rho: 0.5 },
                GroupSpec { range: (3, 4), rho: 0.0 },
            ],
            active_rule: ActiveRule::LowestIndex,
            beta: vec![2.0, 1.5],
            noise_sd: 1.0,
            seed: 99,
            b: 20,
            dataset_count: 3,
        }
    }

    #[test]
    fn covariance_has_block_structure() {
        let sigma = build_covariance(&tiny_scenario()).unwrap();
        assert_eq!(sigma[(0, 0)], 1.0);
        assert_eq!(sigma[(0, 1)], 0.5);
        assert_eq!(sigma[(1, 0)], 0.5);
        assert_eq!(sigma[(0, 2)], 0.0);
        assert_eq!(sigma[(2, 3)], 0.0);
    }

    #[test]
    fn paper_scale_positive_covariance_is_pd() {
        let sigma = build_covariance(&presets::scenario1()).unwrap();
        // Compound symmetry with rho < 1 keeps blocks positive definite; the
        // smallest eigenvalue is 1 - max rho.
        assert!(min_eigenvalue(&sigma) > 0.09);
    }

    #[test]
    fn mixed_signs_covariance_is_repaired_to_pd() {
        let mut cfg = presets::mixed_signs();
        // Shrink to a desk size so the eigen check stays fast.
        cfg.p = 50;
        cfg.groups = vec![
            GroupSpec { range: (1, 10), rho: 0.2 },
            GroupSpec { range: (11, 20), rho: -0.4 },
            GroupSpec { range: (21, 30), rho: 0.6 },
            GroupSpec { range: (31, 40), rho: -0.8 },
            GroupSpec { range: (41, 50), rho: 0.9 },
        ];
        let sigma = build_covariance(&cfg).unwrap();
        assert!(min_eigenvalue(&sigma) >= PD_MIN_EIGENVALUE);
        for i in 0..50 {
            assert_abs_diff_eq!(sigma[(i, i)], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn nearest_pd_fixes_an_indefinite_two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.2, -1.2, 1.0]);
        let repaired = nearest_pd(&m);
        assert!(min_eigenvalue(&repaired) > 0.0);
        assert!(repaired[(0, 1)].abs() < 1.0);
        assert_abs_diff_eq!(repaired[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(repaired[(0, 1)], repaired[(1, 0)], epsilon = 1e-12);
    }

    #[test]
    fn nearest_pd_leaves_pd_matrices_alone() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        assert!((nearest_pd(&m) - &m).amax() < 1e-10);
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((nearest_pd(&id) - &id).amax() < 1e-12);
    }

    #[test]
    fn generated_data_is_reproducible() {
        let cfg = tiny_scenario();
        let (x1, y1, t1) = generate_dataset(&cfg, 2).unwrap();
        let (x2, y2, t2) = generate_dataset(&cfg, 2).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(y1, y2);
        assert_eq!(t1, t2);
        let (x3, _, _) = generate_dataset(&cfg, 3).unwrap();
        assert_ne!(x1, x3);
    }

    #[test]
    fn active_rules_place_signals_per_group() {
        let cfg = tiny_scenario();
        assert_eq!(cfg.active_set(), vec![1, 3]);
        let mut hi = cfg.clone();
        hi.active_rule = ActiveRule::HighestIndex;
        assert_eq!(hi.active_set(), vec![2, 4]);
        assert_eq!(presets::scenario1().active_set(), vec![1, 101, 201, 301, 401]);
        assert_eq!(
            presets::scenario2().active_set(),
            vec![100, 200, 300, 400, 500]
        );
    }

    #[test]
    fn null_model_response_is_uncorrelated_noise() {
        let mut cfg = tiny_scenario();
        cfg.active_rule = ActiveRule::Explicit { indices: vec![1] };
        cfg.beta = vec![0.0];
        cfg.n = 4000;
        let (x, y, _) = generate_dataset(&cfg, 0).unwrap();
        for j in 0..cfg.p {
            let col = x.column(j);
            let corr = col.dot(&y) / (col.norm() * y.norm());
            assert!(corr.abs() < 0.06, "column {j} correlates {corr}");
        }
    }

    #[test]
    fn empirical_covariance_matches_target() {
        // Monte-Carlo oracle at n = 100_000: within-group correlation lands
        // within ±0.01 of rho and the Frobenius gap shrinks below 0.05.
        let cfg = ScenarioConfig {
            name: "cov-check".to_string(),
            n: 100_000,
            p: 4,
            groups: vec![GroupSpec { range: (1, 4), rho: 0.6 }],
            active_rule: ActiveRule::LowestIndex,
            beta: vec![1.0],
            noise_sd: 1.0,
            seed: 5,
            b: 10,
            dataset_count: 1,
        };
        let (x, _, _) = generate_dataset(&cfg, 0).unwrap();
        let n = cfg.n as f64;
        let mut frob = 0.0;
        for j in 0..4 {
            for k in 0..4 {
                let cj = x.column(j);
                let ck = x.column(k);
                let mj = cj.sum() / n;
                let mk = ck.sum() / n;
                let cov = (cj.map(|v| v - mj).dot(&ck.map(|v| v - mk))) / (n - 1.0);
                let target = if j == k { 1.0 } else { 0.6 };
                if j != k {
                    assert!(
                        (cov - 0.6).abs() < 0.01,
                        "cov[{j},{k}] = {cov}, expected 0.6"
                    );
                }
                frob += (cov - target) * (cov - target);
            }
        }
        assert!(frob.sqrt() < 0.05);
    }

    #[test]
    fn f1_hand_cases() {
        assert_abs_diff_eq!(f1_score(&[1, 2], &[1, 2]).unwrap(), 1.0);
        // precision 0.5, recall 0.5.
        assert_abs_diff_eq!(f1_score(&[1, 3], &[1, 2]).unwrap(), 0.5);
        assert_eq!(f1_score(&[], &[1]).unwrap(), 0.0);
        assert!(matches!(f1_score(&[1], &[]), Err(SimulateError::UndefinedTruth)));
    }

    #[test]
    fn f1_arguments_are_not_interchangeable() {
        // The empty conventions break symmetry: an empty selection scores 0,
        // an empty truth set is an error.
        assert_eq!(f1_score(&[], &[1]).unwrap(), 0.0);
        assert!(f1_score(&[1], &[]).is_err());
        // Relabeling both sets leaves the score unchanged.
        let c = f1_score(&[1, 4], &[1, 2]).unwrap();
        let g = f1_score(&[10, 40], &[10, 20]).unwrap();
        assert_abs_diff_eq!(c, g);
    }

    #[test]
    fn presets_are_valid() {
        for name in presets::NAMES {
            let cfg = presets::by_name(name).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, name);
        }
        assert!(presets::by_name("nonsense").is_none());
    }

    #[test]
    fn scenario_json_round_trips() {
        let cfg = presets::corollary2_toy();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.active_rule, cfg.active_rule);
        assert_eq!(back.p, cfg.p);
        assert_eq!(back.groups.len(), cfg.groups.len());
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut gap = tiny_scenario();
        gap.groups.pop();
        assert!(matches!(gap.validate(), Err(SimulateError::InvalidScenario(_))));

        let mut overlap = tiny_scenario();
        overlap.groups[1].range = (2, 4);
        assert!(overlap.validate().is_err());

        let mut bad_rho = tiny_scenario();
        bad_rho.groups[0].rho = 1.0;
        assert!(bad_rho.validate().is_err());

        let mut bad_beta = tiny_scenario();
        bad_beta.beta = vec![1.0];
        assert!(bad_beta.validate().is_err());
    }
}
