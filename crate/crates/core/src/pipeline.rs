//! End-to-end selection pipelines.
//!
//! Three variants share one engine:
//!
//! - `raw`: stability selection straight on the standardized design;
//! - `decorrelated`: rank columns by predictive power, reorder, orthonormalize,
//!   then run stability selection on the decorrelated design;
//! - `decorrelated_no_ordering`: orthonormalize in the given column order
//!   (the ablation that shows why the ranking step matters).
//!
//! Orthonormalization can produce at most n orthonormal vectors, and
//! standardized columns span an (n-1)-dimensional space. When p exceeds
//! n - 1 the decorrelated variants keep only the leading
//! min(n - 1, screen_threshold) columns of the (possibly reordered) design:
//! the screening threshold is the number of variables the screen retains, and
//! the rank ceiling caps it. `PipelineOptions::retain` overrides the budget.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::{permute_columns, DataError, Dataset};
use crate::lasso::{LassoError, RegularizationGrid, DEFAULT_GRID_COUNT};
use crate::orthonormalize::{gram_schmidt, GsMode, OrthoError, QrFactors};
use crate::screening::{adaptive_rank, Ranking, ScreenError};
use crate::stability::{
    build_profile, run_stability, subsample_plan, SolverOptions, StabilityError, StabilityProfile,
    StabilityRun, TuningResult,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Screen(#[from] ScreenError),
    #[error(transparent)]
    Ortho(#[from] OrthoError),
    #[error(transparent)]
    Lasso(#[from] LassoError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Raw,
    Decorrelated,
    DecorrelatedNoOrdering,
}

impl PipelineKind {
    pub fn label(self) -> &'static str {
        match self {
            PipelineKind::Raw => "raw",
            PipelineKind::Decorrelated => "decorrelated",
            PipelineKind::DecorrelatedNoOrdering => "decorrelated_no_ordering",
        }
    }
}

/// Knobs shared by every pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub gs_mode: GsMode,
    pub screen_threshold: usize,
    pub screen_max_iterations: usize,
    pub initial_penalty: f64,
    pub grid_count: usize,
    /// Smallest-to-largest penalty ratio; `None` picks 1e-3 when p > n and
    /// 1e-4 otherwise, judged on the input dataset.
    pub grid_ratio: Option<f64>,
    pub subsamples: usize,
    pub plan_seed: u64,
    pub solver: SolverOptions,
    /// Column budget for the decorrelated variants; `None` keeps
    /// min(p, n - 1).
    pub retain: Option<usize>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            gs_mode: GsMode::Classical,
            screen_threshold: 10,
            screen_max_iterations: 10,
            initial_penalty: 10.0,
            grid_count: DEFAULT_GRID_COUNT,
            grid_ratio: None,
            subsamples: crate::stability::DEFAULT_SUBSAMPLES_SYNTHETIC,
            plan_seed: 0,
            solver: SolverOptions::default(),
            retain: None,
        }
    }
}

/// The prepared design a pipeline ran stability selection on.
#[derive(Debug, Clone)]
pub struct PreparedDesign {
    pub matrix: nalgebra::DMatrix<f64>,
    /// Original 1-based variable index per design column.
    pub column_index: Vec<usize>,
    pub column_names: Vec<String>,
    pub ranking: Option<Ranking>,
    pub factors: Option<QrFactors>,
}

/// Everything a selection run produces.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub design: PreparedDesign,
    pub grid: RegularizationGrid,
    pub run: StabilityRun,
    pub profile: StabilityProfile,
    pub tuning: TuningResult,
}

/// Reorders (for the ordered variant), truncates to the column budget, and
/// orthonormalizes. Shared by the full pipeline and the decorrelate command.
pub fn prepare_design(
    d: &Dataset,
    kind: PipelineKind,
    opts: &PipelineOptions,
) -> Result<PreparedDesign, PipelineError> {
    match kind {
        PipelineKind::Raw => Ok(PreparedDesign {
            matrix: d.x().clone(),
            column_index: d.original_index().to_vec(),
            column_names: d.column_names().to_vec(),
            ranking: None,
            factors: None,
        }),
        PipelineKind::Decorrelated | PipelineKind::DecorrelatedNoOrdering => {
            let (ordered, ranking) = if kind == PipelineKind::Decorrelated {
                let threshold = opts.screen_threshold.min(d.p()).max(1);
                let ranking = adaptive_rank(
                    d,
                    threshold,
                    opts.screen_max_iterations,
                    opts.initial_penalty,
                )?;
                (permute_columns(d, ranking.order())?, Some(ranking))
            } else {
                (d.clone(), None)
            };

            let rank_ceiling = d.n().saturating_sub(1);
            let budget = opts
                .retain
                .unwrap_or_else(|| {
                    if d.p() > rank_ceiling {
                        rank_ceiling.min(opts.screen_threshold)
                    } else {
                        d.p()
                    }
                })
                .min(ordered.p())
                .max(1);
            let kept = if budget < ordered.p() {
                ordered.retain_leading(budget)
            } else {
                ordered
            };

            let factors = gram_schmidt(&kept, opts.gs_mode)?;
            Ok(PreparedDesign {
                matrix: factors.q().clone(),
                column_index: kept.original_index().to_vec(),
                column_names: kept.column_names().to_vec(),
                ranking,
                factors: Some(factors),
            })
        }
    }
}

/// Runs the chosen pipeline end to end: prepare the design, build the shared
/// penalty grid on the full rows, fit every subsample, and tune.
pub fn run_selection(
    d: &Dataset,
    kind: PipelineKind,
    opts: &PipelineOptions,
) -> Result<SelectionOutcome, PipelineError> {
    let design = prepare_design(d, kind, opts)?;

    let ratio = opts
        .grid_ratio
        .unwrap_or(if d.p() > d.n() { 1e-3 } else { 1e-4 });
    let grid = RegularizationGrid::from_design(&design.matrix, d.y(), opts.grid_count, ratio)?;

    let plan = subsample_plan(d.n(), opts.subsamples, opts.plan_seed)?;
    let run = run_stability(
        &design.matrix,
        d.y(),
        &grid,
        &plan,
        &design.column_index,
        opts.solver,
    )?;
    let profile = build_profile(&run);
    let tuning = crate::stability::tune_lambda(&profile)?;

    Ok(SelectionOutcome {
        design,
        grid,
        run,
        profile,
        tuning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::standardize;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn signal_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = crate::rng::substream(seed, "pipe-test", 0);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut y = x.column(0) * 4.0 + x.column(1) * 3.0;
        for i in 0..n {
            y[i] += rng.sample::<f64, _>(StandardNormal);
        }
        standardize(&x, &y).unwrap()
    }

    #[test]
    fn raw_pipeline_keeps_all_columns() {
        let d = signal_dataset(30, 6, 1);
        let out = run_selection(&d, PipelineKind::Raw, &PipelineOptions::default()).unwrap();
        assert_eq!(out.design.column_index, vec![1, 2, 3, 4, 5, 6]);
        assert!(out.design.factors.is_none());
    }

    #[test]
    fn decorrelated_pipeline_orders_and_orthonormalizes() {
        let d = signal_dataset(40, 6, 2);
        let out =
            run_selection(&d, PipelineKind::Decorrelated, &PipelineOptions::default()).unwrap();
        let defect = crate::orthonormalize::orthonormality_defect(&out.design.matrix);
        assert!(defect < 1e-6);
        // The strong signals must be ranked to the front.
        let front: Vec<usize> = out.design.column_index[..2].to_vec();
        assert!(front.contains(&1) && front.contains(&2), "front: {front:?}");
    }

    #[test]
    fn wide_designs_are_truncated_to_the_screen_budget() {
        let d = signal_dataset(20, 40, 3);
        // p > n - 1: keep min(n - 1, screen_threshold) columns.
        for kind in [PipelineKind::Decorrelated, PipelineKind::DecorrelatedNoOrdering] {
            let out = run_selection(&d, kind, &PipelineOptions::default()).unwrap();
            assert_eq!(out.design.matrix.ncols(), 10);
        }
        // A threshold past the rank ceiling stops at n - 1.
        let opts = PipelineOptions {
            screen_threshold: 30,
            ..PipelineOptions::default()
        };
        let out = run_selection(&d, PipelineKind::Decorrelated, &opts).unwrap();
        assert_eq!(out.design.matrix.ncols(), 19);
        // Raw never truncates.
        let raw = run_selection(&d, PipelineKind::Raw, &PipelineOptions::default()).unwrap();
        assert_eq!(raw.design.matrix.ncols(), 40);
    }

    #[test]
    fn narrow_designs_keep_every_column() {
        let d = signal_dataset(30, 12, 8);
        let out = run_selection(&d, PipelineKind::Decorrelated, &PipelineOptions::default()).unwrap();
        assert_eq!(out.design.matrix.ncols(), 12);
    }

    #[test]
    fn no_ordering_variant_keeps_file_order() {
        let d = signal_dataset(20, 40, 4);
        let out = run_selection(
            &d,
            PipelineKind::DecorrelatedNoOrdering,
            &PipelineOptions::default(),
        )
        .unwrap();
        let expected: Vec<usize> = (1..=10).collect();
        assert_eq!(out.design.column_index, expected);
    }

    #[test]
    fn explicit_retain_budget_is_honored() {
        let d = signal_dataset(30, 20, 5);
        let opts = PipelineOptions {
            retain: Some(7),
            ..PipelineOptions::default()
        };
        let out = run_selection(&d, PipelineKind::Decorrelated, &opts).unwrap();
        assert_eq!(out.design.matrix.ncols(), 7);
    }

    #[test]
    fn selection_is_deterministic_given_the_seed() {
        let d = signal_dataset(30, 8, 6);
        let opts = PipelineOptions {
            plan_seed: 12345,
            subsamples: 30,
            grid_count: 25,
            ..PipelineOptions::default()
        };
        let a = run_selection(&d, PipelineKind::Decorrelated, &opts).unwrap();
        let b = run_selection(&d, PipelineKind::Decorrelated, &opts).unwrap();
        assert_eq!(a.tuning.lambda_stable_1sd, b.tuning.lambda_stable_1sd);
        for (ma, mb) in a.run.matrices().iter().zip(b.run.matrices()) {
            assert_eq!(ma.frequencies(), mb.frequencies());
        }
    }

    #[test]
    fn strong_signals_are_selected_at_the_operating_lambda() {
        let d = signal_dataset(60, 6, 7);
        let opts = PipelineOptions {
            subsamples: 50,
            plan_seed: 7,
            ..PipelineOptions::default()
        };
        let out = run_selection(&d, PipelineKind::Decorrelated, &opts).unwrap();
        let m = out.run.matrix_at(out.tuning.operating_lambda()).unwrap();
        let selected = crate::stability::select_variables(m, 0.6).unwrap();
        assert!(selected.contains(&1), "selected {selected:?}");
        assert!(selected.contains(&2), "selected {selected:?}");
    }
}
