//! Stable variable selection for correlated designs.
//!
//! The Lasso picks essentially at random among strongly correlated predictors,
//! which makes its selections unstable across subsamples. This crate improves
//! on that by (i) ranking predictors with a ridge-projection screen, (ii)
//! decorrelating the ranked design through Gram-Schmidt orthonormalization,
//! and (iii) running stability selection with the Lasso on the orthonormal
//! design, tuning the penalty by a stability criterion instead of prediction
//! error.
//!
//! Modules map onto the stages:
//!
//! - [`data_model`]: standardized datasets, CSV ingestion, column bookkeeping
//! - [`screening`]: ridge-projection ranking with an adaptive penalty
//! - [`orthonormalize`]: classical and modified Gram-Schmidt
//! - [`lasso`]: coordinate descent and the orthonormal closed form
//! - [`stability`]: subsample engine, stability measure, penalty tuning
//! - [`pipeline`]: the three end-to-end variants (`raw`, `decorrelated`,
//!   `decorrelated_no_ordering`)
//! - [`simulate`]: synthetic scenarios and the evaluation harness
//! - [`diagnostics`]: irrepresentable-condition and conditioning checks

pub mod data_model;
pub mod diagnostics;
pub mod lasso;
pub mod orthonormalize;
pub mod pipeline;
pub mod rng;
pub mod screening;
pub mod simulate;
pub mod stability;

pub use data_model::{load_csv, permute_columns, standardize, CoefficientVector, Dataset};
pub use lasso::{
    coordinate_descent, make_grid, orthonormal_lasso, LassoFit, RegularizationGrid,
};
pub use orthonormalize::{gram_schmidt, project_rows, GsMode, QrFactors};
pub use pipeline::{run_selection, PipelineKind, PipelineOptions, SelectionOutcome};
pub use screening::{adaptive_rank, ridge_holp_scores, Ranking};
pub use simulate::{
    build_covariance, f1_score, generate_dataset, nearest_pd, run_experiment, ScenarioConfig,
};
pub use stability::{
    convergence_trace, select_variables, stability_phi, subsample_plan, tune_lambda,
    SelectionMatrix, StabilityProfile, TuningResult,
};
