//! Command implementations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use decorr::data_model::{load_csv, load_csv_matrix, standardize_named, write_matrix_csv, Dataset};
use decorr::diagnostics::irrepresentable_norm;
use decorr::orthonormalize::GsMode;
use decorr::pipeline::{prepare_design, run_selection, PipelineKind, PipelineOptions};
use decorr::rng::derive_seed;
use decorr::simulate::{presets, run_experiment, EvalReport, ScenarioConfig, PI_GRID};
use decorr::stability::{convergence_trace, select_variables, stability_phi, TuningRule};

use crate::output::{ensure_dir, opt_cell, write_json, CsvFile, Manifest};
use crate::PipelineFlags;

fn gs_mode_name(mode: GsMode) -> &'static str {
    match mode {
        GsMode::Classical => "classical",
        GsMode::Modified => "modified",
    }
}

fn load_dataset(flags: &PipelineFlags) -> Result<Dataset> {
    let (x, y, names) = load_csv(&flags.input, &flags.response)
        .with_context(|| format!("cannot load {}", flags.input.display()))?;
    standardize_named(&x, &y, names).context("standardization failed")
}

fn validate_flags(flags: &PipelineFlags) -> Result<()> {
    if flags.grid_count < 2 {
        bail!("--grid-count must be at least 2");
    }
    if let Some(r) = flags.grid_ratio {
        if !(r > 0.0 && r < 1.0) {
            bail!("--grid-ratio must lie in (0, 1)");
        }
    }
    if !(flags.pi_thr > 0.5 && flags.pi_thr <= 1.0) {
        bail!("--pi-thr must lie in (0.5, 1]");
    }
    if flags.b < 2 {
        bail!("--B must be at least 2");
    }
    Ok(())
}

fn pipeline_options(flags: &PipelineFlags) -> PipelineOptions {
    PipelineOptions {
        gs_mode: flags.gs_mode.into(),
        screen_threshold: flags.screen_threshold,
        grid_count: flags.grid_count,
        grid_ratio: flags.grid_ratio,
        subsamples: flags.b,
        plan_seed: derive_seed(flags.seed, "plan", 0),
        ..PipelineOptions::default()
    }
}

fn manifest_for(command: &str, flags: &PipelineFlags) -> Manifest {
    let mut m = Manifest::new(command, &flags.out_dir);
    m.input = Some(flags.input.clone());
    m.response = Some(flags.response.clone());
    m.seed = Some(flags.seed);
    m.subsamples = Some(flags.b);
    m.jobs = flags.jobs;
    m.grid_count = Some(flags.grid_count);
    m.grid_ratio = flags.grid_ratio;
    m.pi_thr = Some(flags.pi_thr);
    m.screen_threshold = Some(flags.screen_threshold);
    m.gs_mode = Some(gs_mode_name(flags.gs_mode.into()).to_string());
    m.pipeline = Some(vec![PipelineKind::from(flags.pipeline).label().to_string()]);
    m
}

pub fn rank(flags: &PipelineFlags) -> Result<ExitCode> {
    validate_flags(flags)?;
    let d = load_dataset(flags)?;
    let threshold = flags.screen_threshold.min(d.p()).max(1);
    let ranking = decorr::screening::adaptive_rank(&d, threshold, 10, 10.0)?;

    ensure_dir(&flags.out_dir)?;
    let mut csv = CsvFile::create(
        &flags.out_dir.join("ranking.csv"),
        &["original_index", "name", "score"],
    )?;
    for &pos in ranking.order() {
        csv.row([
            d.original_index()[pos - 1].to_string(),
            d.column_names()[pos - 1].clone(),
            format!("{}", ranking.scores()[pos - 1]),
        ])?;
    }
    csv.finish()?;
    write_json(&flags.out_dir.join("manifest.json"), &manifest_for("rank", flags))?;
    println!(
        "ranked {} variables (penalty {}, {} iterations) -> {}",
        d.p(),
        ranking.penalty_used(),
        ranking.iterations(),
        flags.out_dir.join("ranking.csv").display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn decorrelate(flags: &PipelineFlags) -> Result<ExitCode> {
    validate_flags(flags)?;
    let kind: PipelineKind = flags.pipeline.into();
    if kind == PipelineKind::Raw {
        bail!("decorrelate needs --pipeline decorrelated or decorrelated-no-ordering");
    }
    let d = load_dataset(flags)?;
    let design = prepare_design(&d, kind, &pipeline_options(flags))?;
    let factors = design.factors.as_ref().expect("decorrelated variants factorize");

    ensure_dir(&flags.out_dir)?;
    write_matrix_csv(&flags.out_dir.join("q.csv"), &design.column_names, factors.q())?;
    write_matrix_csv(&flags.out_dir.join("r.csv"), &design.column_names, factors.r())?;

    let mut ordering = CsvFile::create(
        &flags.out_dir.join("ordering.csv"),
        &["position", "original_index", "name"],
    )?;
    for (k, (&idx, name)) in design
        .column_index
        .iter()
        .zip(&design.column_names)
        .enumerate()
    {
        ordering.row([(k + 1).to_string(), idx.to_string(), name.clone()])?;
    }
    ordering.finish()?;
    write_json(
        &flags.out_dir.join("manifest.json"),
        &manifest_for("decorrelate", flags),
    )?;
    println!(
        "decorrelated {} of {} columns -> {}",
        design.column_index.len(),
        d.p(),
        flags.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SelectedVariable {
    original_index: usize,
    name: String,
    frequency: f64,
}

#[derive(Serialize)]
struct SelectedReport {
    pipeline: String,
    operating_lambda: f64,
    rule_used: TuningRule,
    lambda_stable: Option<f64>,
    lambda_stable_1sd: f64,
    pi_thr: f64,
    phi: Option<f64>,
    selected: Vec<SelectedVariable>,
}

pub fn select(flags: &PipelineFlags, with_trace: bool) -> Result<ExitCode> {
    validate_flags(flags)?;
    let d = load_dataset(flags)?;
    let kind: PipelineKind = flags.pipeline.into();
    let outcome = run_selection(&d, kind, &pipeline_options(flags))?;

    let lambda = outcome.tuning.operating_lambda();
    let matrix = outcome.run.matrix_at(lambda)?;
    let selected_idx = select_variables(matrix, flags.pi_thr)?;

    let name_of = |original: usize| -> String {
        outcome
            .design
            .column_index
            .iter()
            .position(|&v| v == original)
            .map(|k| outcome.design.column_names[k].clone())
            .unwrap_or_default()
    };
    let freqs = matrix.frequencies();
    let freq_of = |original: usize| -> f64 {
        outcome
            .design
            .column_index
            .iter()
            .position(|&v| v == original)
            .map(|k| freqs[k])
            .unwrap_or(0.0)
    };

    ensure_dir(&flags.out_dir)?;

    let mut profile = CsvFile::create(
        &flags.out_dir.join("profile.csv"),
        &["lambda", "phi", "phi_sd", "q"],
    )?;
    for pt in &outcome.profile.points {
        profile.row([
            format!("{}", pt.lambda),
            opt_cell(pt.phi),
            format!("{}", pt.phi_sd),
            format!("{}", pt.q),
        ])?;
    }
    profile.finish()?;

    let mut freq_csv = CsvFile::create(
        &flags.out_dir.join("frequencies.csv"),
        &["variable", "name", "frequency"],
    )?;
    for (k, &idx) in outcome.design.column_index.iter().enumerate() {
        freq_csv.row([
            idx.to_string(),
            outcome.design.column_names[k].clone(),
            format!("{}", freqs[k]),
        ])?;
    }
    freq_csv.finish()?;

    let report = SelectedReport {
        pipeline: kind.label().to_string(),
        operating_lambda: lambda,
        rule_used: outcome.tuning.rule_used,
        lambda_stable: outcome.tuning.lambda_stable,
        lambda_stable_1sd: outcome.tuning.lambda_stable_1sd,
        pi_thr: flags.pi_thr,
        phi: stability_phi(matrix),
        selected: selected_idx
            .iter()
            .map(|&idx| SelectedVariable {
                original_index: idx,
                name: name_of(idx),
                frequency: freq_of(idx),
            })
            .collect(),
    };
    write_json(&flags.out_dir.join("selected.json"), &report)?;

    if with_trace {
        let trace = convergence_trace(&outcome.run, lambda)?;
        let mut trace_csv = CsvFile::create(
            &flags.out_dir.join("trace.csv"),
            &["b", "phi", "ci_halfwidth"],
        )?;
        for pt in &trace {
            trace_csv.row([
                pt.b.to_string(),
                opt_cell(pt.phi),
                format!("{}", pt.ci_halfwidth),
            ])?;
        }
        trace_csv.finish()?;
    }

    let command = if with_trace { "trace" } else { "select" };
    write_json(&flags.out_dir.join("manifest.json"), &manifest_for(command, flags))?;

    println!(
        "selected {} variable(s) at lambda {} (rule {:?}, pi_thr {}) -> {}",
        report.selected.len(),
        lambda,
        report.rule_used,
        flags.pi_thr,
        flags.out_dir.display()
    );
    // A missing 0.75 crossing still produces outputs but signals the fallback.
    if outcome.tuning.lambda_stable.is_none() {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

pub struct SimulateArgs {
    pub scenario: String,
    pub pipelines: Vec<PipelineKind>,
    pub seed: Option<u64>,
    pub b: Option<usize>,
    pub datasets: Option<usize>,
    pub jobs: Option<usize>,
    pub out_dir: PathBuf,
    pub grid_count: usize,
    pub grid_ratio: Option<f64>,
    pub gs_mode: GsMode,
    pub screen_threshold: usize,
}

fn load_scenario(spec: &str) -> Result<ScenarioConfig> {
    if let Some(cfg) = presets::by_name(spec) {
        return Ok(cfg);
    }
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let cfg: ScenarioConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid scenario JSON in {spec}"))?;
        return Ok(cfg);
    }
    Err(anyhow!(
        "unknown scenario '{spec}'; built-ins: {}",
        presets::NAMES.join(", ")
    ))
}

#[derive(Serialize)]
struct PipelineSummary {
    pipeline: String,
    mean_phi: Option<f64>,
    defined_phi: usize,
    replicates: usize,
    failures: usize,
    pi_grid: Vec<f64>,
    mean_f1: Vec<f64>,
}

#[derive(Serialize)]
struct SimulateSummary {
    scenario: ScenarioConfig,
    pipelines: Vec<PipelineSummary>,
}

pub fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let mut cfg = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(b) = args.b {
        cfg.b = b;
    }
    if let Some(n) = args.datasets {
        cfg.dataset_count = n;
    }
    cfg.validate()?;

    let opts = PipelineOptions {
        gs_mode: args.gs_mode,
        screen_threshold: args.screen_threshold,
        grid_count: args.grid_count,
        grid_ratio: args.grid_ratio,
        ..PipelineOptions::default()
    };

    let mut reports: Vec<EvalReport> = Vec::new();
    for &kind in &args.pipelines {
        log::info!("running scenario '{}' with pipeline {}", cfg.name, kind.label());
        reports.push(run_experiment(&cfg, kind, &opts)?);
    }

    ensure_dir(&args.out_dir)?;

    let mut phi_csv = CsvFile::create(
        &args.out_dir.join("phi.csv"),
        &["pipeline", "replicate", "tuned_lambda", "phi"],
    )?;
    for report in &reports {
        for o in &report.outcomes {
            phi_csv.row([
                report.pipeline.label().to_string(),
                o.replicate.to_string(),
                format!("{}", o.tuned_lambda),
                opt_cell(o.phi),
            ])?;
        }
    }
    phi_csv.finish()?;

    let mut f1_csv = CsvFile::create(
        &args.out_dir.join("f1.csv"),
        &["pipeline", "pi_thr", "mean_f1"],
    )?;
    for report in &reports {
        for (pi, f1) in PI_GRID.iter().zip(&report.mean_f1) {
            f1_csv.row([
                report.pipeline.label().to_string(),
                format!("{pi}"),
                format!("{f1}"),
            ])?;
        }
    }
    f1_csv.finish()?;

    let summary = SimulateSummary {
        scenario: cfg.clone(),
        pipelines: reports
            .iter()
            .map(|r| PipelineSummary {
                pipeline: r.pipeline.label().to_string(),
                mean_phi: r.mean_phi(),
                defined_phi: r.outcomes.iter().filter(|o| o.phi.is_some()).count(),
                replicates: r.outcomes.len(),
                failures: r.failures.len(),
                pi_grid: r.pi_grid.clone(),
                mean_f1: r.mean_f1.clone(),
            })
            .collect(),
    };
    write_json(&args.out_dir.join("summary.json"), &summary)?;

    let mut manifest = Manifest::new("simulate", &args.out_dir);
    manifest.scenario = Some(args.scenario.clone());
    manifest.seed = Some(cfg.seed);
    manifest.subsamples = Some(cfg.b);
    manifest.datasets = Some(cfg.dataset_count);
    manifest.jobs = args.jobs;
    manifest.grid_count = Some(args.grid_count);
    manifest.grid_ratio = args.grid_ratio;
    manifest.screen_threshold = Some(args.screen_threshold);
    manifest.gs_mode = Some(gs_mode_name(args.gs_mode).to_string());
    manifest.pipeline = Some(
        args.pipelines
            .iter()
            .map(|k| k.label().to_string())
            .collect(),
    );
    write_json(&args.out_dir.join("manifest.json"), &manifest)?;

    for s in &summary.pipelines {
        println!(
            "{}: mean phi {} over {} replicates ({} failures)",
            s.pipeline,
            s.mean_phi.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into()),
            s.replicates,
            s.failures
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DiagnoseReport {
    norm_value: f64,
    satisfied: bool,
    signal: Vec<usize>,
    noise: Vec<usize>,
}

pub fn diagnose(input: &Path, signal: &[usize], out_dir: Option<&Path>) -> Result<ExitCode> {
    if signal.iter().any(|&j| j == 0) {
        bail!("--signal indices are 1-based");
    }
    let (design, _names) =
        load_csv_matrix(input).with_context(|| format!("cannot load {}", input.display()))?;
    let zero_based: Vec<usize> = signal.iter().map(|&j| j - 1).collect();
    let report = irrepresentable_norm(&design, &zero_based)?;

    let json = DiagnoseReport {
        norm_value: report.norm_value,
        satisfied: report.satisfied,
        signal: report.signal_set.iter().map(|j| j + 1).collect(),
        noise: report.noise_set.iter().map(|j| j + 1).collect(),
    };
    println!("{}", serde_json::to_string_pretty(&json)?);

    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write_json(&dir.join("report.json"), &json)?;
        let mut manifest = Manifest::new("diagnose", dir);
        manifest.input = Some(input.to_path_buf());
        manifest.signal = Some(signal.to_vec());
        write_json(&dir.join("manifest.json"), &manifest)?;
    }
    Ok(ExitCode::SUCCESS)
}
