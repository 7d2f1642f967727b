//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::Context;
use gcb_cvar::cvar::{concentrate, fit_vecm, trace_test, VecmEstimate, VecmReport, VecmSpec};
use gcb_cvar::data::{load_gcb, load_scenario, load_soi, AlignedDataset, Constants, SoiSeries};
use gcb_cvar::diagnostics::{diagnostics_table, DiagnosticsTable};
use gcb_cvar::estimation::{
    fit_mle_default, fitted_differences, lr_restricted_vs_benchmark, FitOptions, FitReport, StructuralFit,
};
use gcb_cvar::projection::{
    quantile_fan, read_overlay, simulate_paths, Fan, FeedbackSpec, ProjectedVariable, ProjectionConfig,
    ProjectionMetadata, ProjectionResult, ProjectionSetup, FAN_PROBS,
};
use gcb_cvar::restrictions::{all_variable_tests, lag_significance_test, Variable, VariableTests};
use gcb_cvar::structural::structural_residuals;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{render, NumericalFailure, UsageError};

const DIFF_LABELS: [&str; 4] = ["ΔS^L", "ΔS^O", "ΔE", "ΔC"];

fn create(cfg: &RunConfig, name: &str) -> anyhow::Result<(PathBuf, BufWriter<File>)> {
    let path = cfg.out_dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok((path, BufWriter::new(f)))
}

fn write_json<T: Serialize>(cfg: &RunConfig, name: &str, value: &T) -> anyhow::Result<PathBuf> {
    let (path, mut w) = create(cfg, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn write_with(
    cfg: &RunConfig,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> gcb_cvar::Result<()>,
) -> anyhow::Result<PathBuf> {
    let (path, mut w) = create(cfg, name)?;
    f(&mut w)?;
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

/// Prints the text report, or the JSON value with `--json`.
fn emit<T: Serialize>(cfg: &RunConfig, text: &str, value: &T) -> anyhow::Result<()> {
    let body = if cfg.json {
        serde_json::to_string_pretty(value)?
    } else {
        text.trim_end().to_string()
    };
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{body}").and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn load_dataset(cfg: &RunConfig, require_soi: bool) -> anyhow::Result<AlignedDataset> {
    let ds = if let Some(path) = &cfg.dataset {
        AlignedDataset::load(path)?
    } else {
        let gcb_path = cfg.gcb.as_ref().ok_or_else(|| {
            UsageError::msg("no input data: pass --gcb (with --soi) or --data, or set them in --config")
        })?;
        let gcb = load_gcb(gcb_path)?;
        let soi = match &cfg.soi {
            Some(p) => load_soi(p)?,
            None if require_soi => {
                return Err(UsageError::msg(
                    "missing SOI input: the model includes SOI, pass --soi <FILE> (columns year,soi or year plus 12 months)",
                ))
            }
            None => SoiSeries {
                years: gcb.years.clone(),
                values: vec![0.0; gcb.years.len()],
            },
        };
        AlignedDataset::from_sources(&gcb, &soi, &Constants::default(), cfg.first_year, cfg.last_year)?
    };
    if ds.first_year() != cfg.first_year || ds.last_year() != cfg.last_year {
        return Ok(ds.window(cfg.first_year, cfg.last_year)?);
    }
    Ok(ds)
}

fn fit_options(cfg: &RunConfig) -> FitOptions {
    FitOptions {
        n_starts: cfg.n_starts,
        max_iter: cfg.max_iter,
        seed: cfg.seed,
        se_method: cfg.se_method,
        ..FitOptions::default()
    }
}

pub fn ingest(cfg: &RunConfig) -> anyhow::Result<()> {
    if cfg.dataset.is_some() {
        return Err(UsageError::msg("ingest reads --gcb and --soi, not --data"));
    }
    let ds = load_dataset(cfg, true)?;
    let path = write_with(cfg, "dataset.csv", |w| ds.write_csv(w))?;
    let report = ds.report(&Constants::default());
    eprintln!("wrote {}", path.display());
    emit(cfg, &report.to_string(), &report)
}

const RANK_SPECS: [(bool, usize); 4] = [(false, 0), (true, 0), (false, 1), (true, 1)];

pub fn rank_test(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_dataset(cfg, true)?;
    let results = RANK_SPECS
        .iter()
        .map(|&(soi, k)| trace_test(&concentrate(&ds, VecmSpec::new(0, k, soi))?))
        .collect::<gcb_cvar::Result<Vec<_>>>()?;
    write_json(cfg, "rank_test.json", &results)?;
    emit(cfg, &render::rank_tests(&results), &results)
}

fn write_vecm_artifacts(cfg: &RunConfig, ds: &AlignedDataset, est: &VecmEstimate) -> anyhow::Result<()> {
    write_json(cfg, "benchmark_fit.json", &VecmReport::from(est))?;
    write_with(cfg, "benchmark_residuals.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["year", "u_sL", "u_sO", "u_E", "u_C"])?;
        for (i, y) in est.years.iter().enumerate() {
            let mut rec = vec![y.to_string()];
            rec.extend((0..4).map(|j| est.residuals[(i, j)].to_string()));
            c.write_record(rec)?;
        }
        c.flush().map_err(|e| csv::Error::from(e).into())
    })?;
    let m = concentrate(ds, est.spec)?;
    write_with(cfg, "benchmark_fitted.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["variable", "year", "series", "value"])?;
        for (j, label) in ["sL", "sO", "E", "C"].iter().enumerate() {
            for (i, y) in est.years.iter().enumerate() {
                let actual = m.dy[(i, j)];
                let year = y.to_string();
                c.write_record([*label, &year, "actual", &actual.to_string()])?;
                c.write_record([*label, &year, "fitted", &(actual - est.residuals[(i, j)]).to_string()])?;
            }
        }
        c.flush().map_err(|e| csv::Error::from(e).into())
    })?;
    Ok(())
}

pub fn fit_benchmark(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_dataset(cfg, cfg.include_soi)?;
    let est = fit_vecm(&ds, cfg.spec())?;
    write_vecm_artifacts(cfg, &ds, &est)?;
    emit(cfg, &render::vecm(&est), &VecmReport::from(&est))
}

/// Estimates the restricted model and writes its artifacts; non-convergence is an error
/// after the best point has been written.
fn estimate_restricted(cfg: &RunConfig, ds: &AlignedDataset) -> anyhow::Result<StructuralFit> {
    let fit = fit_mle_default(ds, &fit_options(cfg))?;
    let report = fit.report();
    let path = write_json(cfg, "restricted_fit.json", &report)?;
    write_with(cfg, "restricted_residuals.csv", |w| fit.write_residuals_csv(w))?;
    write_with(cfg, "restricted_fitted.csv", |w| fitted_differences(&fit, ds)?.write_csv(w))?;
    if !fit.converged {
        eprintln!("{}", render::structural(&report));
        return Err(anyhow::Error::new(NumericalFailure(format!(
            "restricted MLE did not converge; best point written to {}",
            path.display()
        ))));
    }
    Ok(fit)
}

#[derive(Serialize)]
struct RestrictedOutput<'a> {
    fit: &'a FitReport,
    lr_vs_benchmark: Option<gcb_cvar::LrTestResult>,
}

pub fn fit_restricted(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_dataset(cfg, true)?;
    let fit = estimate_restricted(cfg, &ds)?;
    let report = fit.report();
    let benchmark = fit_vecm(&ds, cfg.spec())?;
    let lr = match lr_restricted_vs_benchmark(&fit, &benchmark) {
        Ok(lr) => Some(lr),
        Err(e) => {
            log::warn!("LR test against the benchmark unavailable: {e}");
            None
        }
    };
    if let Some(lr) = &lr {
        write_json(cfg, "lr_vs_benchmark.json", lr)?;
    }
    let mut text = render::structural(&report);
    if let Some(lr) = &lr {
        text.push_str(&format!(
            "\nbenchmark log-likelihood {:.3}\n{}",
            benchmark.loglik,
            render::lr(lr)
        ));
    }
    emit(
        cfg,
        &text,
        &RestrictedOutput {
            fit: &report,
            lr_vs_benchmark: lr,
        },
    )
}

pub fn lr_tests(cfg: &RunConfig, exclusion: bool, exogeneity: bool, variable: Option<Variable>) -> anyhow::Result<()> {
    let ds = load_dataset(cfg, cfg.include_soi)?;
    let spec = cfg.spec();
    let mut results: Vec<VariableTests> = all_variable_tests(&ds, spec)?;
    if let Some(v) = variable {
        results.retain(|r| r.variable == v);
    }
    write_json(cfg, "lr_tests.json", &results)?;
    let text = format!(
        "LR tests in the unrestricted VECM ({}, r = {})\n{}",
        spec.label(),
        spec.rank,
        render::variable_tests(&results, exclusion, exogeneity)
    );
    emit(cfg, &text, &results)
}

fn restricted_theta(cfg: &RunConfig, ds: &AlignedDataset) -> anyhow::Result<gcb_cvar::StructuralTheta> {
    match &cfg.fit_result {
        Some(path) => Ok(read_fit_report(path)?.theta),
        None => Ok(estimate_restricted(cfg, ds)?.theta),
    }
}

fn read_fit_report(path: &std::path::Path) -> anyhow::Result<FitReport> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(f)
        .map_err(gcb_cvar::Error::from)
        .with_context(|| format!("{} is not a restricted-fit JSON", path.display()))
}

pub fn diagnose_restricted(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_dataset(cfg, true)?;
    let theta = restricted_theta(cfg, &ds)?;
    let res = structural_residuals(&theta, &ds)?;
    let table = diagnostics_table("Residual diagnostics, restricted model", &res.u, &DIFF_LABELS, 1)?;
    write_json(cfg, "diagnostics_restricted.json", &table)?;
    emit(cfg, &table.to_string(), &table)
}

#[derive(Serialize)]
struct UnrestrictedDiagnostics {
    spec: VecmSpec,
    table: DiagnosticsTable,
    lag_test_p: Option<f64>,
}

pub fn diagnose_unrestricted(
    cfg: &RunConfig,
    lags: Option<usize>,
    include_soi: Option<bool>,
    rank: Option<usize>,
) -> anyhow::Result<()> {
    let ds = load_dataset(cfg, include_soi != Some(false))?;
    let rank = rank.unwrap_or(4);
    let specs: Vec<VecmSpec> = RANK_SPECS
        .iter()
        .filter(|(soi, k)| include_soi.is_none_or(|s| s == *soi) && lags.is_none_or(|l| l == *k))
        .map(|&(soi, k)| VecmSpec::new(rank, k, soi))
        .collect();
    if specs.is_empty() {
        return Err(UsageError::msg("no unrestricted specification matches --lags/--include-soi"));
    }
    let mut out = vec![];
    let mut text = String::new();
    for spec in specs {
        let est = fit_vecm(&ds, spec)?;
        let title = format!("Residual diagnostics, unrestricted VAR ({}, r = {})", spec.label(), rank);
        let table = diagnostics_table(title, &est.residuals, &DIFF_LABELS, spec.lags)?;
        let lag_test_p = if spec.lags == 1 {
            Some(lag_significance_test(&ds, spec)?.p_value)
        } else {
            None
        };
        text.push_str(&table.to_string());
        if let Some(p) = lag_test_p {
            text.push_str(&format!("\nLR test of Gamma1 = 0: p = {p:.3}"));
        }
        text.push_str("\n\n");
        out.push(UnrestrictedDiagnostics {
            spec,
            table,
            lag_test_p,
        });
    }
    write_json(cfg, "diagnostics_unrestricted.json", &out)?;
    emit(cfg, &text, &out)
}

fn feedback_runs(cfg: &RunConfig) -> anyhow::Result<Vec<(String, FeedbackSpec)>> {
    if cfg.p_land.is_some() || cfg.p_ocean.is_some() {
        let spec = FeedbackSpec::new(cfg.p_land.unwrap_or(0.0), cfg.p_ocean.unwrap_or(0.0))
            .map_err(|e| UsageError::msg(e.to_string()))?;
        return Ok(vec![("custom".to_string(), spec)]);
    }
    Ok(cfg.feedback.iter().map(|l| (l.to_string(), l.spec())).collect())
}

#[derive(Serialize)]
struct ProjectionSummary {
    metadata: ProjectionMetadata,
    concentration_ppm: Vec<YearQuantiles>,
}

#[derive(Serialize)]
struct YearQuantiles {
    year: i32,
    q2_5: f64,
    q50: f64,
    q97_5: f64,
}

fn fan_files(cfg: &RunConfig, label: &str, result: &ProjectionResult, ppm: &Fan) -> anyhow::Result<()> {
    for var in ProjectedVariable::ALL {
        let fan = result.fan(var);
        write_with(cfg, &format!("fan_{label}_{}.csv", fan.variable), |w| fan.write_csv(w))?;
    }
    write_with(cfg, &format!("fan_{label}_C_ppm.csv"), |w| ppm.write_csv(w))?;
    Ok(())
}

pub fn project(cfg: &RunConfig) -> anyhow::Result<()> {
    let ds = load_dataset(cfg, true)?;
    let scenario_path = cfg
        .scenario
        .as_ref()
        .ok_or_else(|| UsageError::msg("project needs an emissions scenario (--scenario <FILE>)"))?;
    let name = cfg.scenario_name.clone().unwrap_or_else(|| {
        scenario_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into())
    });
    let scenario = load_scenario(scenario_path, &name, cfg.scenario_unit)?;
    let setup = match &cfg.fit_result {
        Some(path) => ProjectionSetup::from_report(&read_fit_report(path)?, &ds)?,
        None => ProjectionSetup::from_fit(&estimate_restricted(cfg, &ds)?, &ds)?,
    };
    let overlay = match &cfg.overlay {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            Some(read_overlay(f, p)?)
        }
        None => None,
    };
    let constants = Constants::default();
    let mut long: Vec<(String, i32, String, f64)> = vec![];
    let mut summaries = vec![];
    let mut text = format!(
        "Projection under `{}`, {}-{}, {} paths, seed {}\n{:<8}{:>6}{:>10}{:>10}{:>10}{:>8}\n",
        scenario.name,
        setup.base_year() + 1,
        cfg.horizon,
        cfg.n_paths,
        cfg.seed,
        "feedback",
        "year",
        "C q2.5",
        "C q50",
        "C q97.5",
        "valid"
    );
    let mut medians_ppm = vec![];
    for (label, feedback) in feedback_runs(cfg)? {
        let pc = ProjectionConfig {
            feedback,
            n_paths: cfg.n_paths,
            horizon: cfg.horizon,
            seed: cfg.seed,
            soi_mode: cfg.soi_mode,
            shocks: cfg.shocks,
            threads: cfg.threads,
        };
        let ens = simulate_paths(&setup, &scenario, &pc)?;
        let result = quantile_fan(&ens, &FAN_PROBS)?;
        let ppm = result
            .fan(ProjectedVariable::Concentration)
            .scaled("C_ppm", constants.ppm_per_pgc);
        fan_files(cfg, &label, &result, &ppm)?;
        let metadata = ProjectionMetadata {
            scenario: scenario.name.clone(),
            label: label.clone(),
            seed: cfg.seed,
            n_paths: cfg.n_paths,
            n_valid: result.n_valid,
            n_negative_concentration: result.n_negative_concentration,
            base_year: setup.base_year(),
            horizon: cfg.horizon,
            soi_mode: cfg.soi_mode,
            shocks: cfg.shocks,
            feedback,
        };
        write_json(cfg, &format!("projection_{label}.json"), &metadata)?;
        for fan in result.fans.iter().chain(std::iter::once(&ppm)) {
            for (k, p) in fan.probs.iter().enumerate() {
                let series = format!("{label}_q{}", p * 100.0);
                for (t, y) in fan.years.iter().enumerate() {
                    long.push((fan.variable.clone(), *y, series.clone(), fan.values[k][t]));
                }
            }
        }
        let report_years: Vec<i32> = [2030, 2050, 2075, cfg.horizon]
            .into_iter()
            .filter(|y| *y > setup.base_year() && *y <= cfg.horizon)
            .collect();
        let mut rows = vec![];
        for y in report_years {
            let q = |p| ppm.at(y, p).expect("year within the projection");
            let row = YearQuantiles {
                year: y,
                q2_5: q(0.025),
                q50: q(0.5),
                q97_5: q(0.975),
            };
            text.push_str(&format!(
                "{:<8}{:>6}{:>10.1}{:>10.1}{:>10.1}{:>8}\n",
                label, row.year, row.q2_5, row.q50, row.q97_5, result.n_valid
            ));
            rows.push(row);
        }
        medians_ppm.push((label.clone(), ppm.clone()));
        summaries.push(ProjectionSummary {
            metadata,
            concentration_ppm: rows,
        });
    }
    text.push_str("(C in ppm)\n");
    write_with(cfg, "projection_fans.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["variable", "year", "series", "value"])?;
        for (v, y, s, x) in &long {
            c.write_record([v.as_str(), &y.to_string(), s.as_str(), &format!("{x:.6}")])?;
        }
        c.flush().map_err(|e| csv::Error::from(e).into())
    })?;
    if let Some(points) = overlay {
        write_with(cfg, "overlay.csv", |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["variable", "year", "series", "value"])?;
            for (y, v) in &points {
                c.write_record(["C_ppm", &y.to_string(), "overlay", &format!("{v:.6}")])?;
                for (label, fan) in &medians_ppm {
                    if let Some(m) = fan.at(*y, 0.5) {
                        c.write_record(["C_ppm", &y.to_string(), &format!("{label}_q50"), &format!("{m:.6}")])?;
                    }
                }
            }
            c.flush().map_err(|e| csv::Error::from(e).into())
        })?;
    }
    emit(cfg, &text, &summaries)
}
