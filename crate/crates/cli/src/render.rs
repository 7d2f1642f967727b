//! Plain-text report tables.

use std::fmt::Write;

use gcb_cvar::cvar::{matrix_rows, TraceTestResult, VecmEstimate};
use gcb_cvar::estimation::FitReport;
use gcb_cvar::restrictions::{LrTestResult, VariableTests};
use gcb_cvar::structural::THETA_NAMES;

pub fn rank_tests(results: &[TraceTestResult]) -> String {
    let mut s = String::from("Trace test for cointegrating rank\n");
    for r in results {
        let _ = writeln!(s, "\n{} (T = {})", r.spec.label(), r.t);
        let _ = writeln!(s, "{:>6}{:>10}{:>10}{:>10}{:>9}", "r", "eigval", "trace", "5% cv", "p");
        for i in 0..r.trace_stats.len() {
            let _ = writeln!(
                s,
                "{:>6}{:>10.4}{:>10.2}{:>10.2}{:>9.3}",
                format!("r<={i}"),
                r.eigenvalues[i],
                r.trace_stats[i],
                r.critical_5pct[i],
                r.p_values[i]
            );
        }
        let _ = writeln!(s, "selected rank: {}", r.selected_rank);
    }
    s
}

fn matrix(s: &mut String, title: &str, rows: &[Vec<f64>]) {
    let _ = writeln!(s, "{title}");
    for row in rows {
        for v in row {
            let _ = write!(s, "{v:>11.4}");
        }
        s.push('\n');
    }
}

pub fn vecm(est: &VecmEstimate) -> String {
    let mut s = format!(
        "Unrestricted VECM ({}, r = {}), T = {}\nlog-likelihood {:.3}, {} free mean parameters\n\n",
        est.spec.label(),
        est.spec.rank,
        est.t,
        est.loglik,
        est.n_free_params
    );
    matrix(&mut s, "beta' (rows: relations; columns: sL sO E C)", &matrix_rows(&est.beta.transpose()));
    matrix(&mut s, "alpha (rows: sL sO E C)", &matrix_rows(&est.alpha));
    let _ = writeln!(s, "mu {:?}", est.mu.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    if let Some(phi) = &est.phi_soi {
        let _ = writeln!(s, "Phi(SOI) {:?}", phi.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    }
    s
}

pub fn structural(report: &FitReport) -> String {
    let mut s = format!(
        "Restricted model, {}-{} (T = {})\n{:<6}{:>11}{:>11}{:>9}\n",
        report.first_year, report.last_year, report.t, "", "estimate", "s.e.", "t"
    );
    for (i, (name, v)) in THETA_NAMES.iter().zip(report.theta.to_array()).enumerate() {
        match report.se.as_ref().map(|se| se[i]) {
            Some(se) => {
                let _ = writeln!(s, "{name:<6}{v:>11.4}{se:>11.4}{:>9.2}", v / se);
            }
            None => {
                let _ = writeln!(s, "{name:<6}{v:>11.4}{:>11}{:>9}", "n/a", "");
            }
        }
    }
    let _ = write!(
        s,
        "log-likelihood {:.3}; {} after {} iterations (|grad| {:.1e}, start {})",
        report.loglik,
        if report.converged { "converged" } else { "NOT converged" },
        report.n_iter,
        report.grad_norm,
        report.best_start
    );
    s
}

pub fn lr(r: &LrTestResult) -> String {
    format!(
        "LR test of {}: {:.3} on {} df, p = {:.3}",
        r.hypothesis, r.statistic, r.df, r.p_value
    )
}

pub fn variable_tests(results: &[VariableTests], exclusion: bool, exogeneity: bool) -> String {
    let mut s = format!("{:<6}", "");
    if exclusion {
        let _ = write!(s, "{:>24}", "exclusion");
    }
    if exogeneity {
        let _ = write!(s, "{:>24}", "weak exogeneity");
    }
    s.push('\n');
    let _ = write!(s, "{:<6}", "");
    for _ in 0..(exclusion as usize + exogeneity as usize) {
        let _ = write!(s, "{:>10}{:>5}{:>9}", "LR", "df", "p");
    }
    s.push('\n');
    for r in results {
        let _ = write!(s, "{:<6}", r.variable.symbol());
        let mut cell = |t: &LrTestResult| {
            let _ = write!(s, "{:>10.3}{:>5}{:>9.3}", t.statistic, t.df, t.p_value);
        };
        if exclusion {
            cell(&r.exclusion);
        }
        if exogeneity {
            cell(&r.weak_exogeneity);
        }
        s.push('\n');
    }
    s
}
