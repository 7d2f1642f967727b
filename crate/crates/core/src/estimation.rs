//! Maximum-likelihood estimation of the restricted model, standard errors, the LR
//! test against the unrestricted benchmark and in-sample fitted values.

use std::io::Write;

use nalgebra::{DMatrix, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cvar::{matrix_rows, VecmEstimate};
use crate::data::AlignedDataset;
use crate::error::{Error, Result};
use crate::linalg::{moment, ols};
use crate::restrictions::LrTestResult;
use crate::structural::{
    residuals_from_data, theta_to_structural, StructuralData, StructuralTheta, N_THETA,
    THETA_NAMES,
};

/// Lower bounds on the per-parameter scale used to condition the optimiser and the
/// finite-difference steps (a1, a2, b1, b2, b3, b4, d, φ1..φ4).
const SCALE_FLOOR: [f64; N_THETA] = [1.0, 1.0, 1e-3, 1e-3, 0.01, 0.01, 0.01, 0.1, 0.1, 0.1, 0.1];

/// How standard errors are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeMethod {
    /// Inverse of the negative numerical Hessian (observed information).
    #[default]
    Hessian,
    /// Hessian-sandwiched outer product of per-observation scores.
    Sandwich,
}

impl std::str::FromStr for SeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hessian" => Ok(SeMethod::Hessian),
            "sandwich" => Ok(SeMethod::Sandwich),
            _ => Err(Error::InvalidSpec(format!("unknown standard-error method `{s}`"))),
        }
    }
}

impl std::fmt::Display for SeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SeMethod::Hessian => "hessian",
            SeMethod::Sandwich => "sandwich",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Tolerance on the infinity norm of the gradient of the scaled, per-observation objective.
    pub grad_tol: f64,
    /// Number of starting points, including the supplied one.
    pub n_starts: usize,
    /// Half-width of the uniform perturbation of extra starts, in scaled units.
    pub perturbation: f64,
    pub seed: u64,
    pub phi_bound: f64,
    pub c_min: f64,
    pub se_method: SeMethod,
    /// Run starts on the rayon pool. The result does not depend on this.
    pub parallel: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 2000,
            grad_tol: 1e-6,
            n_starts: 6,
            perturbation: 0.1,
            seed: 0,
            phi_bound: 0.999,
            c_min: 1e-6,
            se_method: SeMethod::Hessian,
            parallel: true,
        }
    }
}

/// Central-difference gradient of `f` at `x` with per-coordinate steps.
pub fn numerical_gradient<F>(f: &F, x: &[f64], steps: &[f64]) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut xp = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = steps[i];
        xp[i] = x[i] + h;
        let fp = f(&xp)?;
        xp[i] = x[i] - h;
        let fm = f(&xp)?;
        xp[i] = x[i];
        g.push((fp - fm) / (2.0 * h));
    }
    Some(g)
}

/// Central-difference Hessian of `f` at `x`.
pub fn numerical_hessian<F>(f: &F, x: &[f64], steps: &[f64]) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let n = x.len();
    let f0 = f(x)?;
    let mut h = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for i in 0..n {
        let hi = steps[i];
        xp[i] = x[i] + hi;
        let fp = f(&xp)?;
        xp[i] = x[i] - hi;
        let fm = f(&xp)?;
        xp[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut eval = |si: f64, sj: f64| {
                xp[i] = x[i] + si * hi;
                xp[j] = x[j] + sj * hj;
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)? + eval(-1.0, -1.0)?)
                / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Some(h)
}

/// Standard errors from the Hessian of a log-likelihood at its maximum.
pub fn standard_errors_from_hessian(hessian: &DMatrix<f64>) -> Result<Vec<f64>> {
    let info = -hessian;
    let info = (&info + info.transpose()) * 0.5;
    let eig = info.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        return Err(Error::Conditioning(format!(
            "negative Hessian is not positive definite; eigenvalues {ev:?}"
        )));
    }
    let cov = info
        .cholesky()
        .ok_or_else(|| Error::Conditioning("information matrix Cholesky failed".into()))?
        .inverse();
    Ok(cov.diagonal().iter().map(|v| v.sqrt()).collect())
}

fn scales(theta: &StructuralTheta) -> [f64; N_THETA] {
    let mut s = [0.0; N_THETA];
    for (i, v) in theta.to_array().iter().enumerate() {
        s[i] = v.abs().max(SCALE_FLOOR[i]);
    }
    s
}

/// OLS starting values from the single-equation forms of the model.
pub fn initial_theta(dataset: &AlignedDataset) -> Result<StructuralTheta> {
    let n = dataset.len();
    if n < 8 {
        return Err(Error::Sample(format!("{n} observations are too few")));
    }
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => dataset.concentration[i],
        _ => dataset.soi[i],
    });
    let ar1 = |v: &[f64]| -> f64 {
        let num: f64 = v.windows(2).map(|w| w[0] * w[1]).sum();
        let den: f64 = v[..v.len() - 1].iter().map(|a| a * a).sum();
        if den > 0.0 {
            (num / den).clamp(-0.9, 0.9)
        } else {
            0.0
        }
    };
    let sink = |y: &[f64]| -> Result<(f64, f64, f64, f64)> {
        let (coef, resid) = ols(&DMatrix::from_column_slice(n, 1, y), &x)?;
        let r: Vec<f64> = resid.iter().copied().collect();
        Ok((coef[0], coef[1], coef[2], ar1(&r)))
    };
    let (a1, b1, b3, phi1) = sink(&dataset.land_sink)?;
    let (a2, b2, b4, phi2) = sink(&dataset.ocean_sink)?;
    let de: Vec<f64> = dataset.emissions.windows(2).map(|w| w[1] - w[0]).collect();
    let d = de.iter().sum::<f64>() / de.len() as f64;
    let dev: Vec<f64> = de.iter().map(|v| v - d).collect();
    let phi3 = ar1(&dev);
    let phi4 = ar1(&dataset.budget_imbalance());
    Ok(StructuralTheta {
        a1,
        a2,
        b1,
        b2,
        b3,
        b4,
        d,
        phi1,
        phi2,
        phi3,
        phi4,
    })
}

/// Result of one optimiser run.
#[derive(Debug, Clone)]
struct RunOutcome {
    theta: StructuralTheta,
    loglik: f64,
    converged: bool,
    n_iter: usize,
    grad_norm: f64,
}

/// Quasi-Newton (BFGS) maximisation of the per-observation log-likelihood in scaled
/// coordinates `θ_i = scale_i · z_i`, started from a numerical-Hessian Newton metric.
fn maximize(data: &StructuralData, init: &StructuralTheta, opts: &FitOptions) -> Result<RunOutcome> {
    init.check_domain(opts.phi_bound, opts.c_min)?;
    let scale = scales(init);
    let tf = data.t() as f64;
    let to_theta = |z: &[f64]| {
        let mut a = [0.0; N_THETA];
        for i in 0..N_THETA {
            a[i] = z[i] * scale[i];
        }
        StructuralTheta::from_array(a)
    };
    // Objective: negative mean log-likelihood; None outside the admissible region.
    let objective = |z: &[f64]| -> Option<f64> {
        let th = to_theta(z);
        th.check_domain(opts.phi_bound, opts.c_min).ok()?;
        data.loglik(&th).ok().filter(|v| v.is_finite()).map(|v| -v / tf)
    };
    let steps = [1e-5; N_THETA];

    let mut z: Vec<f64> = init.to_array().iter().zip(&scale).map(|(v, s)| v / s).collect();
    let mut f = objective(&z).ok_or_else(|| {
        Error::ParameterDomain("log-likelihood undefined at the starting value".into())
    })?;
    let mut g = numerical_gradient(&objective, &z, &steps)
        .ok_or_else(|| Error::ParameterDomain("gradient undefined at the starting value".into()))?;

    let newton_metric = |z: &[f64]| -> DMatrix<f64> {
        numerical_hessian(&objective, z, &[1e-4; N_THETA])
            .and_then(|h| {
                let h = (&h + h.transpose()) * 0.5;
                h.cholesky().map(|c| c.inverse())
            })
            .unwrap_or_else(|| DMatrix::identity(N_THETA, N_THETA))
    };
    let mut hinv = newton_metric(&z);
    let inf_norm = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    let mut n_iter = 0;
    let mut failures = 0;
    while n_iter < opts.max_iter && inf_norm(&g) >= opts.grad_tol {
        let gv = nalgebra::DVector::from_column_slice(&g);
        let mut dir = -(&hinv * &gv);
        if dir.dot(&gv) >= 0.0 {
            hinv = DMatrix::identity(N_THETA, N_THETA);
            dir = -gv.clone();
        }
        let slope = dir.dot(&gv);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = z.iter().zip(dir.iter()).map(|(a, d)| a + step * d).collect();
            if let Some(ft) = objective(&trial) {
                if ft <= f + 1e-4 * step * slope {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            step *= 0.5;
        }
        n_iter += 1;
        let Some((z_new, f_new)) = accepted else {
            failures += 1;
            if failures >= 2 {
                break;
            }
            hinv = newton_metric(&z);
            continue;
        };
        let Some(g_new) = numerical_gradient(&objective, &z_new, &steps) else {
            break;
        };
        failures = 0;
        let s = nalgebra::DVector::from_iterator(N_THETA, z_new.iter().zip(&z).map(|(a, b)| a - b));
        let y = nalgebra::DVector::from_iterator(N_THETA, g_new.iter().zip(&g).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(N_THETA, N_THETA);
            let left = &i - rho * &s * y.transpose();
            let right = &i - rho * &y * s.transpose();
            hinv = &left * &hinv * &right + rho * &s * s.transpose();
        }
        z = z_new;
        f = f_new;
        g = g_new;
    }
    let grad_norm = inf_norm(&g);
    Ok(RunOutcome {
        theta: to_theta(&z),
        loglik: -f * tf,
        converged: grad_norm < opts.grad_tol || (failures >= 2 && grad_norm < 10.0 * opts.grad_tol),
        n_iter,
        grad_norm,
    })
}

/// Estimated restricted model.
#[derive(Debug, Clone)]
pub struct StructuralFit {
    pub theta: StructuralTheta,
    pub loglik: f64,
    /// Standard errors in parameter order; `None` if the Hessian was not negative definite.
    pub se: Option<Vec<f64>>,
    pub se_method: SeMethod,
    pub t: usize,
    pub years: Vec<i32>,
    /// `T × 4` reduced-form residuals.
    pub residuals_u: DMatrix<f64>,
    /// `T × 4` structural residuals.
    pub residuals_eps: DMatrix<f64>,
    pub sigma_u: DMatrix<f64>,
    pub converged: bool,
    pub n_iter: usize,
    pub grad_norm: f64,
    /// Index of the winning start (0 is the supplied initial value).
    pub best_start: usize,
}

impl StructuralFit {
    /// Structural error covariance `A0 Σ_U A0'`.
    pub fn sigma_eps(&self) -> Matrix4<f64> {
        let a0 = theta_to_structural(&self.theta)
            .expect("fitted theta is admissible")
            .a0;
        let s = Matrix4::from_fn(|i, j| self.sigma_u[(i, j)]);
        a0 * s * a0.transpose()
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            theta: self.theta,
            parameter_names: THETA_NAMES.iter().map(|s| s.to_string()).collect(),
            se: self.se.clone(),
            se_method: self.se_method,
            loglik: self.loglik,
            t: self.t,
            first_year: self.years[0],
            last_year: *self.years.last().expect("non-empty sample"),
            converged: self.converged,
            n_iter: self.n_iter,
            grad_norm: self.grad_norm,
            best_start: self.best_start,
            sigma_u: matrix_rows(&self.sigma_u),
        }
    }

    /// CSV sidecar: year, ε̂ per equation, Û per equation.
    pub fn write_residuals_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "year", "eps_sL", "eps_sO", "eps_E", "eps_C", "u_sL", "u_sO", "u_E", "u_C",
        ])?;
        for (i, y) in self.years.iter().enumerate() {
            let mut rec = vec![y.to_string()];
            rec.extend((0..4).map(|j| self.residuals_eps[(i, j)].to_string()));
            rec.extend((0..4).map(|j| self.residuals_u[(i, j)].to_string()));
            w.write_record(rec)?;
        }
        w.flush().map_err(|e| Error::io("<residuals csv>", e))?;
        Ok(())
    }
}

/// Serialisable summary of a [`StructuralFit`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub theta: StructuralTheta,
    pub parameter_names: Vec<String>,
    pub se: Option<Vec<f64>>,
    pub se_method: SeMethod,
    pub loglik: f64,
    pub t: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub converged: bool,
    pub n_iter: usize,
    pub grad_norm: f64,
    pub best_start: usize,
    pub sigma_u: Vec<Vec<f64>>,
}

impl FitReport {
    pub fn sigma_u_matrix(&self) -> Result<Matrix4<f64>> {
        if self.sigma_u.len() != 4 || self.sigma_u.iter().any(|r| r.len() != 4) {
            return Err(Error::InvalidData("sigma_u must be 4 × 4".into()));
        }
        Ok(Matrix4::from_fn(|i, j| self.sigma_u[i][j]))
    }
}

fn start_points(init: &StructuralTheta, opts: &FitOptions) -> Vec<StructuralTheta> {
    let scale = scales(init);
    let base = init.to_array();
    let mut starts = vec![*init];
    for k in 1..opts.n_starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        let mut shrink = 1.0;
        loop {
            let mut a = base;
            for i in 0..N_THETA {
                let u: f64 = rng.random_range(-1.0..1.0);
                a[i] += shrink * opts.perturbation * u * scale[i];
            }
            let th = StructuralTheta::from_array(a);
            if th.check_domain(opts.phi_bound, opts.c_min).is_ok() {
                starts.push(th);
                break;
            }
            shrink *= 0.5;
        }
    }
    starts
}

/// Maximises the quasi-likelihood from `init` and its perturbations; the best start wins.
pub fn fit_mle(dataset: &AlignedDataset, init: &StructuralTheta, opts: &FitOptions) -> Result<StructuralFit> {
    let data = StructuralData::new(dataset)?;
    let starts = start_points(init, opts);
    let run = |th: &StructuralTheta| maximize(&data, th, opts);
    let outcomes: Vec<Result<RunOutcome>> = if opts.parallel {
        starts.par_iter().map(run).collect()
    } else {
        starts.iter().map(run).collect()
    };
    let mut best: Option<(usize, RunOutcome)> = None;
    let mut first_err = None;
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                if best.as_ref().is_none_or(|(_, b)| o.loglik > b.loglik) {
                    best = Some((k, o));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let (best_start, run) = match best {
        Some(b) => b,
        None => return Err(first_err.expect("at least one start")),
    };
    let res = residuals_from_data(&run.theta, &data)?;
    let mut fit = StructuralFit {
        theta: run.theta,
        loglik: run.loglik,
        se: None,
        se_method: opts.se_method,
        t: data.t(),
        years: data.years.clone(),
        sigma_u: moment(&res.u, &res.u),
        residuals_u: res.u,
        residuals_eps: res.eps,
        converged: run.converged,
        n_iter: run.n_iter,
        grad_norm: run.grad_norm,
        best_start,
    };
    if !fit.converged {
        log::warn!(
            "restricted MLE did not converge after {} iterations (gradient norm {:.3e})",
            fit.n_iter,
            fit.grad_norm
        );
    }
    match standard_errors_with(&fit, &data, opts.se_method) {
        Ok(se) => fit.se = Some(se),
        Err(e) => log::warn!("standard errors unavailable: {e}"),
    }
    Ok(fit)
}

/// Fits from OLS starting values.
pub fn fit_mle_default(dataset: &AlignedDataset, opts: &FitOptions) -> Result<StructuralFit> {
    let mut init = initial_theta(dataset)?;
    for (j, phi) in [&mut init.phi1, &mut init.phi2, &mut init.phi3, &mut init.phi4]
        .into_iter()
        .enumerate()
    {
        if phi.abs() >= opts.phi_bound {
            log::debug!("clamping initial phi{}", j + 1);
            *phi = phi.signum() * 0.9 * opts.phi_bound;
        }
    }
    fit_mle(dataset, &init, opts)
}

/// Standard errors at the fitted parameters.
pub fn standard_errors(fit: &StructuralFit, dataset: &AlignedDataset, method: SeMethod) -> Result<Vec<f64>> {
    let data = StructuralData::new(dataset)?;
    standard_errors_with(fit, &data, method)
}

fn standard_errors_with(fit: &StructuralFit, data: &StructuralData, method: SeMethod) -> Result<Vec<f64>> {
    let x = fit.theta.to_array();
    let steps: Vec<f64> = scales(&fit.theta).iter().map(|s| 1e-4 * s).collect();
    let f = |v: &[f64]| data.loglik(&StructuralTheta::from_slice(v)).ok();
    let h = numerical_hessian(&f, &x, &steps)
        .ok_or_else(|| Error::Conditioning("Hessian evaluation left the parameter domain".into()))?;
    match method {
        SeMethod::Hessian => standard_errors_from_hessian(&h),
        SeMethod::Sandwich => {
            let s = Matrix4::from_fn(|i, j| fit.sigma_u[(i, j)]);
            let s_inv = s
                .try_inverse()
                .ok_or_else(|| Error::Conditioning("Σ_U is singular".into()))?;
            let t = data.t();
            let mut scores = DMatrix::zeros(t, N_THETA);
            let mut xp = x;
            for i in 0..N_THETA {
                xp[i] = x[i] + steps[i];
                let up = data.loglik_terms(&StructuralTheta::from_array(xp), &s_inv)?;
                xp[i] = x[i] - steps[i];
                let dn = data.loglik_terms(&StructuralTheta::from_array(xp), &s_inv)?;
                xp[i] = x[i];
                for r in 0..t {
                    scores[(r, i)] = (up[r] - dn[r]) / (2.0 * steps[i]);
                }
            }
            let meat = scores.transpose() * &scores;
            let info = -&h;
            let bread = info
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Conditioning("information matrix is singular".into()))?;
            let cov = &bread * meat * &bread;
            let diag: Vec<f64> = cov.diagonal().iter().copied().collect();
            if diag.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Conditioning(format!(
                    "sandwich covariance has non-positive diagonal {diag:?}"
                )));
            }
            Ok(diag.iter().map(|v| v.sqrt()).collect())
        }
    }
}

/// LR test of the restricted model against the unrestricted benchmark VECM.
pub fn lr_restricted_vs_benchmark(fit: &StructuralFit, benchmark: &VecmEstimate) -> Result<LrTestResult> {
    if fit.t != benchmark.t || fit.years != benchmark.years {
        return Err(Error::Sample(format!(
            "restricted model uses {} observations, benchmark {}; samples must match",
            fit.t, benchmark.t
        )));
    }
    let df = benchmark
        .n_free_params
        .checked_sub(N_THETA)
        .ok_or_else(|| Error::InvalidSpec("benchmark has fewer parameters than the restricted model".into()))?;
    Ok(LrTestResult::from_logliks(
        "restricted structural model",
        fit.loglik,
        benchmark.loglik,
        df,
    ))
}

/// Observed and one-step-ahead fitted first differences.
#[derive(Debug, Clone)]
pub struct FittedDifferences {
    pub years: Vec<i32>,
    pub actual: DMatrix<f64>,
    pub fitted: DMatrix<f64>,
}

pub const VARIABLE_LABELS: [&str; 4] = ["sL", "sO", "E", "C"];

impl FittedDifferences {
    /// Long-format CSV: `variable,year,series,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["variable", "year", "series", "value"])?;
        for (j, label) in VARIABLE_LABELS.iter().enumerate() {
            for (i, y) in self.years.iter().enumerate() {
                let year = y.to_string();
                w.write_record([*label, &year, "actual", &self.actual[(i, j)].to_string()])?;
                w.write_record([*label, &year, "fitted", &self.fitted[(i, j)].to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<fitted csv>", e))?;
        Ok(())
    }
}

pub fn fitted_differences(fit: &StructuralFit, dataset: &AlignedDataset) -> Result<FittedDifferences> {
    let data = StructuralData::new(dataset)?;
    if data.years != fit.years {
        return Err(Error::Sample("fit and dataset cover different years".into()));
    }
    let t = data.t();
    let actual = DMatrix::from_fn(t, 4, |i, j| data.dy[i][j]);
    let fitted = &actual - &fit.residuals_u;
    Ok(FittedDifferences {
        years: data.years,
        actual,
        fitted,
    })
}
