//! Unrestricted cointegrated VAR: reduced-rank regression, trace test and the
//! Gaussian quasi-log-likelihood.
//!
//! The model is
//!
//! ```text
//! ΔY_t = μ + αβ'Y_{t-1} + Γ₁ΔY_{t-1} + Φ·SOI_t + U_t
//! ```
//!
//! with an unrestricted constant. The short-run regressors (constant, lagged
//! difference, SOI) are partialled out first; the remaining problem is a
//! generalized symmetric eigenproblem in the product moments of the residuals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::AlignedDataset;
use crate::dist::gamma_sf_mean_var;
use crate::error::{Error, Result};
use crate::linalg::{generalized_symmetric_eigen, inverse_spd, log_det_spd, moment, ols};

/// Tolerance on eigenvalues falling outside `[0, 1)`.
const EIGEN_TOL: f64 = 1e-8;

/// Asymptotic 5% critical values of the trace statistic with an unrestricted
/// constant, indexed by `p - r` (1-based).
pub const TRACE_CRITICAL_5PCT: [f64; 4] = [3.84, 15.41, 29.80, 47.71];

/// Lag order and deterministic/exogenous content of a VECM.
///
/// The constant is always unrestricted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VecmSpec {
    pub rank: usize,
    /// Number of lagged differences `k` (0 or 1).
    pub lags: usize,
    pub include_soi: bool,
}

impl VecmSpec {
    /// The benchmark model: rank 3, one lagged difference, SOI included.
    pub const BENCHMARK: VecmSpec = VecmSpec {
        rank: 3,
        lags: 1,
        include_soi: true,
    };

    pub fn new(rank: usize, lags: usize, include_soi: bool) -> Self {
        VecmSpec {
            rank,
            lags,
            include_soi,
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.rank > p {
            return Err(Error::InvalidSpec(format!("rank {} exceeds dimension {p}", self.rank)));
        }
        if self.lags > 1 {
            return Err(Error::InvalidSpec(format!(
                "{} lagged differences requested; only 0 or 1 are supported",
                self.lags
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!(
            "{} SOI, k={} lag{}",
            if self.include_soi { "With" } else { "No" },
            self.lags,
            if self.lags == 1 { "" } else { "s" }
        )
    }
}

/// Regression data and product moments after partialling out the short-run regressors.
#[derive(Debug, Clone)]
pub struct Moments {
    pub spec: VecmSpec,
    /// Effective number of observations of `ΔY_t`.
    pub t: usize,
    pub p: usize,
    /// Year of every row used.
    pub years: Vec<i32>,
    /// `ΔY_t`, `T × p`.
    pub dy: DMatrix<f64>,
    /// `Y_{t-1}`, `T × p`.
    pub y_lag: DMatrix<f64>,
    /// Short-run regressors, `T × q`: constant, then `ΔY_{t-1}` if `k = 1`, then SOI.
    pub z: DMatrix<f64>,
    /// `ΔY_t` and `Y_{t-1}` with `z` partialled out.
    pub r0: DMatrix<f64>,
    pub r1: DMatrix<f64>,
    pub s00: DMatrix<f64>,
    pub s01: DMatrix<f64>,
    pub s11: DMatrix<f64>,
    /// True if SOI was requested but dropped because it is constant.
    pub soi_dropped: bool,
}

impl Moments {
    pub fn s10(&self) -> DMatrix<f64> {
        self.s01.transpose()
    }

    fn has_soi(&self) -> bool {
        self.spec.include_soi && !self.soi_dropped
    }
}

/// Builds the regression data and partials out the constant, the lagged difference
/// and SOI from `ΔY_t` and `Y_{t-1}`.
///
/// The first `k + 1` observations are conditioned on, so `T = n - 1 - k`.
pub fn concentrate(dataset: &AlignedDataset, spec: VecmSpec) -> Result<Moments> {
    let levels = dataset.levels();
    let n = levels.nrows();
    let p = levels.ncols();
    spec.validate(p)?;
    let k = spec.lags;
    if n < k + 2 {
        return Err(Error::Sample(format!(
            "{n} observations cannot support {k} lagged differences"
        )));
    }
    let t = n - 1 - k;
    let first = k + 1;
    let dy = DMatrix::from_fn(t, p, |i, j| levels[(first + i, j)] - levels[(first + i - 1, j)]);
    let y_lag = DMatrix::from_fn(t, p, |i, j| levels[(first + i - 1, j)]);

    let soi = &dataset.soi[first..];
    let soi_constant = soi.iter().all(|&v| v == soi[0]);
    let soi_dropped = spec.include_soi && soi_constant;
    if soi_dropped {
        log::warn!("SOI is constant over the sample; dropping it from the regressors");
    }
    let use_soi = spec.include_soi && !soi_dropped;

    let q = 1 + k * p + usize::from(use_soi);
    let z = DMatrix::from_fn(t, q, |i, j| {
        if j == 0 {
            1.0
        } else if j <= k * p {
            levels[(first + i - 1, j - 1)] - levels[(first + i - 2, j - 1)]
        } else {
            soi[i]
        }
    });

    let (_, r0) = ols(&dy, &z)?;
    let (_, r1) = ols(&y_lag, &z)?;
    Ok(Moments {
        spec,
        t,
        p,
        years: dataset.years[first..].to_vec(),
        s00: moment(&r0, &r0),
        s01: moment(&r0, &r1),
        s11: moment(&r1, &r1),
        dy,
        y_lag,
        z,
        r0,
        r1,
        soi_dropped,
    })
}

/// Eigen-decomposition of `|λ S11 − S10 S00⁻¹ S01| = 0`.
#[derive(Debug, Clone)]
pub struct JohansenEigen {
    /// Descending, in `[0, 1)`.
    pub values: Vec<f64>,
    /// Columns normalised by `v' S11 v = I`.
    pub vectors: DMatrix<f64>,
}

/// Solves the reduced-rank eigenproblem for an arbitrary pair of moment blocks.
///
/// `s00` is the moment of the dependent block, `s01` the cross moment, `s11` the
/// moment of the levels block (possibly transformed by a restriction).
pub(crate) fn rrr_eigen(
    s00: &DMatrix<f64>,
    s01: &DMatrix<f64>,
    s11: &DMatrix<f64>,
) -> Result<JohansenEigen> {
    let s00_inv = inverse_spd(s00)?;
    let a = s01.transpose() * s00_inv * s01;
    let (mut values, vectors) = generalized_symmetric_eigen(&a, s11)?;
    for v in values.iter_mut() {
        if *v < -EIGEN_TOL || *v >= 1.0 - EIGEN_TOL {
            return Err(Error::Conditioning(format!(
                "reduced-rank eigenvalue {v} outside [0, 1)"
            )));
        }
        *v = v.max(0.0);
    }
    Ok(JohansenEigen { values, vectors })
}

pub fn johansen_eigen(moments: &Moments) -> Result<JohansenEigen> {
    rrr_eigen(&moments.s00, &moments.s01, &moments.s11)
}

/// Reduced-form VECM estimate.
#[derive(Debug, Clone)]
pub struct VecmEstimate {
    pub spec: VecmSpec,
    pub t: usize,
    pub years: Vec<i32>,
    /// `p × r` adjustment coefficients.
    pub alpha: DMatrix<f64>,
    /// `p × r` cointegration vectors, leading `r × r` block equal to the identity.
    pub beta: DMatrix<f64>,
    pub mu: DVector<f64>,
    pub gamma1: Option<DMatrix<f64>>,
    pub phi_soi: Option<DVector<f64>>,
    pub sigma: DMatrix<f64>,
    /// `T × p` residuals `Û_t`.
    pub residuals: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub loglik: f64,
    pub n_free_params: usize,
}

impl VecmEstimate {
    /// `Π = αβ'`.
    pub fn pi(&self) -> DMatrix<f64> {
        &self.alpha * self.beta.transpose()
    }
}

/// Number of free mean parameters in a VECM of dimension `p`.
pub fn free_params(p: usize, spec: &VecmSpec, soi_used: bool) -> usize {
    let r = spec.rank;
    p * r + (p - r) * r + p + spec.lags * p * p + if soi_used { p } else { 0 }
}

/// Reduced-rank regression for a given rank.
pub fn solve_rrr(moments: &Moments, rank: usize) -> Result<VecmEstimate> {
    let p = moments.p;
    if rank > p {
        return Err(Error::InvalidSpec(format!("rank {rank} exceeds dimension {p}")));
    }
    let eig = johansen_eigen(moments)?;
    let beta = if rank == 0 {
        DMatrix::zeros(p, 0)
    } else {
        let raw = eig.vectors.columns(0, rank).into_owned();
        let lead = raw.rows(0, rank).into_owned();
        let lead_inv = lead.try_inverse().ok_or_else(|| {
            Error::Conditioning(
                "leading block of the cointegration vectors is singular; cannot normalise".into(),
            )
        })?;
        let mut b = raw * lead_inv;
        for i in 0..rank {
            for j in 0..rank {
                b[(i, j)] = if i == j { 1.0 } else { 0.0 };
            }
        }
        b
    };
    estimate_given_beta(moments, beta, eig.values)
}

/// OLS of the remaining coefficients given the cointegration vectors.
pub(crate) fn estimate_given_beta(
    moments: &Moments,
    beta: DMatrix<f64>,
    eigenvalues: Vec<f64>,
) -> Result<VecmEstimate> {
    let p = moments.p;
    let rank = beta.ncols();
    let alpha = if rank == 0 {
        DMatrix::zeros(p, 0)
    } else {
        let bsb = beta.transpose() * &moments.s11 * &beta;
        let bsb_inv = bsb.try_inverse().ok_or_else(|| {
            Error::Conditioning("β'S11β is singular".into())
        })?;
        &moments.s01 * &beta * bsb_inv
    };
    let target = &moments.dy - &moments.y_lag * &beta * alpha.transpose();
    let (coef, residuals) = ols(&target, &moments.z)?;
    let k = moments.spec.lags;
    let mu = coef.row(0).transpose().into_owned();
    let gamma1 = (k == 1).then(|| coef.rows(1, p).transpose().into_owned());
    let phi_soi = moments
        .has_soi()
        .then(|| coef.row(coef.nrows() - 1).transpose().into_owned());
    let sigma = moment(&residuals, &residuals);
    let loglik = quasi_loglik(&residuals)?;
    let spec = VecmSpec {
        rank,
        ..moments.spec
    };
    Ok(VecmEstimate {
        spec,
        t: moments.t,
        years: moments.years.clone(),
        alpha,
        beta,
        mu,
        gamma1,
        phi_soi,
        sigma,
        residuals,
        eigenvalues,
        loglik,
        n_free_params: free_params(p, &spec, moments.has_soi()),
    })
}

/// Concentrates and estimates in one call.
pub fn fit_vecm(dataset: &AlignedDataset, spec: VecmSpec) -> Result<VecmEstimate> {
    let m = concentrate(dataset, spec)?;
    solve_rrr(&m, spec.rank)
}

/// Maximised Gaussian quasi-log-likelihood with `Σ̂ = T⁻¹ Σ Û_t Û_t'`.
pub fn quasi_loglik(residuals: &DMatrix<f64>) -> Result<f64> {
    let t = residuals.nrows();
    let p = residuals.ncols();
    if t <= p {
        return Err(Error::Sample(format!("{t} observations for dimension {p}")));
    }
    let sigma = moment(residuals, residuals);
    let ld = log_det_spd(&sigma)?;
    let (tf, pf) = (t as f64, p as f64);
    Ok(-0.5 * tf * pf * (2.0 * std::f64::consts::PI).ln() - 0.5 * tf * ld - 0.5 * tf * pf)
}

/// Log-likelihood of rank `r` from the eigenvalues and `S00` alone.
pub fn loglik_from_eigen(moments: &Moments, values: &[f64], rank: usize) -> Result<f64> {
    let (tf, pf) = (moments.t as f64, moments.p as f64);
    let ld = log_det_spd(&moments.s00)?;
    let sum: f64 = values[..rank].iter().map(|l| (1.0 - l).ln()).sum();
    Ok(-0.5 * tf * pf * (2.0 * std::f64::consts::PI).ln() - 0.5 * tf * (ld + sum) - 0.5 * tf * pf)
}

/// Johansen trace test for every null rank `r = 0..p-1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceTestResult {
    pub spec: VecmSpec,
    pub t: usize,
    pub eigenvalues: Vec<f64>,
    pub trace_stats: Vec<f64>,
    pub critical_5pct: Vec<f64>,
    pub p_values: Vec<f64>,
    pub selected_rank: usize,
}

/// Mean and variance of the asymptotic trace distribution with an unrestricted
/// constant and `n = p - r` common trends (gamma response-surface approximation).
pub fn trace_moments(n: usize) -> (f64, f64) {
    let nf = n as f64;
    let d1 = f64::from(u8::from(n == 1));
    let d2 = f64::from(u8::from(n == 2));
    let mean = 2.0 * nf * nf + 1.05 * nf - 1.55 - 0.50 * d1 - 0.23 * d2;
    let var = 3.0 * nf * nf + 1.80 * nf - 2.80 * d1 - 1.10 * d2;
    (mean, var)
}

/// Asymptotic p-value of a trace statistic with `n = p - r`.
pub fn trace_p_value(stat: f64, n: usize) -> f64 {
    let (m, v) = trace_moments(n);
    gamma_sf_mean_var(stat, m, v)
}

/// Asymptotic `level` critical value of the trace statistic with `n = p - r`.
pub fn trace_critical_value(n: usize, level: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Gamma};
    let (m, v) = trace_moments(n);
    let g = Gamma::new(m * m / v, m / v).expect("valid gamma parameters");
    g.inverse_cdf(1.0 - level)
}

pub fn trace_test(moments: &Moments) -> Result<TraceTestResult> {
    let eig = johansen_eigen(moments)?;
    Ok(trace_test_from_eigenvalues(
        moments.spec,
        moments.t,
        &eig.values,
    ))
}

/// Trace statistics, p-values and rank selection from a set of eigenvalues.
pub fn trace_test_from_eigenvalues(spec: VecmSpec, t: usize, eigenvalues: &[f64]) -> TraceTestResult {
    let p = eigenvalues.len();
    let tf = t as f64;
    let trace_stats: Vec<f64> = (0..p)
        .map(|r| -tf * eigenvalues[r..].iter().map(|l| (1.0 - l).ln()).sum::<f64>())
        .map(|s| if s == 0.0 { 0.0 } else { s })
        .collect();
    let p_values: Vec<f64> = (0..p).map(|r| trace_p_value(trace_stats[r], p - r)).collect();
    let critical_5pct: Vec<f64> = (0..p)
        .map(|r| trace_critical_value(p - r, 0.05))
        .collect();
    let selected_rank = (0..p).find(|&r| p_values[r] >= 0.05).unwrap_or(p);
    TraceTestResult {
        spec,
        t,
        eigenvalues: eigenvalues.to_vec(),
        trace_stats,
        critical_5pct,
        p_values,
        selected_rank,
    }
}

/// Row-major copy of a matrix for serialisation.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Serialisable view of a [`VecmEstimate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VecmReport {
    pub spec: VecmSpec,
    pub t: usize,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub gamma1: Option<Vec<Vec<f64>>>,
    pub phi_soi: Option<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub loglik: f64,
    pub n_free_params: usize,
}

impl From<&VecmEstimate> for VecmReport {
    fn from(e: &VecmEstimate) -> Self {
        VecmReport {
            spec: e.spec,
            t: e.t,
            alpha: matrix_rows(&e.alpha),
            beta: matrix_rows(&e.beta),
            mu: e.mu.iter().copied().collect(),
            gamma1: e.gamma1.as_ref().map(matrix_rows),
            phi_soi: e.phi_soi.as_ref().map(|v| v.iter().copied().collect()),
            sigma: matrix_rows(&e.sigma),
            eigenvalues: e.eigenvalues.clone(),
            loglik: e.loglik,
            n_free_params: e.n_free_params,
        }
    }
}
