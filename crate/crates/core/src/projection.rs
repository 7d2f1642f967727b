//! Monte Carlo projections of the restricted model under an emissions scenario.
//!
//! Out of sample, emissions follow the scenario exactly through a time-varying
//! drift, and the sink intercepts and slopes decay geometrically so that a
//! fraction `p_j` of sink activity is lost 28 years after the last in-sample year.
//! Each simulated year solves the sink and budget equations jointly for `C_t`:
//!
//! ```text
//! X_j,t = φ_j X_j,t-1 + b_{j+2} SOI_t + ε_j,t     (j = 1, 2)
//! X_4,t = φ_4 X_4,t-1 + ε_4,t
//! E_t   = E_t-1 + d_t
//! C_t   = (C_t-1 + E_t − a1_t − a2_t − X_1,t − X_2,t + X_4,t) / (1 + b1_t + b2_t)
//! S^L_t = a1_t + b1_t C_t + X_1,t,   S^O_t = a2_t + b2_t C_t + X_2,t
//! ```

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AlignedDataset, EmissionScenario};
use crate::error::{Error, Result};
use crate::estimation::{FitReport, StructuralFit};
use crate::structural::{theta_to_structural, StructuralTheta};

/// Years from the last in-sample year to mid-century.
pub const MID_CENTURY_SPAN: f64 = 28.0;

/// Default last projection year.
pub const DEFAULT_HORIZON: i32 = 2100;

/// Default quantile levels of a fan.
pub const FAN_PROBS: [f64; 3] = [0.025, 0.5, 0.975];

/// Decay rate giving a fractional loss `p_half` of sink activity by mid-century.
pub fn feedback_gamma(p_half: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_half) {
        return Err(Error::ParameterDomain(format!(
            "sink weakening fraction {p_half} must lie in [0, 1)"
        )));
    }
    Ok(-(1.0 - p_half).ln() / MID_CENTURY_SPAN)
}

/// Sink weakening for land (`p1`) and ocean (`p2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSpec {
    pub p1: f64,
    pub p2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl FeedbackSpec {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        Ok(FeedbackSpec {
            p1,
            p2,
            gamma1: feedback_gamma(p1)?,
            gamma2: feedback_gamma(p2)?,
        })
    }

    pub fn none() -> Self {
        FeedbackSpec {
            p1: 0.0,
            p2: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
        }
    }
}

/// The three named feedback settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackLevel {
    None,
    Low,
    High,
}

impl FeedbackLevel {
    pub const ALL: [FeedbackLevel; 3] = [FeedbackLevel::None, FeedbackLevel::Low, FeedbackLevel::High];

    /// Weakening fraction applied to both sinks.
    pub fn fraction(self) -> f64 {
        match self {
            FeedbackLevel::None => 0.0,
            FeedbackLevel::Low => 0.25,
            FeedbackLevel::High => 0.5,
        }
    }

    pub fn spec(self) -> FeedbackSpec {
        let p = self.fraction();
        FeedbackSpec::new(p, p).expect("named fractions are valid")
    }
}

impl fmt::Display for FeedbackLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackLevel::None => "none",
            FeedbackLevel::Low => "low",
            FeedbackLevel::High => "high",
        })
    }
}

impl FromStr for FeedbackLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "no" => Ok(FeedbackLevel::None),
            "low" => Ok(FeedbackLevel::Low),
            "high" => Ok(FeedbackLevel::High),
            _ => Err(Error::InvalidSpec(format!("unknown feedback level `{s}`"))),
        }
    }
}

/// Emissions drift `d_t = E*_t − E*_{t−1}` anchored at the last observed emissions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftPath {
    pub years: Vec<i32>,
    pub d: Vec<f64>,
    pub e_anchor: f64,
}

impl DriftPath {
    /// Emissions implied by accumulating the drift from the anchor.
    pub fn emissions(&self) -> Vec<f64> {
        let mut e = self.e_anchor;
        self.d
            .iter()
            .map(|d| {
                e += d;
                e
            })
            .collect()
    }
}

/// Drift reproducing `scenario` from `e_last`, the emissions of the year before it starts.
pub fn build_drift(scenario: &EmissionScenario, e_last: f64) -> Result<DriftPath> {
    let first = *scenario
        .years
        .first()
        .ok_or_else(|| Error::ScenarioAlignment(format!("scenario `{}` is empty", scenario.name)))?;
    scenario.validate(first)?;
    let mut prev = e_last;
    let d = scenario
        .emissions
        .iter()
        .map(|&e| {
            let step = e - prev;
            prev = e;
            step
        })
        .collect();
    Ok(DriftPath {
        years: scenario.years.clone(),
        d,
        e_anchor: e_last,
    })
}

/// Sink coefficients in a projection year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkCoeffs {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

/// Sink intercepts and slopes in `year`, each scaled by `exp(−γ_j (year − base_year))`.
pub fn decay_coeffs(theta: &StructuralTheta, feedback: &FeedbackSpec, year: i32, base_year: i32) -> SinkCoeffs {
    let h = (year - base_year) as f64;
    let k1 = (-feedback.gamma1 * h).exp();
    let k2 = (-feedback.gamma2 * h).exp();
    SinkCoeffs {
        a1: theta.a1 * k1,
        b1: theta.b1 * k1,
        a2: theta.a2 * k2,
        b2: theta.b2 * k2,
    }
}

/// Levels and deviation processes in one year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub year: i32,
    pub land_sink: f64,
    pub ocean_sink: f64,
    pub emissions: f64,
    pub concentration: f64,
    pub x1: f64,
    pub x2: f64,
    /// Budget imbalance `ΔC − E + S^L + S^O`.
    pub x4: f64,
}

/// Advances the system by one year.
///
/// `shocks` are the structural errors of the land, ocean and budget equations.
pub fn step_system(
    state: &SystemState,
    coeffs: &SinkCoeffs,
    drift: f64,
    soi: f64,
    shocks: [f64; 3],
    theta: &StructuralTheta,
) -> Result<SystemState> {
    let year = state.year + 1;
    let denominator = 1.0 + coeffs.b1 + coeffs.b2;
    if !(denominator > 0.0) {
        return Err(Error::FeedbackSingularity { year, denominator });
    }
    let x1 = theta.phi1 * state.x1 + theta.b3 * soi + shocks[0];
    let x2 = theta.phi2 * state.x2 + theta.b4 * soi + shocks[1];
    let x4 = theta.phi4 * state.x4 + shocks[2];
    let emissions = state.emissions + drift;
    let concentration =
        (state.concentration + emissions - coeffs.a1 - coeffs.a2 - x1 - x2 + x4) / denominator;
    Ok(SystemState {
        year,
        land_sink: coeffs.a1 + coeffs.b1 * concentration + x1,
        ocean_sink: coeffs.a2 + coeffs.b2 * concentration + x2,
        emissions,
        concentration,
        x1,
        x2,
        x4,
    })
}

/// Treatment of SOI after the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoiMode {
    #[default]
    Zero,
    /// Draw each year's SOI with replacement from the in-sample values.
    Bootstrap,
}

impl fmt::Display for SoiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SoiMode::Zero => "zero",
            SoiMode::Bootstrap => "bootstrap",
        })
    }
}

impl FromStr for SoiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(SoiMode::Zero),
            "bootstrap" => Ok(SoiMode::Bootstrap),
            _ => Err(Error::InvalidSpec(format!("unknown SOI mode `{s}`"))),
        }
    }
}

/// Distribution of the land, ocean and budget shocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShockLaw {
    /// Gaussian with the estimated structural covariance of the three equations.
    #[default]
    Joint,
    /// Gaussian with the estimated variances and no cross-correlation.
    Diagonal,
    /// All shocks zero.
    Off,
}

impl fmt::Display for ShockLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShockLaw::Joint => "joint",
            ShockLaw::Diagonal => "diagonal",
            ShockLaw::Off => "off",
        })
    }
}

impl FromStr for ShockLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "joint" => Ok(ShockLaw::Joint),
            "diagonal" => Ok(ShockLaw::Diagonal),
            "off" | "none" => Ok(ShockLaw::Off),
            _ => Err(Error::InvalidSpec(format!("unknown shock law `{s}`"))),
        }
    }
}

/// Everything a projection needs from the estimation step.
#[derive(Debug, Clone)]
pub struct ProjectionSetup {
    pub theta: StructuralTheta,
    /// Structural error covariance `A0 Σ_U A0'`.
    pub sigma_eps: Matrix4<f64>,
    /// State in the last in-sample year.
    pub initial: SystemState,
    pub historical_soi: Vec<f64>,
}

impl ProjectionSetup {
    /// Builds the setup from `theta`, `Σ_U` and the estimation sample.
    ///
    /// The initial deviations are the fitted sink and budget deviations in the
    /// last sample year.
    pub fn new(theta: StructuralTheta, sigma_u: Matrix4<f64>, dataset: &AlignedDataset) -> Result<Self> {
        let n = dataset.len();
        if n < 2 {
            return Err(Error::Sample("projection needs at least two sample years".into()));
        }
        let a0 = theta_to_structural(&theta)?.a0;
        let last = n - 1;
        let c = dataset.concentration[last];
        let initial = SystemState {
            year: dataset.years[last],
            land_sink: dataset.land_sink[last],
            ocean_sink: dataset.ocean_sink[last],
            emissions: dataset.emissions[last],
            concentration: c,
            x1: dataset.land_sink[last] - theta.a1 - theta.b1 * c,
            x2: dataset.ocean_sink[last] - theta.a2 - theta.b2 * c,
            x4: dataset.budget_imbalance()[last - 1],
        };
        Ok(ProjectionSetup {
            theta,
            sigma_eps: a0 * sigma_u * a0.transpose(),
            initial,
            historical_soi: dataset.soi.clone(),
        })
    }

    pub fn from_fit(fit: &StructuralFit, dataset: &AlignedDataset) -> Result<Self> {
        if fit.years.last() != dataset.years.last() {
            return Err(Error::Alignment(format!(
                "fit ends in {:?} but the dataset ends in {:?}",
                fit.years.last(),
                dataset.years.last()
            )));
        }
        let sigma_u = Matrix4::from_fn(|i, j| fit.sigma_u[(i, j)]);
        Self::new(fit.theta, sigma_u, dataset)
    }

    pub fn from_report(report: &FitReport, dataset: &AlignedDataset) -> Result<Self> {
        if Some(&report.last_year) != dataset.years.last() {
            return Err(Error::Alignment(format!(
                "fit ends in {} but the dataset ends in {:?}",
                report.last_year,
                dataset.years.last()
            )));
        }
        Self::new(report.theta, report.sigma_u_matrix()?, dataset)
    }

    pub fn base_year(&self) -> i32 {
        self.initial.year
    }

    /// Lower Cholesky factor of the shock covariance for the land, ocean and budget equations.
    fn shock_factor(&self, law: ShockLaw) -> Result<Matrix3<f64>> {
        let idx = [0, 1, 3];
        let cov = Matrix3::from_fn(|i, j| self.sigma_eps[(idx[i], idx[j])]);
        match law {
            ShockLaw::Off => Ok(Matrix3::zeros()),
            ShockLaw::Diagonal => {
                if cov.diagonal().iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::Conditioning("negative shock variance".into()));
                }
                Ok(Matrix3::from_diagonal(&cov.diagonal().map(f64::sqrt)))
            }
            ShockLaw::Joint => cov
                .cholesky()
                .map(|c| c.l())
                .ok_or_else(|| Error::Conditioning("shock covariance is not positive definite".into())),
        }
    }
}

/// Settings of a projection run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub feedback: FeedbackSpec,
    pub n_paths: usize,
    /// Last projected year.
    pub horizon: i32,
    pub seed: u64,
    pub soi_mode: SoiMode,
    pub shocks: ShockLaw,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            feedback: FeedbackSpec::none(),
            n_paths: 10_000,
            horizon: DEFAULT_HORIZON,
            seed: 0,
            soi_mode: SoiMode::Zero,
            shocks: ShockLaw::Joint,
            threads: None,
        }
    }
}

/// Problems met on a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PathFlags {
    /// Concentration fell below zero in some year.
    pub negative_concentration: bool,
    /// The feedback-decayed sinks made the concentration equation singular;
    /// the path is excluded from quantiles.
    pub singular: bool,
}

/// Simulated trajectories, stored path-major (`path * n_years + year`).
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub years: Vec<i32>,
    pub n_paths: usize,
    pub seed: u64,
    /// Scenario emissions, identical on every path.
    pub emissions: Vec<f64>,
    pub concentration: Vec<f64>,
    pub land_sink: Vec<f64>,
    pub ocean_sink: Vec<f64>,
    /// Budget imbalance `X_4`.
    pub budget_imbalance: Vec<f64>,
    pub flags: Vec<PathFlags>,
    /// Concentration in the base year, for growth checks.
    pub initial_concentration: f64,
}

/// Projected variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectedVariable {
    Concentration,
    LandSink,
    OceanSink,
    Emissions,
}

impl ProjectedVariable {
    pub const ALL: [ProjectedVariable; 4] = [
        ProjectedVariable::Concentration,
        ProjectedVariable::LandSink,
        ProjectedVariable::OceanSink,
        ProjectedVariable::Emissions,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            ProjectedVariable::Concentration => "C",
            ProjectedVariable::LandSink => "sL",
            ProjectedVariable::OceanSink => "sO",
            ProjectedVariable::Emissions => "E",
        }
    }
}

impl PathEnsemble {
    pub fn n_years(&self) -> usize {
        self.years.len()
    }

    /// Path `i` of a stored variable. Emissions are the same on every path.
    pub fn path(&self, var: ProjectedVariable, i: usize) -> &[f64] {
        let n = self.n_years();
        let range = i * n..(i + 1) * n;
        match var {
            ProjectedVariable::Concentration => &self.concentration[range],
            ProjectedVariable::LandSink => &self.land_sink[range],
            ProjectedVariable::OceanSink => &self.ocean_sink[range],
            ProjectedVariable::Emissions => &self.emissions,
        }
    }

    pub fn budget_path(&self, i: usize) -> &[f64] {
        let n = self.n_years();
        &self.budget_imbalance[i * n..(i + 1) * n]
    }

    pub fn n_singular(&self) -> usize {
        self.flags.iter().filter(|f| f.singular).count()
    }

    pub fn n_negative(&self) -> usize {
        self.flags.iter().filter(|f| f.negative_concentration).count()
    }

    /// Largest violation of `ΔC = E − S^L − S^O + X_4` over all valid paths and years.
    pub fn max_budget_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in (0..self.n_paths).filter(|&i| !self.flags[i].singular) {
            let c = self.path(ProjectedVariable::Concentration, i);
            let sl = self.path(ProjectedVariable::LandSink, i);
            let so = self.path(ProjectedVariable::OceanSink, i);
            let x4 = self.budget_path(i);
            let mut prev = self.initial_concentration;
            for t in 0..self.n_years() {
                let err = (c[t] - prev) - (self.emissions[t] - sl[t] - so[t] + x4[t]);
                worst = worst.max(err.abs());
                prev = c[t];
            }
        }
        worst
    }
}

struct PathOutput {
    c: Vec<f64>,
    sl: Vec<f64>,
    so: Vec<f64>,
    x4: Vec<f64>,
    flags: PathFlags,
}

/// Simulates `config.n_paths` trajectories from the year after the sample to `config.horizon`.
///
/// Path `i` draws from a ChaCha8 stream selected by `i` under `config.seed`, so the
/// result does not depend on the number of worker threads.
pub fn simulate_paths(
    setup: &ProjectionSetup,
    scenario: &EmissionScenario,
    config: &ProjectionConfig,
) -> Result<PathEnsemble> {
    let base = setup.base_year();
    if config.n_paths == 0 {
        return Err(Error::InvalidSpec("n_paths must be positive".into()));
    }
    if config.horizon <= base {
        return Err(Error::InvalidSpec(format!(
            "horizon {} must be after the last sample year {base}",
            config.horizon
        )));
    }
    scenario.validate(base + 1)?;
    if scenario.last_year() < config.horizon {
        return Err(Error::ScenarioAlignment(format!(
            "scenario `{}` ends in {} before the horizon {}",
            scenario.name,
            scenario.last_year(),
            config.horizon
        )));
    }
    if config.soi_mode == SoiMode::Bootstrap && setup.historical_soi.is_empty() {
        return Err(Error::InvalidSpec("SOI bootstrap needs historical SOI values".into()));
    }
    let n_years = (config.horizon - base) as usize;
    let truncated = EmissionScenario {
        name: scenario.name.clone(),
        years: scenario.years[..n_years].to_vec(),
        emissions: scenario.emissions[..n_years].to_vec(),
    };
    let drift = build_drift(&truncated, setup.initial.emissions)?;
    let coeffs: Vec<SinkCoeffs> = drift
        .years
        .iter()
        .map(|&y| decay_coeffs(&setup.theta, &config.feedback, y, base))
        .collect();
    let factor = setup.shock_factor(config.shocks)?;
    let draw_shocks = config.shocks != ShockLaw::Off;

    let run = |i: usize| -> PathOutput {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64);
        let mut out = PathOutput {
            c: Vec::with_capacity(n_years),
            sl: Vec::with_capacity(n_years),
            so: Vec::with_capacity(n_years),
            x4: Vec::with_capacity(n_years),
            flags: PathFlags::default(),
        };
        let mut state = setup.initial;
        for t in 0..n_years {
            let soi = match config.soi_mode {
                SoiMode::Zero => 0.0,
                SoiMode::Bootstrap => {
                    setup.historical_soi[rng.random_range(0..setup.historical_soi.len())]
                }
            };
            let eps = if draw_shocks {
                let z = Vector3::from_fn(|_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng));
                factor * z
            } else {
                Vector3::zeros()
            };
            match step_system(&state, &coeffs[t], drift.d[t], soi, [eps[0], eps[1], eps[2]], &setup.theta) {
                Ok(next) => {
                    if next.concentration < 0.0 {
                        out.flags.negative_concentration = true;
                    }
                    out.c.push(next.concentration);
                    out.sl.push(next.land_sink);
                    out.so.push(next.ocean_sink);
                    out.x4.push(next.x4);
                    state = next;
                }
                Err(_) => {
                    out.flags.singular = true;
                    for v in [&mut out.c, &mut out.sl, &mut out.so, &mut out.x4] {
                        v.resize(n_years, f64::NAN);
                    }
                    break;
                }
            }
        }
        out
    };

    let paths: Vec<PathOutput> = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidSpec(format!("cannot build thread pool: {e}")))?
            .install(|| (0..config.n_paths).into_par_iter().map(run).collect()),
        None => (0..config.n_paths).into_par_iter().map(run).collect(),
    };

    let total = config.n_paths * n_years;
    let mut ens = PathEnsemble {
        years: drift.years.clone(),
        n_paths: config.n_paths,
        seed: config.seed,
        emissions: drift.emissions(),
        concentration: Vec::with_capacity(total),
        land_sink: Vec::with_capacity(total),
        ocean_sink: Vec::with_capacity(total),
        budget_imbalance: Vec::with_capacity(total),
        flags: Vec::with_capacity(config.n_paths),
        initial_concentration: setup.initial.concentration,
    };
    for p in paths {
        ens.concentration.extend(p.c);
        ens.land_sink.extend(p.sl);
        ens.ocean_sink.extend(p.so);
        ens.budget_imbalance.extend(p.x4);
        ens.flags.push(p.flags);
    }
    if ens.n_singular() > 0 {
        log::warn!(
            "{} of {} paths hit a feedback singularity and are excluded",
            ens.n_singular(),
            ens.n_paths
        );
    }
    Ok(ens)
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Pointwise quantiles of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fan {
    pub variable: String,
    pub years: Vec<i32>,
    pub probs: Vec<f64>,
    /// `values[k][t]` is quantile `probs[k]` in `years[t]`.
    pub values: Vec<Vec<f64>>,
}

fn prob_label(p: f64) -> String {
    let pct = format!("{:.4}", p * 100.0);
    let pct = pct.trim_end_matches('0').trim_end_matches('.');
    format!("q{pct}")
}

impl Fan {
    pub fn quantile(&self, p: f64) -> Option<&[f64]> {
        self.probs
            .iter()
            .position(|q| (q - p).abs() < 1e-12)
            .map(|k| self.values[k].as_slice())
    }

    pub fn median(&self) -> Option<&[f64]> {
        self.quantile(0.5)
    }

    /// Value of quantile `p` in `year`.
    pub fn at(&self, year: i32, p: f64) -> Option<f64> {
        let t = self.years.iter().position(|&y| y == year)?;
        self.quantile(p).map(|q| q[t])
    }

    /// The fan under a positive rescaling, e.g. PgC to ppm.
    pub fn scaled(&self, variable: impl Into<String>, factor: f64) -> Fan {
        assert!(factor > 0.0, "rescaling must preserve quantile order");
        Fan {
            variable: variable.into(),
            years: self.years.clone(),
            probs: self.probs.clone(),
            values: self
                .values
                .iter()
                .map(|q| q.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    /// `year,q2.5,q50,q97.5` style CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["year".to_string()];
        header.extend(self.probs.iter().map(|&p| prob_label(p)));
        w.write_record(&header)?;
        for (t, y) in self.years.iter().enumerate() {
            let mut rec = vec![y.to_string()];
            rec.extend(self.values.iter().map(|q| format!("{:.6}", q[t])));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<fan csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }
}

/// Quantile fans for every projected variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub fans: Vec<Fan>,
    pub n_paths: usize,
    /// Paths entering the quantiles.
    pub n_valid: usize,
    pub n_negative_concentration: usize,
    pub seed: u64,
}

impl ProjectionResult {
    pub fn fan(&self, var: ProjectedVariable) -> &Fan {
        self.fans
            .iter()
            .find(|f| f.variable == var.symbol())
            .expect("every variable has a fan")
    }
}

/// Pointwise type-7 quantiles over the non-singular paths.
pub fn quantile_fan(ens: &PathEnsemble, probs: &[f64]) -> Result<ProjectionResult> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidSpec(format!("quantile level {p} outside [0, 1]")));
    }
    let valid: Vec<usize> = (0..ens.n_paths).filter(|&i| !ens.flags[i].singular).collect();
    if valid.is_empty() {
        return Err(Error::DegenerateInput("no valid paths to summarise".into()));
    }
    let n_years = ens.n_years();
    let fans = ProjectedVariable::ALL
        .iter()
        .map(|&var| {
            let mut values = vec![Vec::with_capacity(n_years); probs.len()];
            let mut column = Vec::with_capacity(valid.len());
            for t in 0..n_years {
                column.clear();
                column.extend(valid.iter().map(|&i| ens.path(var, i)[t]));
                column.sort_by(f64::total_cmp);
                for (k, &p) in probs.iter().enumerate() {
                    values[k].push(quantile_sorted(&column, p));
                }
            }
            Fan {
                variable: var.symbol().to_string(),
                years: ens.years.clone(),
                probs: probs.to_vec(),
                values,
            }
        })
        .collect();
    Ok(ProjectionResult {
        fans,
        n_paths: ens.n_paths,
        n_valid: valid.len(),
        n_negative_concentration: ens.n_negative(),
        seed: ens.seed,
    })
}

/// Run description written next to the fan files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionMetadata {
    pub scenario: String,
    pub label: String,
    pub seed: u64,
    pub n_paths: usize,
    pub n_valid: usize,
    pub n_negative_concentration: usize,
    pub base_year: i32,
    pub horizon: i32,
    pub soi_mode: SoiMode,
    pub shocks: ShockLaw,
    pub feedback: FeedbackSpec,
}

/// An externally supplied path (`year,value`), e.g. a concentration projection
/// from another model, for side-by-side reporting.
pub fn read_overlay<R: Read>(reader: R, path: &Path) -> Result<Vec<(i32, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = vec![];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (Some(y), Some(v)) = (rec.get(0), rec.get(1)) else {
            continue;
        };
        let (Ok(year), Ok(value)) = (y.parse::<f64>(), v.parse::<f64>()) else {
            if out.is_empty() {
                continue;
            }
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: i + 1,
                column: "value".into(),
                value: format!("{y},{v}"),
            });
        };
        out.push((year.round() as i32, value));
    }
    Ok(out)
}
