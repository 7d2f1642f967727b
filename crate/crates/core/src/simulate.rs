//! Synthetic data generators for simulation studies and examples.

use nalgebra::{DMatrix, Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{AlignedDataset, Constants, EmissionScenario, GcbTable, SoiSeries};
use crate::error::{Error, Result};
use crate::structural::{theta_to_structural, StructuralTheta};

/// Structural shock standard deviations used by default in simulations
/// (land, ocean, emissions, budget), PgC/yr. Same order of magnitude as the
/// residual dispersion of the annual budget series.
pub const REFERENCE_SHOCK_SD: [f64; 4] = [0.65, 0.094, 0.187, 0.2];

/// Stationary AR(1) generator for a SOI-like exogenous index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoiProcess {
    pub phi: f64,
    /// Innovation standard deviation.
    pub sd: f64,
}

impl Default for SoiProcess {
    fn default() -> Self {
        SoiProcess { phi: 0.4, sd: 0.9 }
    }
}

impl SoiProcess {
    pub fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let stationary_sd = self.sd / (1.0 - self.phi * self.phi).sqrt();
        let mut x = stationary_sd * Distribution::<f64>::sample(&StandardNormal, rng);
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(rng);
                x = self.phi * x + self.sd * e;
                x
            })
            .collect()
    }
}

fn diag_cov(sd: [f64; 4]) -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::from(sd.map(|s| s * s)))
}

/// Settings for [`simulate_structural`].
#[derive(Debug, Clone)]
pub struct StructuralSimulation {
    pub n_years: usize,
    pub start_year: i32,
    /// Structural error covariance `Σ_ε`.
    pub shock_cov: Matrix4<f64>,
    pub soi: SoiProcess,
    /// Initial emissions, PgC/yr.
    pub e0: f64,
    /// Years simulated and discarded before the returned sample.
    pub burn_in: usize,
    pub seed: u64,
}

impl StructuralSimulation {
    pub fn new(n_years: usize, seed: u64) -> Self {
        StructuralSimulation {
            n_years,
            start_year: 1959,
            shock_cov: diag_cov(REFERENCE_SHOCK_SD),
            soi: SoiProcess::default(),
            e0: 3.0,
            burn_in: 20,
            seed,
        }
    }
}

/// Simulates the restricted model forward from an equilibrium-consistent start.
pub fn simulate_structural(theta: &StructuralTheta, sim: &StructuralSimulation) -> Result<AlignedDataset> {
    let sys = theta_to_structural(theta)?;
    let a0_inv = sys
        .a0
        .try_inverse()
        .ok_or_else(|| Error::ParameterDomain("concurrent-relations matrix is singular".into()))?;
    let chol = sim
        .shock_cov
        .cholesky()
        .ok_or_else(|| Error::InvalidSpec("shock covariance is not positive definite".into()))?
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let total = sim.n_years + sim.burn_in;
    let soi = sim.soi.generate(total, &mut rng);

    let c0 = Constants::default().c_initial;
    let mut y = Vector4::new(theta.a1 + theta.b1 * c0, theta.a2 + theta.b2 * c0, sim.e0, c0);
    let mut dy = Vector4::new(0.0, 0.0, theta.d, 0.0);
    let mut levels = Vec::with_capacity(total);
    for &s in soi.iter() {
        let z = Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
        let eps = chol * z;
        let rhs = sys.intercept + sys.soi_load * s + sys.level_coef * y + sys.diff_coef * dy + eps;
        dy = a0_inv * rhs;
        y += dy;
        levels.push(y);
    }
    let keep = &levels[sim.burn_in..];
    let years = (0..sim.n_years as i32).map(|i| sim.start_year + i).collect();
    AlignedDataset::new(
        years,
        keep.iter().map(|v| v[0]).collect(),
        keep.iter().map(|v| v[1]).collect(),
        keep.iter().map(|v| v[2]).collect(),
        keep.iter().map(|v| v[3]).collect(),
        soi[sim.burn_in..].to_vec(),
    )
}

/// Reduced-form data-generating process
/// `ΔY_t = μ + αβ'Y_{t-1} + Γ₁ΔY_{t-1} + Φ·SOI_t + U_t`, `U_t ~ N(0, Σ)`.
#[derive(Debug, Clone)]
pub struct VecmDgp {
    pub alpha: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub mu: Vector4<f64>,
    pub gamma1: Matrix4<f64>,
    pub phi_soi: Vector4<f64>,
    pub sigma: Matrix4<f64>,
    pub soi: SoiProcess,
}

impl VecmDgp {
    /// Rank-`r` system: the first `r` variables error-correct towards the
    /// last, which is a random walk with drift.
    pub fn canonical(rank: usize, adjustment: f64) -> Self {
        assert!(rank < 4, "canonical DGP has one common trend");
        let mut alpha = DMatrix::zeros(4, rank);
        let mut beta = DMatrix::zeros(4, rank);
        for i in 0..rank {
            alpha[(i, i)] = -adjustment;
            beta[(i, i)] = 1.0;
            beta[(3, i)] = -1.0;
        }
        VecmDgp {
            alpha,
            beta,
            mu: Vector4::new(0.1, 0.2, 0.3, 0.5),
            gamma1: Matrix4::zeros(),
            phi_soi: Vector4::zeros(),
            sigma: Matrix4::identity(),
            soi: SoiProcess::default(),
        }
    }

    pub fn simulate(&self, n: usize, seed: u64) -> Result<AlignedDataset> {
        let chol = self
            .sigma
            .cholesky()
            .ok_or_else(|| Error::InvalidSpec("Σ is not positive definite".into()))?
            .l();
        let pi_dyn = &self.alpha * self.beta.transpose();
        let pi = Matrix4::from_fn(|i, j| pi_dyn[(i, j)]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let burn = 50;
        let soi = self.soi.generate(n + burn, &mut rng);
        let mut y = Vector4::new(1.0, 2.0, 3.0, 4.0);
        let mut dy = Vector4::zeros();
        let mut out = Vec::with_capacity(n);
        for &s in &soi {
            let z = Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
            dy = self.mu + pi * y + self.gamma1 * dy + self.phi_soi * s + chol * z;
            y += dy;
            out.push(y);
        }
        let keep = &out[burn..];
        AlignedDataset::new(
            (0..n as i32).collect(),
            keep.iter().map(|v| v[0]).collect(),
            keep.iter().map(|v| v[1]).collect(),
            keep.iter().map(|v| v[2]).collect(),
            keep.iter().map(|v| v[3]).collect(),
            soi[burn..].to_vec(),
        )
    }
}

/// Independent standard normal draws, `n × p`.
pub fn white_noise(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
}

/// Splits a dataset back into GCB-style source columns and an SOI series.
///
/// Emissions are split into fossil, land-use and carbonation parts that recompose
/// exactly, and atmospheric growth is the first difference of the stock (zero in
/// the first year). Ingesting the result reproduces the dataset up to the level of
/// the stock, which is re-anchored at [`Constants::c_initial`].
pub fn to_sources(dataset: &AlignedDataset) -> (GcbTable, SoiSeries) {
    let n = dataset.len();
    let land_use = vec![1.2; n];
    let cement = vec![0.1; n];
    let fossil = dataset.emissions.iter().map(|e| e - 1.2 + 0.1).collect();
    let growth = (0..n)
        .map(|i| if i == 0 { 0.0 } else { dataset.concentration[i] - dataset.concentration[i - 1] })
        .collect();
    let table = GcbTable {
        years: dataset.years.clone(),
        fossil,
        land_use,
        cement_carbonation: cement,
        atmospheric_growth: growth,
        land_sink: dataset.land_sink.clone(),
        ocean_sink: dataset.ocean_sink.clone(),
        budget_imbalance: None,
    };
    let soi = SoiSeries {
        years: dataset.years.clone(),
        values: dataset.soi.clone(),
    };
    (table, soi)
}

/// Emissions rising linearly by `slope` per year from `e0` over `first..=last`,
/// then flat; a stand-in for a high-emissions pathway.
pub fn ramp_scenario(name: &str, e0: f64, slope: f64, first: i32, last: i32, peak: i32) -> EmissionScenario {
    let years: Vec<i32> = (first..=last).collect();
    let emissions = years
        .iter()
        .map(|&y| e0 + slope * ((y.min(peak) - first + 1) as f64))
        .collect();
    EmissionScenario {
        name: name.to_string(),
        years,
        emissions,
    }
}
