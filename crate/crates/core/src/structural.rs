//! The physically restricted model.
//!
//! Sinks are linear in the atmospheric stock with AR(1) deviations, emissions are a
//! random walk with drift and AR(1) increments, and the stock follows the budget
//! identity with an AR(1) imbalance. In error-correction form
//!
//! ```text
//! A0 ΔY_t = intercept + soi_load·SOI_t + level_coef·Y_{t-1} + diff_coef·ΔY_{t-1} + ε_t
//! ```
//!
//! with `Y_t = (S^L, S^O, E, C)'`. Pre-multiplying by `A0⁻¹` gives a VECM with
//! rank-3 `Π = αβ'` and eleven free parameters in place of thirty-nine.

use std::fmt;

use nalgebra::{DMatrix, Matrix3x4, Matrix4, Matrix4x3, Vector4};
use serde::{Deserialize, Serialize};

use crate::data::AlignedDataset;
use crate::error::{Error, Result};

/// Number of structural parameters.
pub const N_THETA: usize = 11;

/// Parameter names in vector order.
pub const THETA_NAMES: [&str; N_THETA] = [
    "a1", "a2", "b1", "b2", "b3", "b4", "d", "phi1", "phi2", "phi3", "phi4",
];

/// Structural parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralTheta {
    /// Land-sink intercept, PgC/yr.
    pub a1: f64,
    /// Ocean-sink intercept, PgC/yr.
    pub a2: f64,
    /// Land-sink sensitivity to the atmospheric stock.
    pub b1: f64,
    /// Ocean-sink sensitivity to the atmospheric stock.
    pub b2: f64,
    /// Land-sink SOI loading, PgC/yr per index unit.
    pub b3: f64,
    /// Ocean-sink SOI loading.
    pub b4: f64,
    /// Emissions drift, PgC/yr².
    pub d: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub phi4: f64,
}

impl StructuralTheta {
    /// Maximum-likelihood estimate on the GCB 2023 release, 1959–2022 (four decimals).
    pub const GCB_1959_2022: StructuralTheta = StructuralTheta {
        a1: -5.0392,
        a2: -4.8127,
        b1: 0.0098,
        b2: 0.0089,
        b3: 0.5723,
        b4: -0.1086,
        d: 0.1076,
        phi1: 0.0923,
        phi2: 0.4841,
        phi3: -0.1169,
        phi4: 0.2810,
    };

    /// Standard errors accompanying [`StructuralTheta::GCB_1959_2022`], in vector order.
    pub const GCB_1959_2022_SE: [f64; N_THETA] = [
        1.1134, 0.2860, 0.0014, 0.0004, 0.1121, 0.0174, 0.0213, 0.1066, 0.0834, 0.1259, 0.1216,
    ];

    pub fn zeros() -> Self {
        Self::from_array([0.0; N_THETA])
    }

    pub fn to_array(&self) -> [f64; N_THETA] {
        [
            self.a1, self.a2, self.b1, self.b2, self.b3, self.b4, self.d, self.phi1, self.phi2,
            self.phi3, self.phi4,
        ]
    }

    pub fn from_array(v: [f64; N_THETA]) -> Self {
        StructuralTheta {
            a1: v[0],
            a2: v[1],
            b1: v[2],
            b2: v[3],
            b3: v[4],
            b4: v[5],
            d: v[6],
            phi1: v[7],
            phi2: v[8],
            phi3: v[9],
            phi4: v[10],
        }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let mut a = [0.0; N_THETA];
        a.copy_from_slice(&v[..N_THETA]);
        Self::from_array(a)
    }

    /// `c = 1 + b1 + b2`, the determinant of the concurrent-relations matrix.
    pub fn c(&self) -> f64 {
        1.0 + self.b1 + self.b2
    }

    pub fn phis(&self) -> [f64; 4] {
        [self.phi1, self.phi2, self.phi3, self.phi4]
    }

    /// Checks `|φ_j| < bound` and `c > c_min`.
    pub fn check_domain(&self, phi_bound: f64, c_min: f64) -> Result<()> {
        for (j, phi) in self.phis().iter().enumerate() {
            if !(phi.abs() < phi_bound) {
                return Err(Error::ParameterDomain(format!(
                    "|phi{}| = {} is not below {phi_bound}",
                    j + 1,
                    phi.abs()
                )));
            }
        }
        if !(self.c() > c_min) {
            return Err(Error::ParameterDomain(format!(
                "1 + b1 + b2 = {} is not above {c_min}",
                self.c()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for StructuralTheta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, v) in THETA_NAMES.iter().zip(self.to_array()) {
            writeln!(f, "{name:>5} {v:>10.4}")?;
        }
        Ok(())
    }
}

/// Coefficients of the structural error-correction system.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralSystem {
    /// Concurrent relations (left-hand matrix).
    pub a0: Matrix4<f64>,
    pub intercept: Vector4<f64>,
    pub soi_load: Vector4<f64>,
    /// Coefficients on `Y_{t-1}`.
    pub level_coef: Matrix4<f64>,
    /// Coefficients on `ΔY_{t-1}`.
    pub diff_coef: Matrix4<f64>,
    pub c: f64,
}

pub fn theta_to_structural(theta: &StructuralTheta) -> Result<StructuralSystem> {
    let c = theta.c();
    if !(c > 0.0) {
        return Err(Error::ParameterDomain(format!("1 + b1 + b2 = {c} must be positive")));
    }
    let StructuralTheta {
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
    } = *theta;
    #[rustfmt::skip]
    let a0 = Matrix4::new(
        1.0, 0.0,  0.0, -b1,
        0.0, 1.0,  0.0, -b2,
        0.0, 0.0,  1.0, 0.0,
        1.0, 1.0, -1.0, 1.0,
    );
    #[rustfmt::skip]
    let level_coef = Matrix4::new(
        -(1.0 - phi1), 0.0,           0.0,        b1 * (1.0 - phi1),
        0.0,           -(1.0 - phi2), 0.0,        b2 * (1.0 - phi2),
        0.0,           0.0,           0.0,        0.0,
        -(1.0 - phi4), -(1.0 - phi4), 1.0 - phi4, 0.0,
    );
    let mut diff_coef = Matrix4::zeros();
    diff_coef[(2, 2)] = phi3;
    diff_coef[(3, 3)] = phi4;
    Ok(StructuralSystem {
        a0,
        intercept: Vector4::new(a1 * (1.0 - phi1), a2 * (1.0 - phi2), d * (1.0 - phi3), 0.0),
        soi_load: Vector4::new(b3, b4, 0.0, 0.0),
        level_coef,
        diff_coef,
        c,
    })
}

/// Reduced-form VECM coefficients implied by a structural parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedForm {
    pub mu: Vector4<f64>,
    pub alpha: Matrix4x3<f64>,
    /// `β'`.
    pub beta_t: Matrix3x4<f64>,
    pub gamma1: Matrix4<f64>,
    pub phi_soi: Vector4<f64>,
    /// Maps structural errors ε_t to reduced-form errors U_t (equals `A0⁻¹`).
    pub error_rotation: Matrix4<f64>,
}

impl ReducedForm {
    pub fn pi(&self) -> Matrix4<f64> {
        self.alpha * self.beta_t
    }
}

/// Closed-form reduced form (no numerical inversion).
pub fn theta_to_reduced(theta: &StructuralTheta) -> Result<ReducedForm> {
    let c = theta.c();
    if !(c > 0.0) {
        return Err(Error::ParameterDomain(format!("1 + b1 + b2 = {c} must be positive")));
    }
    let StructuralTheta {
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
    } = *theta;
    let (q1, q2, q3, q4) = (1.0 - phi1, 1.0 - phi2, 1.0 - phi3, 1.0 - phi4);
    let mu = Vector4::new(
        a1 / c * q1 * (1.0 + b2) - b1 / c * (a2 * q2 - d * q3),
        a2 / c * q2 * (1.0 + b1) - b2 / c * (a1 * q1 - d * q3),
        d * q3,
        (d * q3 - a1 * q1 - a2 * q2) / c,
    );
    #[rustfmt::skip]
    let alpha = Matrix4x3::new(
        -(1.0 + b2) * q1 / c, b1 * q2 / c,          b1 * q4 / c,
        b2 * q1 / c,          -(1.0 + b1) * q2 / c, b2 * q4 / c,
        0.0,                  0.0,                  0.0,
        q1 / c,               q2 / c,               q4 / c,
    );
    #[rustfmt::skip]
    let beta_t = Matrix3x4::new(
        1.0,  0.0,  0.0, -b1,
        0.0,  1.0,  0.0, -b2,
        -1.0, -1.0, 1.0, 0.0,
    );
    #[rustfmt::skip]
    let gamma1 = Matrix4::new(
        0.0, 0.0, b1 * phi3 / c, b1 * phi4 / c,
        0.0, 0.0, b2 * phi3 / c, b2 * phi4 / c,
        0.0, 0.0, phi3,          0.0,
        0.0, 0.0, phi3 / c,      phi4 / c,
    );
    let phi_soi = Vector4::new(
        (b3 * (1.0 + b2) - b1 * b4) / c,
        (b4 * (1.0 + b1) - b2 * b3) / c,
        0.0,
        -(b3 + b4) / c,
    );
    #[rustfmt::skip]
    let error_rotation = Matrix4::new(
        (1.0 + b2) / c, -b1 / c,        b1 / c,  b1 / c,
        -b2 / c,        (1.0 + b1) / c, b2 / c,  b2 / c,
        0.0,            0.0,            1.0,     0.0,
        -1.0 / c,       -1.0 / c,       1.0 / c, 1.0 / c,
    );
    Ok(ReducedForm {
        mu,
        alpha,
        beta_t,
        gamma1,
        phi_soi,
        error_rotation,
    })
}

/// The regression data used by the structural likelihood, one entry per usable year.
///
/// With one lagged difference the first two years are conditioned on, so `T = n − 2`.
#[derive(Debug, Clone)]
pub struct StructuralData {
    pub years: Vec<i32>,
    pub dy: Vec<Vector4<f64>>,
    pub y_lag: Vec<Vector4<f64>>,
    pub dy_lag: Vec<Vector4<f64>>,
    pub soi: Vec<f64>,
}

impl StructuralData {
    pub fn new(dataset: &AlignedDataset) -> Result<Self> {
        let n = dataset.len();
        if n < 8 {
            return Err(Error::Sample(format!(
                "{n} observations are too few for the structural model"
            )));
        }
        let y = |t: usize| {
            Vector4::new(
                dataset.land_sink[t],
                dataset.ocean_sink[t],
                dataset.emissions[t],
                dataset.concentration[t],
            )
        };
        let mut out = StructuralData {
            years: vec![],
            dy: vec![],
            y_lag: vec![],
            dy_lag: vec![],
            soi: vec![],
        };
        for t in 2..n {
            out.years.push(dataset.years[t]);
            out.dy.push(y(t) - y(t - 1));
            out.y_lag.push(y(t - 1));
            out.dy_lag.push(y(t - 1) - y(t - 2));
            out.soi.push(dataset.soi[t]);
        }
        Ok(out)
    }

    pub fn t(&self) -> usize {
        self.dy.len()
    }

    /// Structural residual `ε_t` for row `i`.
    #[inline]
    pub(crate) fn epsilon(&self, sys: &StructuralSystem, i: usize) -> Vector4<f64> {
        sys.a0 * self.dy[i]
            - sys.intercept
            - sys.soi_load * self.soi[i]
            - sys.level_coef * self.y_lag[i]
            - sys.diff_coef * self.dy_lag[i]
    }

    /// Quasi-log-likelihood of the reduced-form residuals at `theta`.
    ///
    /// Uses `log det Σ_U = log det Σ_ε − 2 log c`, so no residual rotation is needed.
    pub fn loglik(&self, theta: &StructuralTheta) -> Result<f64> {
        let sys = theta_to_structural(theta)?;
        let mut s = Matrix4::zeros();
        for i in 0..self.t() {
            let e = self.epsilon(&sys, i);
            s += e * e.transpose();
        }
        let tf = self.t() as f64;
        s /= tf;
        let chol = s.cholesky().ok_or_else(|| {
            Error::NumericalRank("structural residual covariance is singular".into())
        })?;
        let ld_eps = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let ld_u = ld_eps - 2.0 * sys.c.ln();
        let p = 4.0;
        Ok(-0.5 * tf * p * (2.0 * std::f64::consts::PI).ln() - 0.5 * tf * ld_u - 0.5 * tf * p)
    }

    /// Reduced-form residuals with `Σ_U` held fixed, as per-observation log-density kernels.
    pub(crate) fn loglik_terms(&self, theta: &StructuralTheta, sigma_u_inv: &Matrix4<f64>) -> Result<Vec<f64>> {
        let sys = theta_to_structural(theta)?;
        let rot = theta_to_reduced(theta)?.error_rotation;
        Ok((0..self.t())
            .map(|i| {
                let u = rot * self.epsilon(&sys, i);
                -0.5 * (u.transpose() * sigma_u_inv * u)[(0, 0)]
            })
            .collect())
    }
}

/// Structural and reduced-form residuals.
#[derive(Debug, Clone)]
pub struct StructuralResiduals {
    pub years: Vec<i32>,
    /// `T × 4` structural residuals `ε̂_t`.
    pub eps: DMatrix<f64>,
    /// `T × 4` reduced-form residuals `Û_t = A0⁻¹ ε̂_t`.
    pub u: DMatrix<f64>,
}

pub fn structural_residuals(theta: &StructuralTheta, dataset: &AlignedDataset) -> Result<StructuralResiduals> {
    let data = StructuralData::new(dataset)?;
    residuals_from_data(theta, &data)
}

pub(crate) fn residuals_from_data(theta: &StructuralTheta, data: &StructuralData) -> Result<StructuralResiduals> {
    let sys = theta_to_structural(theta)?;
    let rot = theta_to_reduced(theta)?.error_rotation;
    let t = data.t();
    let mut eps = DMatrix::zeros(t, 4);
    let mut u = DMatrix::zeros(t, 4);
    for i in 0..t {
        let e = data.epsilon(&sys, i);
        let ui = rot * e;
        for j in 0..4 {
            eps[(i, j)] = e[j];
            u[(i, j)] = ui[j];
        }
    }
    Ok(StructuralResiduals {
        years: data.years.clone(),
        eps,
        u,
    })
}
