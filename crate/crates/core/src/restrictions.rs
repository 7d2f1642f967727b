//! Likelihood-ratio tests of zero rows in β (variable exclusion) and in α (weak
//! exogeneity) within the unrestricted VECM.
//!
//! Both hypotheses have closed-form restricted estimators: the restricted model is
//! again a reduced-rank regression, in a transformed system.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cvar::{concentrate, rrr_eigen, Moments, VecmSpec};
use crate::data::AlignedDataset;
use crate::dist::chi2_sf;
use crate::error::{Error, Result};
use crate::linalg::{log_det_spd, moment, ols};

/// The four system variables, in model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variable {
    LandSink,
    OceanSink,
    Emissions,
    Concentration,
}

impl Variable {
    pub const ALL: [Variable; 4] = [
        Variable::LandSink,
        Variable::OceanSink,
        Variable::Emissions,
        Variable::Concentration,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Variable::LandSink => "S^L",
            Variable::OceanSink => "S^O",
            Variable::Emissions => "E",
            Variable::Concentration => "C",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['^', '_', '-'], "").as_str() {
            "sl" | "land" | "landsink" => Ok(Variable::LandSink),
            "so" | "ocean" | "oceansink" => Ok(Variable::OceanSink),
            "e" | "emissions" => Ok(Variable::Emissions),
            "c" | "concentration" | "concentrations" => Ok(Variable::Concentration),
            _ => Err(Error::InvalidSpec(format!("unknown variable `{s}`"))),
        }
    }
}

/// Outcome of a likelihood-ratio test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrTestResult {
    pub hypothesis: String,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub restricted_loglik: f64,
    pub unrestricted_loglik: f64,
}

impl LrTestResult {
    /// Builds the result from the two log-likelihoods; tiny negative statistics from
    /// rounding are set to zero.
    pub fn from_logliks(
        hypothesis: impl Into<String>,
        restricted_loglik: f64,
        unrestricted_loglik: f64,
        df: usize,
    ) -> Self {
        let raw = -2.0 * (restricted_loglik - unrestricted_loglik);
        let statistic = if raw < 0.0 && raw > -1e-8 { 0.0 } else { raw };
        LrTestResult {
            hypothesis: hypothesis.into(),
            statistic,
            df,
            p_value: chi2_sf(statistic, df as f64),
            restricted_loglik,
            unrestricted_loglik,
        }
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

fn gaussian_constant(t: usize, p: usize) -> f64 {
    let (tf, pf) = (t as f64, p as f64);
    -0.5 * tf * pf * (2.0 * std::f64::consts::PI).ln() - 0.5 * tf * pf
}

fn unrestricted_loglik(m: &Moments, rank: usize) -> Result<f64> {
    let eig = rrr_eigen(&m.s00, &m.s01, &m.s11)?;
    let sum: f64 = eig.values[..rank].iter().map(|l| (1.0 - l).ln()).sum();
    Ok(gaussian_constant(m.t, m.p) - 0.5 * m.t as f64 * (log_det_spd(&m.s00)? + sum))
}

fn check_rows(p: usize, rank: usize, rows: &[usize]) -> Result<()> {
    if let Some(&bad) = rows.iter().find(|&&j| j >= p) {
        return Err(Error::InvalidSpec(format!("row {bad} out of range for dimension {p}")));
    }
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != rows.len() {
        return Err(Error::InvalidSpec("duplicate restricted rows".into()));
    }
    if rank > p - rows.len() {
        return Err(Error::InvalidSpec(format!(
            "rank {rank} leaves no room for {} zero rows",
            rows.len()
        )));
    }
    Ok(())
}

fn selector(p: usize, keep: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(p, keep.len(), |i, j| if keep[j] == i { 1.0 } else { 0.0 })
}

fn complement(p: usize, rows: &[usize]) -> Vec<usize> {
    (0..p).filter(|j| !rows.contains(j)).collect()
}

/// Test of `β_j = 0` for every `j` in `rows`, i.e. `β = Hφ` with `H` selecting the other variables.
pub fn exclusion_test_rows(m: &Moments, rank: usize, rows: &[usize]) -> Result<LrTestResult> {
    check_rows(m.p, rank, rows)?;
    let h = selector(m.p, &complement(m.p, rows));
    let s01h = &m.s01 * &h;
    let s11h = h.transpose() * &m.s11 * &h;
    let eig = rrr_eigen(&m.s00, &s01h, &s11h)?;
    let sum: f64 = eig.values[..rank].iter().map(|l| (1.0 - l).ln()).sum();
    let restricted = gaussian_constant(m.t, m.p) - 0.5 * m.t as f64 * (log_det_spd(&m.s00)? + sum);
    let unrestricted = unrestricted_loglik(m, rank)?;
    Ok(LrTestResult::from_logliks(
        format!("zero rows {rows:?} in beta"),
        restricted,
        unrestricted,
        rank * rows.len(),
    ))
}

/// Test of `α_j = 0` for every `j` in `rows`, i.e. `α = Aψ` with `A` selecting the other equations.
///
/// The equations of the restricted variables are conditioned on, and the remaining
/// system is a reduced-rank regression given them.
pub fn weak_exogeneity_test_rows(m: &Moments, rank: usize, rows: &[usize]) -> Result<LrTestResult> {
    check_rows(m.p, rank, rows)?;
    let a = selector(m.p, &complement(m.p, rows));
    let b = selector(m.p, rows);
    let r0a = &m.r0 * &a;
    let r0b = &m.r0 * &b;
    let (_, ra) = ols(&r0a, &r0b)?;
    let (_, r1) = ols(&m.r1, &r0b)?;
    let saa = moment(&ra, &ra);
    let sa1 = moment(&ra, &r1);
    let s11 = moment(&r1, &r1);
    let eig = rrr_eigen(&saa, &sa1, &s11)?;
    let sum: f64 = eig.values[..rank].iter().map(|l| (1.0 - l).ln()).sum();
    let ld_bb = if rows.is_empty() {
        0.0
    } else {
        log_det_spd(&moment(&r0b, &r0b))?
    };
    let restricted =
        gaussian_constant(m.t, m.p) - 0.5 * m.t as f64 * (ld_bb + log_det_spd(&saa)? + sum);
    let unrestricted = unrestricted_loglik(m, rank)?;
    Ok(LrTestResult::from_logliks(
        format!("zero rows {rows:?} in alpha"),
        restricted,
        unrestricted,
        rank * rows.len(),
    ))
}

pub fn exclusion_test(dataset: &AlignedDataset, spec: VecmSpec, variable: Variable) -> Result<LrTestResult> {
    let m = concentrate(dataset, spec)?;
    let mut r = exclusion_test_rows(&m, spec.rank, &[variable.index()])?;
    r.hypothesis = format!("exclusion of {variable}");
    Ok(r)
}

pub fn weak_exogeneity_test(
    dataset: &AlignedDataset,
    spec: VecmSpec,
    variable: Variable,
) -> Result<LrTestResult> {
    let m = concentrate(dataset, spec)?;
    let mut r = weak_exogeneity_test_rows(&m, spec.rank, &[variable.index()])?;
    r.hypothesis = format!("weak exogeneity of {variable}");
    Ok(r)
}

/// LR test of `Γ₁ = 0` in a model with one lagged difference.
///
/// The model without the lag is estimated on the same effective sample.
pub fn lag_significance_test(dataset: &AlignedDataset, spec: VecmSpec) -> Result<LrTestResult> {
    if spec.lags != 1 {
        return Err(Error::InvalidSpec("the lag test needs a model with k = 1".into()));
    }
    let full = concentrate(dataset, spec)?;
    let unrestricted = loglik_at_rank(&full, spec.rank)?;
    let trimmed = dataset.window(dataset.first_year() + 1, dataset.last_year())?;
    let short = concentrate(&trimmed, VecmSpec { lags: 0, ..spec })?;
    debug_assert_eq!(short.t, full.t);
    let restricted = loglik_at_rank(&short, spec.rank)?;
    Ok(LrTestResult::from_logliks(
        "no lagged differences",
        restricted,
        unrestricted,
        full.p * full.p,
    ))
}

fn loglik_at_rank(m: &Moments, rank: usize) -> Result<f64> {
    let eig = crate::cvar::johansen_eigen(m)?;
    crate::cvar::loglik_from_eigen(m, &eig.values, rank)
}

/// Exclusion and weak-exogeneity results for one variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableTests {
    pub variable: Variable,
    pub exclusion: LrTestResult,
    pub weak_exogeneity: LrTestResult,
}

/// Both tests for every variable, sharing one concentration step.
pub fn all_variable_tests(dataset: &AlignedDataset, spec: VecmSpec) -> Result<Vec<VariableTests>> {
    let m = concentrate(dataset, spec)?;
    Variable::ALL
        .iter()
        .map(|&v| {
            let mut exclusion = exclusion_test_rows(&m, spec.rank, &[v.index()])?;
            exclusion.hypothesis = format!("exclusion of {v}");
            let mut weak_exogeneity = weak_exogeneity_test_rows(&m, spec.rank, &[v.index()])?;
            weak_exogeneity.hypothesis = format!("weak exogeneity of {v}");
            Ok(VariableTests {
                variable: v,
                exclusion,
                weak_exogeneity,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_names_parse() {
        assert_eq!("S^L".parse::<Variable>().unwrap(), Variable::LandSink);
        assert_eq!("sO".parse::<Variable>().unwrap(), Variable::OceanSink);
        assert_eq!("E".parse::<Variable>().unwrap(), Variable::Emissions);
        assert_eq!("concentration".parse::<Variable>().unwrap(), Variable::Concentration);
        assert!("temperature".parse::<Variable>().is_err());
    }

    #[test]
    fn statistic_is_minus_twice_loglik_difference() {
        let r = LrTestResult::from_logliks("h", -45.908, -30.217, 28);
        assert!((r.statistic - 31.382).abs() < 1e-9);
        assert!((r.p_value - 0.30038164384234434).abs() < 1e-9);
        let same = LrTestResult::from_logliks("h", -1.0, -1.0, 3);
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
    }

    #[test]
    fn lag_test_uses_common_sample() {
        let ds = crate::simulate::VecmDgp::canonical(3, 0.4).simulate(120, 9).unwrap();
        let r = lag_significance_test(&ds, VecmSpec::new(3, 1, true)).unwrap();
        assert_eq!(r.df, 16);
        assert!(r.statistic >= 0.0);
        assert!(lag_significance_test(&ds, VecmSpec::new(3, 0, true)).is_err());
    }
}
