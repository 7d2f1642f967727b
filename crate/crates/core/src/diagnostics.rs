//! Residual diagnostics: moments, Jarque-Bera, Ljung-Box and their system versions.
//!
//! Kurtosis is raw (3 under normality). Standard deviations use the `1/T` divisor,
//! consistent with the likelihood's covariance estimate.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dist::chi2_sf;
use crate::error::{Error, Result};
use crate::linalg::{column_means, inverse_spd};

/// A test statistic with its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStat {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl TestStat {
    fn chi2(statistic: f64, df: usize) -> Self {
        TestStat {
            statistic,
            df,
            p_value: chi2_sf(statistic, df as f64),
        }
    }
}

/// Sample mean, standard deviation, skewness and raw kurtosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn sample_moments(series: &[f64]) -> Result<SampleMoments> {
    let n = series.len() as f64;
    if series.is_empty() {
        return Err(Error::DegenerateInput("empty series".into()));
    }
    let mean = series.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if !(m2 > f64::EPSILON * f64::EPSILON * (1.0 + mean * mean)) {
        return Err(Error::DegenerateInput("series has zero variance".into()));
    }
    Ok(SampleMoments {
        mean,
        std_dev: m2.sqrt(),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Jarque-Bera normality test, `T(S²/6 + (K−3)²/24)` against χ²(2).
pub fn jarque_bera(series: &[f64]) -> Result<TestStat> {
    if series.len() < 8 {
        return Err(Error::Sample(format!(
            "Jarque-Bera needs at least 8 observations, got {}",
            series.len()
        )));
    }
    let m = sample_moments(series)?;
    let n = series.len() as f64;
    let jb = n * (m.skewness.powi(2) / 6.0 + (m.kurtosis - 3.0).powi(2) / 24.0);
    Ok(TestStat::chi2(jb, 2))
}

/// Sample autocorrelations at lags `1..=max_lag`.
pub fn autocorrelations(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum();
    if !(c0 > 0.0) {
        return Err(Error::DegenerateInput("series has zero variance".into()));
    }
    Ok((1..=max_lag)
        .map(|j| dev[j..].iter().zip(&dev[..n - j]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// Ljung-Box portmanteau test up to `lags`, against χ²(lags).
pub fn ljung_box(series: &[f64], lags: usize) -> Result<TestStat> {
    let n = series.len();
    if lags == 0 {
        return Ok(TestStat {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
        });
    }
    if 2 * lags >= n {
        return Err(Error::Sample(format!(
            "Ljung-Box with {lags} lags needs more than {} observations",
            2 * lags
        )));
    }
    let rho = autocorrelations(series, lags)?;
    let nf = n as f64;
    let q = nf
        * (nf + 2.0)
        * rho
            .iter()
            .enumerate()
            .map(|(i, r)| r * r / (nf - (i + 1) as f64))
            .sum::<f64>();
    Ok(TestStat::chi2(q, lags))
}

fn check_system(residuals: &DMatrix<f64>) -> Result<()> {
    let (t, p) = residuals.shape();
    if p == 0 || t <= p + 8 {
        return Err(Error::Sample(format!(
            "system tests need more than p + 8 = {} observations, got {t}",
            p + 8
        )));
    }
    Ok(())
}

fn centered_covariance(residuals: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = residuals.nrows() as f64;
    let means = column_means(residuals);
    let centered = DMatrix::from_fn(residuals.nrows(), residuals.ncols(), |i, j| {
        residuals[(i, j)] - means[j]
    });
    let cov = centered.transpose() * &centered / t;
    (centered, cov)
}

/// Transformed skewness of a standard normal sample (D'Agostino).
fn skewness_z(skew: f64, n: f64) -> f64 {
    let beta = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0)
        / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    let w2 = -1.0 + (2.0 * (beta - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let y = skew * ((w2 - 1.0) * (n + 1.0) * (n + 3.0) / (12.0 * (n - 2.0))).sqrt();
    delta * (y + (y * y + 1.0).sqrt()).ln()
}

/// Transformed kurtosis given the squared skewness (gamma / Wilson-Hilferty).
fn kurtosis_z(kurt: f64, skew_sq: f64, n: f64) -> f64 {
    let delta = (n - 3.0) * (n + 1.0) * (n * n + 15.0 * n - 4.0);
    let a = (n - 2.0) * (n + 5.0) * (n + 7.0) * (n * n + 27.0 * n - 70.0) / (6.0 * delta);
    let c = (n - 7.0) * (n + 5.0) * (n + 7.0) * (n * n + 2.0 * n - 5.0) / (6.0 * delta);
    let k = (n + 5.0) * (n + 7.0) * (n * n * n + 37.0 * n * n + 11.0 * n - 313.0) / (12.0 * delta);
    let alpha = a + skew_sq * c;
    let chi = (kurt - 1.0 - skew_sq) * 2.0 * k;
    ((chi / (2.0 * alpha)).cbrt() - 1.0 + 1.0 / (9.0 * alpha)) * (9.0 * alpha).sqrt()
}

/// Doornik-Hansen omnibus normality test on orthogonalised residuals, against χ²(2p).
pub fn system_normality(residuals: &DMatrix<f64>) -> Result<TestStat> {
    check_system(residuals)?;
    let (t, p) = residuals.shape();
    let (centered, cov) = centered_covariance(residuals);
    let sd: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    if sd.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Conditioning("a residual series has zero variance".into()));
    }
    let corr = DMatrix::from_fn(p, p, |i, j| cov[(i, j)] / (sd[i] * sd[j]));
    let eig = corr.symmetric_eigen();
    let min_ev = eig.eigenvalues.min();
    if !(min_ev > 1e-10) {
        return Err(Error::Conditioning(format!(
            "residual correlation matrix is singular (smallest eigenvalue {min_ev:e})"
        )));
    }
    let h = &eig.eigenvectors;
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let transform = h * inv_sqrt * h.transpose();
    let scaled = DMatrix::from_fn(t, p, |i, j| centered[(i, j)] / sd[j]);
    let y = scaled * transform;
    let n = t as f64;
    let mut stat = 0.0;
    for col in y.column_iter() {
        let v: Vec<f64> = col.iter().copied().collect();
        let m = sample_moments(&v)?;
        let z1 = skewness_z(m.skewness, n);
        let z2 = kurtosis_z(m.kurtosis, m.skewness * m.skewness, n);
        stat += z1 * z1 + z2 * z2;
    }
    Ok(TestStat::chi2(stat, 2 * p))
}

/// Hosking multivariate portmanteau statistic up to `lags`, with degrees of freedom
/// `p²(lags − fitted_lags)`.
pub fn system_portmanteau(residuals: &DMatrix<f64>, lags: usize, fitted_lags: usize) -> Result<TestStat> {
    if lags == 0 {
        return Ok(TestStat {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
        });
    }
    check_system(residuals)?;
    let (t, p) = residuals.shape();
    if lags <= fitted_lags || 2 * lags >= t {
        return Err(Error::Sample(format!(
            "portmanteau with {lags} lags is undefined for {fitted_lags} fitted lags and {t} observations"
        )));
    }
    let (centered, c0) = centered_covariance(residuals);
    let c0_inv = inverse_spd(&c0)
        .map_err(|_| Error::Conditioning("residual covariance matrix is singular".into()))?;
    let tf = t as f64;
    let mut q = 0.0;
    for j in 1..=lags {
        let lead = centered.rows(j, t - j);
        let lag = centered.rows(0, t - j);
        let cj = lead.transpose() * lag / tf;
        let term = cj.transpose() * &c0_inv * &cj * &c0_inv;
        q += term.trace() / (tf - j as f64);
    }
    q *= tf * tf;
    Ok(TestStat::chi2(q, p * p * (lags - fitted_lags)))
}

/// One equation's diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub label: String,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub jb_p: f64,
    pub lb5_p: f64,
    pub lb10_p: f64,
}

/// System-wide p-values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemRow {
    pub jb_p: f64,
    pub lb5_p: f64,
    pub lb10_p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsTable {
    pub title: String,
    pub rows: Vec<DiagnosticsRow>,
    pub system: SystemRow,
}

/// Per-equation and system diagnostics for a `T × p` residual matrix.
///
/// `fitted_lags` is the number of lagged differences in the model that produced
/// the residuals, used for the system portmanteau degrees of freedom.
pub fn diagnostics_table(
    title: impl Into<String>,
    residuals: &DMatrix<f64>,
    labels: &[&str],
    fitted_lags: usize,
) -> Result<DiagnosticsTable> {
    if residuals.ncols() != labels.len() {
        return Err(Error::InvalidSpec(format!(
            "{} labels for {} residual columns",
            labels.len(),
            residuals.ncols()
        )));
    }
    if residuals.nrows() == 0 {
        return Err(Error::DegenerateInput("no residuals".into()));
    }
    let mut rows = Vec::with_capacity(labels.len());
    for (j, label) in labels.iter().enumerate() {
        let col: Vec<f64> = residuals.column(j).iter().copied().collect();
        let m = sample_moments(&col)
            .map_err(|e| Error::DegenerateInput(format!("{label}: {e}")))?;
        rows.push(DiagnosticsRow {
            label: label.to_string(),
            std_dev: m.std_dev,
            skewness: m.skewness,
            kurtosis: m.kurtosis,
            jb_p: jarque_bera(&col)?.p_value,
            lb5_p: ljung_box(&col, 5)?.p_value,
            lb10_p: ljung_box(&col, 10)?.p_value,
        });
    }
    let system = SystemRow {
        jb_p: system_normality(residuals)?.p_value,
        lb5_p: system_portmanteau(residuals, 5, fitted_lags)?.p_value,
        lb10_p: system_portmanteau(residuals, 10, fitted_lags)?.p_value,
    };
    Ok(DiagnosticsTable {
        title: title.into(),
        rows,
        system,
    })
}

impl fmt::Display for DiagnosticsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        writeln!(
            f,
            "{:<10}{:>9}{:>9}{:>9}{:>8}{:>8}{:>8}",
            "Variable", "Std Dev", "Skew", "Kurt", "JB", "LB(5)", "LB(10)"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10}{:>9.3}{:>9.3}{:>9.3}{:>8.3}{:>8.3}{:>8.3}",
                r.label, r.std_dev, r.skewness, r.kurtosis, r.jb_p, r.lb5_p, r.lb10_p
            )?;
        }
        write!(
            f,
            "{:<10}{:>9}{:>9}{:>9}{:>8.3}{:>8.3}{:>8.3}",
            "System", "", "", "", self.system.jb_p, self.system.lb5_p, self.system.lb10_p
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jarque_bera_matches_hand_computation() {
        let x = [1.2, -0.7, 3.1, 0.4, -2.2, 0.9, 1.7, -0.3, 0.0, 2.6];
        // Oracle: central moments computed directly.
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let m = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
        let s = m(3) / m(2).powf(1.5);
        let k = m(4) / m(2).powi(2);
        let want = n / 6.0 * (s * s + (k - 3.0).powi(2) / 4.0);
        let got = jarque_bera(&x).unwrap();
        assert!((got.statistic - want).abs() < 1e-12);
        assert_eq!(got.df, 2);
    }

    #[test]
    fn symmetric_mesokurtic_sample_has_zero_jb() {
        // {±1, ±1, ±1, ±x} has kurtosis 3 when x⁴ − 18x² − 15 = 0.
        let x2 = 9.0 + 96.0_f64.sqrt();
        let x = x2.sqrt();
        let data = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, x, -x];
        let jb = jarque_bera(&data).unwrap();
        assert!(jb.statistic.abs() < 1e-12, "{}", jb.statistic);
        assert!((jb.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ljung_box_matches_brute_force() {
        let x = [0.3, -1.1, 0.8, 2.0, -0.4, 0.1, -1.7, 0.9, 1.2, -0.6, 0.5, -0.2];
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let c = |j: usize| -> f64 {
            (j..n).map(|t| (x[t] - mean) * (x[t - j] - mean)).sum::<f64>()
        };
        let nf = n as f64;
        let want = nf * (nf + 2.0) * ((c(1) / c(0)).powi(2) / (nf - 1.0) + (c(2) / c(0)).powi(2) / (nf - 2.0));
        let got = ljung_box(&x, 2).unwrap();
        assert!((got.statistic - want).abs() < 1e-12);
    }

    #[test]
    fn ljung_box_zero_lags() {
        let got = ljung_box(&[1.0, 2.0, 3.0], 0).unwrap();
        assert_eq!(got.statistic, 0.0);
        assert_eq!(got.p_value, 1.0);
    }

    #[test]
    fn ljung_box_zero_autocorrelation_series() {
        // Period-4 pattern (1, 0, −1, 0): lag-1 and lag-3 products vanish, lag-2 does not,
        // so use m = 1 where ρ̂₁ = 0 exactly.
        let x: Vec<f64> = (0..16).map(|t| [1.0, 0.0, -1.0, 0.0][t % 4]).collect();
        let got = ljung_box(&x, 1).unwrap();
        assert!(got.statistic.abs() < 1e-14);
        assert!((got.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        assert!(matches!(jarque_bera(&[2.0; 10]), Err(Error::DegenerateInput(_))));
        let r = diagnostics_table("t", &DMatrix::zeros(30, 2), &["a", "b"], 0);
        assert!(matches!(r, Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn duplicated_column_is_singular() {
        let mut r = crate::simulate::white_noise(50, 3, 1);
        let c0 = r.column(0).into_owned();
        r.set_column(2, &c0);
        assert!(matches!(system_normality(&r), Err(Error::Conditioning(_))));
        assert!(matches!(system_portmanteau(&r, 5, 0), Err(Error::Conditioning(_))));
    }

    #[test]
    fn portmanteau_zero_lags() {
        let r = crate::simulate::white_noise(50, 3, 2);
        let s = system_portmanteau(&r, 0, 0).unwrap();
        assert_eq!((s.statistic, s.p_value), (0.0, 1.0));
    }

    #[test]
    fn portmanteau_is_scaled_ljung_box_in_one_dimension() {
        let r = crate::simulate::white_noise(80, 1, 3);
        let col: Vec<f64> = r.column(0).iter().copied().collect();
        let lb = ljung_box(&col, 5).unwrap();
        let hq = system_portmanteau(&r, 5, 0).unwrap();
        assert!((lb.statistic * 80.0 / 82.0 - hq.statistic).abs() < 1e-10);
    }
}
