//! Reference distributions for test p-values.

use statrs::function::gamma::gamma_ur;

/// Upper tail probability of a χ²(df) variate, `P(X > x)`.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Upper tail of a gamma distribution parameterised by mean and variance.
pub fn gamma_sf_mean_var(x: f64, mean: f64, var: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let shape = mean * mean / var;
    let scale = var / mean;
    gamma_ur(shape, x / scale).clamp(0.0, 1.0)
}

/// Standard normal upper tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}
