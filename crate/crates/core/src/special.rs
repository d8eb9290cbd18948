//! Special functions used by the population-risk oracles and moment bounds.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// √(2/π) = E|Z| for a standard normal Z.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// E|Z|^p for a standard normal Z: 2^{p/2} Γ((p+1)/2) / √π.
pub fn normal_abs_moment(p: f64) -> f64 {
    libm::exp(0.5 * p * core::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0))) / libm::sqrt(PI)
}

/// E‖Z‖₂^p for a standard normal vector in `dim` dimensions:
/// 2^{p/2} Γ((d+p)/2) / Γ(d/2).
pub fn chi_abs_moment(dim: usize, p: f64) -> f64 {
    let d = dim as f64;
    libm::exp(0.5 * p * core::f64::consts::LN_2 + ln_gamma(0.5 * (d + p)) - ln_gamma(0.5 * d))
}

/// Log-density of Student's t with `nu` degrees of freedom.
pub fn student_t_ln_pdf(x: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * libm::log(nu * PI)
        - 0.5 * (nu + 1.0) * libm::log1p(x * x / nu)
}

/// E|a − e| − E|e| for e ~ N(0, 1): a(2Φ(a) − 1) + 2φ(a) − 2φ(0).
pub fn gaussian_abs_shift(a: f64) -> f64 {
    a * (2.0 * normal_cdf(a) - 1.0) + 2.0 * (normal_pdf(a) - normal_pdf(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_moments() {
        assert!((normal_abs_moment(1.0) - SQRT_2_OVER_PI).abs() < 1e-15);
        assert!((normal_abs_moment(2.0) - 1.0).abs() < 1e-14);
        // mpmath: 2^{0.75} Γ(1.25) / √π
        assert!((normal_abs_moment(1.5) - 0.860_039_987_324_519_5).abs() < 1e-14);
        // E‖Z‖² = d
        assert!((chi_abs_moment(3, 2.0) - 3.0).abs() < 1e-13);
        assert!((chi_abs_moment(1, 1.0) - SQRT_2_OVER_PI).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
    }

    #[test]
    fn shift_function_is_nonnegative_and_quadratic_at_zero() {
        assert_eq!(gaussian_abs_shift(0.0), 0.0);
        let a = 1e-3;
        assert!((gaussian_abs_shift(a) / (a * a) - normal_pdf(0.0)).abs() < 1e-5);
        for k in 1..50 {
            assert!(gaussian_abs_shift(k as f64 * 0.2) > 0.0);
        }
    }
}
