//! Standard normal density and distribution function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(x)` through the complementary error function.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Φ(x)`, accurate deep into the lower tail.
#[inline]
pub fn log_cdf(x: f64) -> f64 {
    if x > -35.0 {
        if x > 5.0 {
            // Φ(x) = 1 - Q(x) with Q tiny
            libm::log1p(-0.5 * libm::erfc(x * FRAC_1_SQRT_2))
        } else {
            cdf(x).ln()
        }
    } else {
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - (-x).ln() - LN_SQRT_2PI + series.ln()
    }
}

/// Inverse Mills ratio `φ(x) / Φ(x)`.
#[inline]
pub fn mills(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI - log_cdf(x)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((cdf(1.96) - 0.975_002_104_851_780_1).abs() < 1e-14);
        assert!((pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
        // ln Φ(-10) = ln(7.619853024160527e-24)
        assert!((log_cdf(-10.0) - (7.619_853_024_160_527e-24f64).ln()).abs() < 1e-10);
    }

    #[test]
    fn log_cdf_is_continuous_across_branches() {
        for x in [-35.0f64, 5.0] {
            let below = log_cdf(x - 1e-9);
            let above = log_cdf(x + 1e-9);
            assert!((below - above).abs() < 1e-6 * below.abs().max(1e-12), "{x}: {below} vs {above}");
        }
    }

    #[test]
    fn log_cdf_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..2000 {
            let x = -60.0 + i as f64 * 0.05;
            let v = log_cdf(x);
            assert!(v >= prev && v <= 0.0);
            prev = v;
        }
    }
}
