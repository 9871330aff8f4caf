//! Small estimation helpers shared by the Monte Carlo procedures.

/// Two-sided z for a 95% interval.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for a binomial proportion.
pub fn wilson_bounds(successes: u64, samples: u64, z: f64) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 1.0);
    }
    let n = samples as f64;
    let p_hat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p_hat + z2 / (2.0 * n);
    let rad = z * ((p_hat * (1.0 - p_hat)) / n + z2 / (4.0 * n * n)).sqrt();
    (((center - rad) / denom).max(0.0), ((center + rad) / denom).min(1.0))
}

/// Standard error of an empirical proportion.
pub fn proportion_se(p_hat: f64, samples: u64) -> f64 {
    if samples == 0 {
        return f64::INFINITY;
    }
    (p_hat * (1.0 - p_hat) / samples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_basic_shape() {
        let (lo, hi) = wilson_bounds(50, 100, Z95);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(hi - lo < 0.25);
        let (lo0, hi0) = wilson_bounds(0, 100, Z95);
        assert!(lo0.abs() < 1e-12);
        assert!(hi0 > 0.0 && hi0 < 0.08);
        let (lo1, hi1) = wilson_bounds(100, 100, Z95);
        assert!(lo1 > 0.92);
        assert_eq!(hi1, 1.0);
    }

    #[test]
    fn wilson_tightens_with_samples() {
        let (lo_a, hi_a) = wilson_bounds(10, 20, Z95);
        let (lo_b, hi_b) = wilson_bounds(1000, 2000, Z95);
        assert!(hi_b - lo_b < hi_a - lo_a);
    }
}
