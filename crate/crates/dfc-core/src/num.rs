//! Float helpers routed through `libm` so the core stays `no_std`.

/// Natural exponential.
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Natural logarithm.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// Square root.
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Round toward negative infinity.
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Absolute value.
#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Numerically stable log-sum-exp over a slice of logits.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = logits.iter().map(|&z| exp(z - max)).sum();
    max + ln(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_evaluation() {
        let logits = [1.0, 0.0, -2.0];
        let direct = ln(exp(1.0) + exp(0.0) + exp(-2.0));
        assert!(abs(log_sum_exp(&logits) - direct) < 1e-12);
    }

    #[test]
    fn log_sum_exp_is_shift_invariant() {
        let a = [0.3, -1.2, 2.5];
        let b = [100.3, 98.8, 102.5];
        assert!(abs((log_sum_exp(&b) - 100.0) - log_sum_exp(&a)) < 1e-9);
    }
}
