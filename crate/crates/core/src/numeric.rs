//! Log-space arithmetic used by the lifted-volume and weight computations.
//!
//! Lifted ball volumes involve powers `(R - d)^N` with `N` in the tens, which
//! overflow or underflow plain doubles long before the ratios we care about
//! lose meaning. Everything here works on natural logarithms.

/// `log(sum(exp(x_i)))`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(log_values: &[f64]) -> f64 {
    let max = log_values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = log_values.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Streaming accumulator for `log(sum(exp(x_i)))`.
///
/// Rescales whenever a larger term arrives, so one pass suffices.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled_sum += (x - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}

/// `log(exp(a) - exp(b))` for `a >= b`; `-inf` when the two are equal.
///
/// Uses `e^a - e^b = e^a (1 - e^(b - a))` with `expm1` so that nearly equal
/// arguments keep their relative precision.
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b || a.is_nan() || b.is_nan(), "log_diff_exp requires a >= b");
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// `log(n!)` by direct summation; exact enough for the lift dimensions in use.
pub fn log_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [-1.0, -2.0, -3.0];
        let direct = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_empty_and_neg_inf() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn log_sum_exp_handles_large_exponents() {
        let xs = [1000.0, 1000.0];
        assert!((log_sum_exp(&xs) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn streaming_agrees_with_batch() {
        let xs = [3.0, -7.5, 12.25, 12.0, f64::NEG_INFINITY, 0.0];
        let mut acc = LogSumExp::new();
        for &x in &xs {
            acc.push(x);
        }
        assert!((acc.value() - log_sum_exp(&xs)).abs() < 1e-13);
    }

    #[test]
    fn log_diff_exp_cases() {
        let v = log_diff_exp(3f64.ln(), 1f64.ln());
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_diff_exp(1.0, 1.0), f64::NEG_INFINITY);
        assert_eq!(log_diff_exp(1.5, f64::NEG_INFINITY), 1.5);
        // nearly equal arguments keep relative precision
        let v = log_diff_exp(1e-12, 0.0);
        assert!((v.exp() / 1e-12 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn log_factorial_small() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert!((log_factorial(5) - 120f64.ln()).abs() < 1e-13);
    }
}
