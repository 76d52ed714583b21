//! Scalar helpers shared by the estimators.

#[allow(unused_imports)]
use num_traits::Float;

/// `x ln x`, extended by continuity with `Λ(0) = 0`.
#[inline]
pub fn lambda(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    -lambda(p) - lambda(1.0 - p)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    x.ln()
}

#[inline]
pub fn exp(x: f64) -> f64 {
    x.exp()
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// `ln n!` by direct summation (arguments here are small).
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn scale(&mut self, f: f64) {
        self.sum *= f;
        self.comp *= f;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Streaming log-sum-exp with compensated summation.
///
/// Holds `Σ exp(x_i)` as `exp(shift) * sum`; the shift follows the running
/// maximum so every stored term is at most one.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    shift: f64,
    sum: KahanSum,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            sum: KahanSum::default(),
        }
    }
}

impl LogSumExp {
    /// Adds `exp(x)`. Returns the factor by which previously stored terms were
    /// rescaled, so callers keeping parallel accumulators can follow along.
    pub fn add(&mut self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 1.0;
        }
        let mut rescale = 1.0;
        if x > self.shift {
            if self.shift.is_finite() {
                rescale = (self.shift - x).exp();
                self.sum.scale(rescale);
            } else {
                rescale = 0.0;
            }
            self.shift = x;
        }
        self.sum.add((x - self.shift).exp());
        rescale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Scaled weight `exp(x - shift)` of a term already added.
    pub fn relative(&self, x: f64) -> f64 {
        (x - self.shift).exp()
    }

    pub fn ln(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.shift + self.sum.value().ln()
        }
    }
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogSumExp::default();
    for x in xs {
        acc.add(x);
    }
    acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_at_zero_is_zero() {
        assert_eq!(lambda(0.0), 0.0);
        assert!((lambda(2.0) - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn entropy_of_fair_coin() {
        assert!((binary_entropy(0.5) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_handles_wide_range() {
        let v = log_sum_exp([-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = log_sum_exp([0.0, -800.0, 3.0]);
        assert!((v - (1.0 + 3f64.exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_symmetry() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.3) + normal_cdf(-1.3) - 1.0).abs() < 1e-15);
    }
}
