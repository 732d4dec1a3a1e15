//! Numerically careful aggregation helpers.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Max-shifted sums of `exp(w_i)` and `exp(2 w_i)` over log-weights, in the
/// order given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeightSums {
    /// Shift applied before exponentiating; `-∞` when every weight is zero.
    pub shift: f64,
    /// `Σ exp(w_i - shift)`.
    pub sum: f64,
    /// `Σ exp(2 (w_i - shift))`.
    pub sum_sq: f64,
}

impl LogWeightSums {
    pub fn from_log_weights(log_weights: &[f64]) -> Self {
        let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if shift == f64::NEG_INFINITY {
            return Self {
                shift,
                sum: 0.0,
                sum_sq: 0.0,
            };
        }
        let mut s1 = CompensatedSum::default();
        let mut s2 = CompensatedSum::default();
        for &w in log_weights {
            if w > f64::NEG_INFINITY {
                let e = (w - shift).exp();
                s1.add(e);
                s2.add(e * e);
            }
        }
        Self {
            shift,
            sum: s1.value(),
            sum_sq: s2.value(),
        }
    }

    /// `ln Σ exp(w_i)`.
    pub fn log_sum(&self) -> f64 {
        if self.sum > 0.0 {
            self.shift + self.sum.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Effective sample size `(Σw)² / Σw²`.
    pub fn ess(&self) -> f64 {
        if self.sum_sq > 0.0 {
            self.sum * self.sum / self.sum_sq
        } else {
            0.0
        }
    }
}

/// Stable `ln Σ exp(x_i)`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    LogWeightSums::from_log_weights(xs).log_sum()
}

fn ln_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let ln_choose: f64 = (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum();
    ln_choose + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// `P(X ≤ k)` for `X ~ Binomial(n, p)`, summed term by term (intended for small `k`).
pub fn binomial_cdf(n: u64, k: u64, p: f64) -> f64 {
    let terms: Vec<f64> = (0..=k.min(n)).map(|j| ln_binomial_pmf(n, j, p)).collect();
    log_sum_exp(&terms).exp().min(1.0)
}

/// Two-sided Clopper–Pearson interval for `k` successes in `n` trials at
/// level `1 - alpha`, by bisection on the exact binomial tails.
pub fn clopper_pearson(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    assert!(k <= n && n > 0);
    let bisect = |pred: &dyn Fn(f64) -> bool| {
        // pred is true on [0, root) and false on (root, 1]
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let half = alpha / 2.0;
    let lower = if k == 0 {
        0.0
    } else {
        // P(X ≥ k; p) = 1 - P(X ≤ k-1; p) increases in p.
        bisect(&|p| 1.0 - binomial_cdf(n, k - 1, p) < half)
    };
    let upper = if k == n {
        1.0
    } else {
        // P(X ≤ k; p) decreases in p.
        bisect(&|p| binomial_cdf(n, k, p) > half)
    };
    (lower, upper)
}
