//! Poisson product identities over the jump times of `ζ`, and counts of
//! ±1 sequences with bounded partial sums.
//!
//! For a bounded `g ≥ 0` on `[0, T]` and the jump times `t_1 < … < t_N` of a
//! unit-rate Poisson process:
//!
//! ```text
//! E[Π g(t_i); N = n]                    = (∫g)^n / n! · e^{-T}
//! E[Π g(t_i); N = n, max τ_k > TΔ]      ≤ (2/Δ) (∫g - T α)^n / n! · e^{-T},   α = (Δ/2) inf g
//! E[Π_{i ≤ N} g(t_i); N ≥ 1]            = e^{-T} (e^{∫g} - 1)
//! ```
//!
//! with gaps `τ_1 = t_1`, `τ_k = t_k - t_{k-1}`, `τ_{n+1} = T - t_n`.

use num_bigint::BigUint;
use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{replica_rng, SimRng};

/// Test functions `g` on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub enum GFunction {
    Const(f64),
    /// `g(s) = s`.
    Identity,
    /// `g(s) = s²`.
    Square,
    /// Piecewise-linear interpolation through `(knots[i], values[i])`,
    /// constant beyond the end knots.
    Table { knots: Vec<f64>, values: Vec<f64> },
}

impl GFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            GFunction::Const(c) if !(c.is_finite() && *c >= 0.0) => {
                Err(Error::invalid("g", format!("constant must be finite and >= 0, got {c}")))
            }
            GFunction::Table { knots, values } => {
                if knots.len() != values.len() || knots.is_empty() {
                    return Err(Error::invalid("g", "knots and values must be non-empty and of equal length"));
                }
                if knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("g", "knots must be strictly increasing"));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(Error::invalid("g", format!("values must be finite and >= 0, got {v}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            GFunction::Const(c) => *c,
            GFunction::Identity => s,
            GFunction::Square => s * s,
            GFunction::Table { knots, values } => {
                let i = knots.partition_point(|&k| k <= s);
                if i == 0 {
                    values[0]
                } else if i == knots.len() {
                    values[i - 1]
                } else {
                    let w = (s - knots[i - 1]) / (knots[i] - knots[i - 1]);
                    values[i - 1] + w * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// `∫_0^T g(s) ds`, exact for every variant.
    pub fn integral(&self, horizon: f64) -> f64 {
        match self {
            GFunction::Const(c) => c * horizon,
            GFunction::Identity => horizon * horizon / 2.0,
            GFunction::Square => horizon.powi(3) / 3.0,
            GFunction::Table { knots, .. } => {
                let mut pts = vec![0.0];
                pts.extend(knots.iter().copied().filter(|&k| k > 0.0 && k < horizon));
                pts.push(horizon);
                pts.windows(2)
                    .map(|w| 0.5 * (w[1] - w[0]) * (self.eval(w[0]) + self.eval(w[1])))
                    .sum()
            }
        }
    }

    /// `inf_{[0, T]} g`.
    pub fn infimum(&self, horizon: f64) -> f64 {
        match self {
            GFunction::Const(c) => *c,
            GFunction::Identity | GFunction::Square => 0.0,
            GFunction::Table { knots, .. } => {
                let mut m = self.eval(0.0).min(self.eval(horizon));
                for &k in knots.iter().filter(|&&k| k > 0.0 && k < horizon) {
                    m = m.min(self.eval(k));
                }
                m
            }
        }
    }
}

/// Monte Carlo mean with its empirical standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    fn from_samples<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let (mut n, mut mean, mut m2) = (0u64, 0.0, 0.0);
        for x in values {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Self {
            mean,
            std_error: (var / n.max(1) as f64).sqrt(),
            samples: n,
        }
    }

    /// `|mean - target|` in standard errors (0 when both agree exactly).
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("T", format!("must be finite and > 0, got {horizon}")))
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Jump times of a unit-rate Poisson process on `[0, T]`.
fn poisson_times(horizon: f64, rng: &mut SimRng, out: &mut Vec<f64>) {
    out.clear();
    let mut t = 0.0;
    loop {
        t += rng.sample::<f64, _>(Exp1);
        if t > horizon {
            return;
        }
        out.push(t);
    }
}

fn mc<F: FnMut(&[f64]) -> f64>(horizon: f64, samples: u64, seed: u64, mut value: F) -> McEstimate {
    let mut rng = replica_rng(seed, 0);
    let mut times = Vec::new();
    McEstimate::from_samples((0..samples).map(|_| {
        poisson_times(horizon, &mut rng, &mut times);
        value(&times)
    }))
}

/// `(∫g)^n / n! · e^{-T}`.
pub fn poisson_product_mean(g: &GFunction, n: u32, horizon: f64) -> Result<f64> {
    g.validate()?;
    check_horizon(horizon)?;
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    let integral = g.integral(horizon);
    if integral == 0.0 {
        return Ok(0.0);
    }
    Ok((n as f64 * integral.ln() - ln_factorial(n) - horizon).exp())
}

/// Monte Carlo estimate of `E[Π g(t_i); N = n]`.
pub fn poisson_product_mean_mc(g: &GFunction, n: u32, horizon: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    poisson_product_mean(g, n, horizon)?;
    Ok(mc(horizon, samples, seed, |times| {
        if times.len() == n as usize {
            times.iter().map(|&t| g.eval(t)).product()
        } else {
            0.0
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCheck {
    pub lhs: McEstimate,
    pub rhs: f64,
}

impl GapCheck {
    /// `lhs ≤ rhs` within `sigmas` standard errors.
    pub fn holds(&self, sigmas: f64) -> bool {
        self.lhs.mean <= self.rhs + sigmas * self.lhs.std_error
    }
}

/// Monte Carlo left side and closed-form right side of the long-gap bound.
pub fn poisson_product_gap_bound(
    g: &GFunction,
    n: u32,
    horizon: f64,
    delta: f64,
    samples: u64,
    seed: u64,
) -> Result<GapCheck> {
    g.validate()?;
    check_horizon(horizon)?;
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1], got {delta}")));
    }
    let inf = g.infimum(horizon);
    if !inf.is_finite() {
        return Err(Error::invalid("g", "infimum is not finite"));
    }
    let alpha = 0.5 * delta * inf;
    let base = (g.integral(horizon) - horizon * alpha).max(0.0);
    let rhs = if base == 0.0 {
        0.0
    } else {
        (2.0 / delta) * (n as f64 * base.ln() - ln_factorial(n) - horizon).exp()
    };
    let threshold = horizon * delta;
    let lhs = mc(horizon, samples, seed, |times| {
        if times.len() != n as usize {
            return 0.0;
        }
        let mut prev = 0.0;
        let mut widest: f64 = 0.0;
        for &t in times {
            widest = widest.max(t - prev);
            prev = t;
        }
        widest = widest.max(horizon - prev);
        if widest > threshold {
            times.iter().map(|&t| g.eval(t)).product()
        } else {
            0.0
        }
    });
    Ok(GapCheck { lhs, rhs })
}

/// `e^{-T}(e^{∫g} - 1)`.
pub fn poisson_product_total(g: &GFunction, horizon: f64) -> Result<f64> {
    g.validate()?;
    check_horizon(horizon)?;
    Ok((-horizon).exp() * g.integral(horizon).exp_m1())
}

/// Monte Carlo estimate of `E[Π_{i ≤ N} g(t_i); N ≥ 1]`.
pub fn poisson_product_total_mc(g: &GFunction, horizon: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    poisson_product_total(g, horizon)?;
    Ok(mc(horizon, samples, seed, |times| {
        if times.is_empty() {
            0.0
        } else {
            times.iter().map(|&t| g.eval(t)).product()
        }
    }))
}

/// Number of `b ∈ {±1}^n` with `|b_1 + … + b_r| ≤ d` for all `r ≤ n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedSumCount {
    pub n: u32,
    pub d: u32,
    pub count: BigUint,
}

impl BoundedSumCount {
    pub fn fraction(&self) -> f64 {
        let total = BigUint::from(1u8) << self.n;
        ratio(&self.count, &total)
    }
}

fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    // keep the top 60 bits of each operand and carry the exponents separately
    let top = |x: &BigUint| {
        let shift = x.bits().saturating_sub(60);
        let s: BigUint = x >> shift;
        let mantissa = s.to_u64_digits().first().copied().unwrap_or(0) as f64;
        (mantissa, shift as i32)
    };
    let (ma, ea) = top(a);
    let (mb, eb) = top(b);
    ma / mb * 2f64.powi(ea - eb)
}

fn check_counts(n: u32, d: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if d == 0 {
        return Err(Error::invalid("d", "must be >= 1"));
    }
    Ok(())
}

/// Exact count by dynamic programming over the running sum.
pub fn count_bounded_sequences(n: u32, d: u32) -> Result<BoundedSumCount> {
    check_counts(n, d)?;
    let width = d.min(n) as usize;
    let size = 2 * width + 1;
    let mut cur = vec![BigUint::ZERO; size];
    let mut next = vec![BigUint::ZERO; size];
    cur[width] = BigUint::from(1u8);
    for _ in 0..n {
        for (j, slot) in next.iter_mut().enumerate() {
            *slot = BigUint::ZERO;
            if j > 0 {
                *slot += &cur[j - 1];
            }
            if j + 1 < size {
                *slot += &cur[j + 1];
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(BoundedSumCount {
        n,
        d,
        count: cur.iter().sum(),
    })
}

/// `ln(c_d / 2^n)` from the normalized DP in floating point; feasible for
/// `n` in the tens of thousands.
pub fn log_bounded_fraction(n: u64, d: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    check_counts(1, d)?;
    let width = (d as u64).min(n) as usize;
    let size = 2 * width + 1;
    let mut cur = vec![0.0_f64; size];
    let mut next = vec![0.0_f64; size];
    cur[width] = 1.0;
    let mut log_scale = 0.0;
    for step in 0..n {
        for j in 0..size {
            let left = if j > 0 { cur[j - 1] } else { 0.0 };
            let right = if j + 1 < size { cur[j + 1] } else { 0.0 };
            next[j] = 0.5 * (left + right);
        }
        std::mem::swap(&mut cur, &mut next);
        if step % 64 == 63 {
            let s: f64 = cur.iter().sum();
            log_scale += s.ln();
            cur.iter_mut().for_each(|v| *v /= s);
        }
    }
    Ok(log_scale + cur.iter().sum::<f64>().ln())
}

/// Exhaustive count over all `2^n` sequences (`n ≤ 30`).
pub fn brute_force_count(n: u32, d: u32) -> Result<u64> {
    check_counts(n, d)?;
    if n > 30 {
        return Err(Error::invalid("n", "brute force is limited to n <= 30"));
    }
    let d = d as i32;
    let count = (0u64..1 << n)
        .filter(|&bits| {
            let mut s = 0i32;
            (0..n).all(|k| {
                s += if bits >> k & 1 == 1 { 1 } else { -1 };
                s.abs() <= d
            })
        })
        .count();
    Ok(count as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceBoundCheck {
    pub horizon: f64,
    pub delta: f64,
    pub beta: f64,
    pub theta: f64,
    /// `[T^β]`.
    pub n: u64,
    /// `[TΔ]`.
    pub d: u32,
    /// `ln(c_d / 2^n)`.
    pub log_fraction: f64,
    /// `(n + 1) ln(1 - θ)`.
    pub log_bound: f64,
}

impl SequenceBoundCheck {
    pub fn holds(&self) -> bool {
        self.log_fraction >= self.log_bound
    }

    pub fn margin(&self) -> f64 {
        self.log_fraction - self.log_bound
    }
}

/// Checks `c_d ≥ (1 - θ)^{n+1} 2^n` with `d = [TΔ]` and `n = [T^β]`.
pub fn bounded_sequence_bound(horizon: f64, delta: f64, beta: f64, theta: f64) -> Result<SequenceBoundCheck> {
    check_horizon(horizon)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", "must be > 0"));
    }
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", "must be > 1"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::invalid("theta", "must lie in (0, 1)"));
    }
    let d = (horizon * delta).floor();
    let n = horizon.powf(beta).floor();
    if d < 1.0 || n < 1.0 {
        return Err(Error::invalid("T", "[TΔ] and [T^β] must both be >= 1"));
    }
    let (n, d) = (n as u64, d as u32);
    Ok(SequenceBoundCheck {
        horizon,
        delta,
        beta,
        theta,
        n,
        d,
        log_fraction: log_bounded_fraction(n, d)?,
        log_bound: (n + 1) as f64 * (-theta).ln_1p(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let v = poisson_product_mean(&GFunction::Const(1.0), 3, 2.0).unwrap();
        assert!((v - 4.0 / 3.0 * (-2.0f64).exp()).abs() < 1e-15);
        let v = poisson_product_mean(&GFunction::Identity, 2, 1.0).unwrap();
        assert!((v - 0.125 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(poisson_product_mean(&GFunction::Const(1.0), 0, 1.0).is_err());
        assert!(poisson_product_mean(&GFunction::Const(-1.0), 1, 1.0).is_err());
        let total = poisson_product_total(&GFunction::Const(1.0), 1.0).unwrap();
        assert!((total - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(poisson_product_total(&GFunction::Const(0.0), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn table_integral_and_infimum() {
        let g = GFunction::Table {
            knots: vec![0.0, 1.0, 2.0],
            values: vec![1.0, 3.0, 0.5],
        };
        assert_eq!(g.integral(2.0), 2.0 + 1.75);
        assert_eq!(g.infimum(2.0), 0.5);
        assert_eq!(g.eval(0.5), 2.0);
        assert_eq!(g.eval(5.0), 0.5);
    }

    #[test]
    fn gap_bound_edge_cases() {
        let zero = poisson_product_gap_bound(&GFunction::Const(0.0), 2, 2.0, 0.5, 1000, 1).unwrap();
        assert_eq!(zero.rhs, 0.0);
        assert_eq!(zero.lhs.mean, 0.0);
        let rhs = poisson_product_gap_bound(&GFunction::Const(1.0), 6, 4.0, 0.5, 10, 1).unwrap().rhs;
        let expected = 4.0 * 3f64.powi(6) / 720.0 * (-4.0f64).exp();
        assert!((rhs - expected).abs() < 1e-12 * expected);
        assert!(poisson_product_gap_bound(&GFunction::Const(1.0), 2, 1.0, 1.5, 10, 1).is_err());
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_bounded_sequences(2, 1).unwrap().count, BigUint::from(2u8));
        assert_eq!(count_bounded_sequences(3, 3).unwrap().count, BigUint::from(8u8));
        assert_eq!(brute_force_count(2, 1).unwrap(), 2);
        assert!(count_bounded_sequences(0, 1).is_err());
        assert!(count_bounded_sequences(1, 0).is_err());
    }

    #[test]
    fn big_counts_exceed_u64() {
        let c = count_bounded_sequences(100, 100).unwrap();
        assert_eq!(c.count, BigUint::from(1u8) << 100u32);
        assert_eq!(c.fraction(), 1.0);
    }

    #[test]
    fn float_fraction_matches_bigint() {
        for (n, d) in [(50, 3), (200, 7), (513, 10)] {
            let exact = count_bounded_sequences(n, d).unwrap().fraction().ln();
            let float = log_bounded_fraction(n as u64, d).unwrap();
            assert!((exact - float).abs() < 1e-10, "n={n} d={d}: {exact} vs {float}");
        }
    }
}
