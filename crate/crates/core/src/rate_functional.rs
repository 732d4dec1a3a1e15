//! Regime classification, normalizers and rate functionals.
//!
//! With `v = max(l, m)` the normalizer is `ψ(T) = T^{v+1}` and
//!
//! | regime           | condition          | `I(f)`                              |
//! |------------------|--------------------|-------------------------------------|
//! | birth dominant   | `l > m`            | `P_l ∫ f^l`                         |
//! | balanced         | `l = m, P_l ≠ Q_m` | `(√P_l − √Q_m)² ∫ f^l`              |
//! | death dominant   | `l < m`            | `Q_m ∫ f^m`                         |
//! | degenerate       | `l = m, P_l = Q_m` | not covered                         |
//!
//! Pure-birth models (`μ ≡ 0`) are birth dominant with `ψ(T) = T^{l+1}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RateModel;
use crate::profile::TargetProfile;

/// Default cap on integrand evaluations (`2^20 + 1`).
pub const DEFAULT_QUAD_POINTS: usize = (1 << 20) + 1;
const QUAD_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BirthDominant,
    Balanced,
    DeathDominant,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeClassification {
    pub regime: Regime,
    /// `v + 1`, the exponent of `ψ(T) = T^{v+1}`.
    pub psi_exponent: f64,
}

impl RegimeClassification {
    pub fn psi(&self, horizon: f64) -> f64 {
        horizon.powf(self.psi_exponent)
    }
}

pub fn classify(model: &RateModel) -> RegimeClassification {
    let a = model.asymptotics();
    let regime = if a.is_pure_birth() || a.l > a.m {
        Regime::BirthDominant
    } else if a.l < a.m {
        Regime::DeathDominant
    } else if a.p_l != a.q_m {
        Regime::Balanced
    } else {
        Regime::Degenerate
    };
    RegimeClassification {
        regime,
        psi_exponent: a.dominant_exponent() + 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Romberg integration of `g` over `[a, b]`: trapezoid rules on `2^k`
/// panels with Richardson extrapolation, stopped when successive diagonal
/// entries agree to `rel_tol` or when `max_points` evaluations are used.
pub fn romberg<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, max_points: usize, rel_tol: f64) -> Quadrature {
    let width = b - a;
    let mut trapezoid = 0.5 * width * (g(a) + g(b));
    let mut evaluations = 2;
    let mut prev_row = vec![trapezoid];
    let mut best = trapezoid;
    let mut k = 0u32;
    loop {
        k += 1;
        let panels = 1usize << k;
        if panels + 1 > max_points.max(3) {
            return Quadrature {
                value: best,
                evaluations,
                converged: false,
            };
        }
        let h = width / panels as f64;
        let midpoints: f64 = (0..panels / 2).map(|i| g(a + (2 * i + 1) as f64 * h)).sum();
        evaluations += panels / 2;
        trapezoid = 0.5 * trapezoid + h * midpoints;
        let mut row = Vec::with_capacity(prev_row.len() + 1);
        row.push(trapezoid);
        let mut factor = 1.0;
        for (j, &p) in prev_row.iter().enumerate() {
            factor *= 4.0;
            row.push(row[j] + (row[j] - p) / (factor - 1.0));
        }
        let next = *row.last().unwrap();
        let delta = (next - best).abs();
        best = next;
        prev_row = row;
        if k >= 3 && delta <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return Quadrature {
                value: best,
                evaluations,
                converged: true,
            };
        }
    }
}

/// `∫_0^1 f(t)^p dt` using the principal real power (`f ≥ 0`).
pub fn integrate_power(profile: &TargetProfile, exponent: f64, quad_points: usize) -> Quadrature {
    romberg(
        |t| {
            let v = profile.eval(t).max(0.0);
            if exponent == 0.0 {
                1.0
            } else {
                v.powf(exponent)
            }
        },
        0.0,
        1.0,
        quad_points,
        QUAD_REL_TOL,
    )
}

/// `I(f)` for the regime of `model`.
pub fn rate_functional(model: &RateModel, profile: &TargetProfile, quad_points: usize) -> Result<f64> {
    profile.validate()?;
    let a = model.asymptotics();
    let value = match classify(model).regime {
        Regime::BirthDominant => a.p_l * integrate_power(profile, a.l, quad_points).value,
        Regime::Balanced => {
            let coeff = (a.p_l.sqrt() - a.q_m.sqrt()).powi(2);
            coeff * integrate_power(profile, a.l, quad_points).value
        }
        Regime::DeathDominant => a.q_m * integrate_power(profile, a.m, quad_points).value,
        Regime::Degenerate => return Err(Error::DegenerateRegime),
    };
    Ok(value)
}

/// `I(f) = P_l ∫ f^l` for a pure-birth model and a non-decreasing profile
/// with `f(0) = 0` (positivity on `(0, 1]` is not required here).
pub fn yule_rate_functional(model: &RateModel, profile: &TargetProfile) -> Result<f64> {
    let a = model.asymptotics();
    if !a.is_pure_birth() {
        return Err(Error::invalid("c_mu", "the Yule rate functional needs a pure-birth model (μ ≡ 0)"));
    }
    let f0 = profile.eval(0.0);
    if f0.abs() > 1e-12 {
        return Err(Error::InvalidProfile(format!(
            "the Yule rate functional needs f(0) = 0, got {f0}"
        )));
    }
    if !profile.is_nondecreasing() {
        return Err(Error::InvalidProfile(
            "the Yule rate functional needs a non-decreasing profile".into(),
        ));
    }
    Ok(a.p_l * integrate_power(profile, a.l, DEFAULT_QUAD_POINTS).value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn classification_examples() {
        let a = classify(&RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap());
        assert_eq!(a.regime, Regime::BirthDominant);
        assert_eq!(a.psi_exponent, 2.0);
        let d = classify(&RateModel::power(1.0, 1.0, 1.0, 1.0).unwrap());
        assert_eq!(d.regime, Regime::Degenerate);
        let c = classify(&RateModel::power(1.0, 0.0, 1.0, 2.0).unwrap());
        assert_eq!(c.regime, Regime::DeathDominant);
        assert_eq!(c.psi_exponent, 3.0);
        let b = classify(&RateModel::power(4.0, 1.0, 1.0, 1.0).unwrap());
        assert_eq!(b.regime, Regime::Balanced);
        assert_eq!(b.psi(3.0), 9.0);
    }

    #[test]
    fn analytic_rate_functionals() {
        let f = TargetProfile::linear();
        let a = RateModel::power(2.0, 1.0, 1.0, 0.0).unwrap();
        assert!(rel(rate_functional(&a, &f, DEFAULT_QUAD_POINTS).unwrap(), 1.0) < 1e-9);
        let b = RateModel::power(4.0, 1.0, 1.0, 1.0).unwrap();
        assert!(rel(rate_functional(&b, &f, DEFAULT_QUAD_POINTS).unwrap(), 0.5) < 1e-9);
        let c = RateModel::power(1.0, 0.0, 3.0, 2.0).unwrap();
        assert!(rel(rate_functional(&c, &f, DEFAULT_QUAD_POINTS).unwrap(), 1.0) < 1e-9);
    }

    #[test]
    fn degenerate_is_refused() {
        let d = RateModel::power(1.0, 1.0, 1.0, 1.0).unwrap();
        let err = rate_functional(&d, &TargetProfile::linear(), DEFAULT_QUAD_POINTS).unwrap_err();
        assert!(matches!(err, Error::DegenerateRegime));
        assert!(err.to_string().contains("P_l = Q_m"));
    }

    #[test]
    fn profile_outside_class_is_refused() {
        let a = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
        let p = TargetProfile::table(vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 1.0]).unwrap();
        assert!(rate_functional(&a, &p, DEFAULT_QUAD_POINTS).is_err());
    }

    #[test]
    fn yule_examples() {
        let yule1 = RateModel::power(1.0, 1.0, 0.0, 0.0).unwrap();
        let sq = TargetProfile::power(2.0).unwrap();
        assert!(rel(yule_rate_functional(&yule1, &sq).unwrap(), 1.0 / 3.0) < 1e-9);
        let yule2 = RateModel::power(3.0, 2.0, 0.0, 0.0).unwrap();
        assert!(rel(yule_rate_functional(&yule2, &TargetProfile::linear()).unwrap(), 1.0) < 1e-9);
        let decreasing = TargetProfile::table(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.5]).unwrap();
        let err = yule_rate_functional(&yule1, &decreasing).unwrap_err();
        assert!(err.to_string().contains("non-decreasing"));
        let not_yule = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(yule_rate_functional(&not_yule, &sq).is_err());
    }

    #[test]
    fn yule_accepts_profiles_with_flat_start() {
        let yule = RateModel::power(2.0, 1.0, 0.0, 0.0).unwrap();
        let p = TargetProfile::table(vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 1.0]).unwrap();
        // 2 · ∫_{1/2}^1 (2t - 1) dt = 2 · 1/4
        assert!(rel(yule_rate_functional(&yule, &p).unwrap(), 0.5) < 1e-9);
    }

    #[test]
    fn romberg_on_polynomials() {
        for k in 1..=6 {
            let q = integrate_power(&TargetProfile::power(k as f64).unwrap(), 2.0, DEFAULT_QUAD_POINTS);
            assert!(q.converged);
            assert!(rel(q.value, 1.0 / (2 * k + 1) as f64) < 1e-9, "k = {k}: {}", q.value);
        }
    }

    #[test]
    fn non_integer_exponent() {
        let q = integrate_power(&TargetProfile::linear(), 0.5, DEFAULT_QUAD_POINTS);
        assert!(rel(q.value, 2.0 / 3.0) < 1e-6, "{q:?}");
    }
}
