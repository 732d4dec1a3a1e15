//! Birth-death rate models.
//!
//! A [`RateModel`] carries two things that are checked against each other:
//! the exact jump rates `λ(x)`, `μ(x)` used by the simulator and the
//! measure, and the declared asymptotic parameters `(P_l, l, Q_m, m)` with
//! `λ(x) ~ P_l x^l`, `μ(x) ~ Q_m x^m` used by the rate functionals.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared asymptotic parameters: `λ(x)/(P_l x^l) → 1` and
/// `μ(x)/(Q_m x^m) → 1`. `q_m = 0` marks a pure-birth (Yule) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    pub p_l: f64,
    pub l: f64,
    pub q_m: f64,
    pub m: f64,
}

impl Asymptotics {
    pub fn is_pure_birth(&self) -> bool {
        self.q_m == 0.0
    }

    /// `v = max(l, m)`; the death exponent is ignored for pure-birth models.
    pub fn dominant_exponent(&self) -> f64 {
        if self.is_pure_birth() {
            self.l
        } else {
            self.l.max(self.m)
        }
    }
}

/// Power-law tail `λ(x) = c_λ (1+x)^l`, `μ(x) = c_μ x^m 1{x ≥ 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTail {
    pub c_lambda: f64,
    pub l: f64,
    pub c_mu: f64,
    pub m: f64,
}

impl PowerTail {
    #[inline]
    fn birth(&self, x: u64) -> f64 {
        if self.l == 0.0 {
            self.c_lambda
        } else {
            self.c_lambda * (1.0 + x as f64).powf(self.l)
        }
    }

    #[inline]
    fn death(&self, x: u64) -> f64 {
        if x == 0 {
            0.0
        } else if self.m == 0.0 {
            self.c_mu
        } else {
            self.c_mu * (x as f64).powf(self.m)
        }
    }
}

pub type RateFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Rates {
    Power {
        tail: PowerTail,
        lambda_scale: f64,
    },
    Table {
        lambda: Vec<f64>,
        mu: Vec<f64>,
        tail: PowerTail,
    },
    Custom {
        birth: RateFn,
        death: RateFn,
    },
}

/// Exact birth/death rates on the non-negative integers together with their
/// declared asymptotics. Immutable and cheap to clone.
#[derive(Clone)]
pub struct RateModel {
    rates: Rates,
    asymptotics: Asymptotics,
}

impl fmt::Debug for RateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match &self.rates {
            Rates::Power { .. } => "power",
            Rates::Table { .. } => "table",
            Rates::Custom { .. } => "custom",
        };
        f.debug_struct("RateModel")
            .field("family", &family)
            .field("asymptotics", &self.asymptotics)
            .finish()
    }
}

/// Settings for [`RateModel::validate`].
#[derive(Debug, Clone)]
pub struct ValidationConfig {
    /// Points where `λ(x)/(P_l x^l)` and `μ(x)/(Q_m x^m)` are compared to 1.
    pub check_points: Vec<f64>,
    pub tolerance: f64,
    /// Structural checks (`λ > 0`, `μ > 0` off the origin) run on `0..=structural_range`.
    pub structural_range: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            check_points: vec![1e3, 1e4, 1e5],
            tolerance: 0.05,
            structural_range: 2_000,
        }
    }
}

impl RateModel {
    /// Built-in family `λ(x) = c_λ (1+x)^l`, `μ(x) = c_μ x^m 1{x ≥ 1}`.
    /// `c_mu = 0` gives a pure-birth model.
    pub fn power(c_lambda: f64, l: f64, c_mu: f64, m: f64) -> Result<Self> {
        Self::power_scaled(c_lambda, l, c_mu, m, 1.0)
    }

    /// Like [`RateModel::power`] but multiplies the exact birth rate by
    /// `lambda_scale` without touching the declared `P_l`.
    pub fn power_scaled(c_lambda: f64, l: f64, c_mu: f64, m: f64, lambda_scale: f64) -> Result<Self> {
        let tail = PowerTail { c_lambda, l, c_mu, m };
        check_tail(&tail, "")?;
        if !(lambda_scale.is_finite() && lambda_scale > 0.0) {
            return Err(Error::invalid("lambda_scale", "must be finite and > 0"));
        }
        Ok(Self {
            rates: Rates::Power { tail, lambda_scale },
            asymptotics: Asymptotics {
                p_l: c_lambda,
                l,
                q_m: c_mu,
                m,
            },
        })
    }

    /// Tabulated rates for `0 ≤ x < lambda.len()`, power tail beyond.
    pub fn table(lambda: Vec<f64>, mu: Vec<f64>, tail: PowerTail) -> Result<Self> {
        check_tail(&tail, "tail.")?;
        if lambda.is_empty() || lambda.len() != mu.len() {
            return Err(Error::invalid(
                "lambda",
                "lambda and mu tables must be non-empty and of equal length",
            ));
        }
        for (x, (&b, &d)) in lambda.iter().zip(&mu).enumerate() {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::invalid("lambda", format!("lambda[{x}] = {b} must be finite and > 0")));
            }
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::invalid("mu", format!("mu[{x}] = {d} must be finite and >= 0")));
            }
        }
        if mu[0] != 0.0 {
            return Err(Error::invalid("mu", "mu[0] must be 0"));
        }
        Ok(Self {
            rates: Rates::Table { lambda, mu, tail },
            asymptotics: Asymptotics {
                p_l: tail.c_lambda,
                l: tail.l,
                q_m: tail.c_mu,
                m: tail.m,
            },
        })
    }

    /// Arbitrary exact rates with user-declared asymptotics. Only the
    /// origin conditions are checked here; see [`RateModel::validate`].
    pub fn custom(birth: RateFn, death: RateFn, asymptotics: Asymptotics) -> Result<Self> {
        let b0 = birth(0);
        if !(b0.is_finite() && b0 > 0.0) {
            return Err(Error::invalid("lambda", format!("lambda(0) = {b0} must be finite and > 0")));
        }
        if death(0) != 0.0 {
            return Err(Error::invalid("mu", "mu(0) must be 0"));
        }
        Ok(Self {
            rates: Rates::Custom { birth, death },
            asymptotics,
        })
    }

    pub fn asymptotics(&self) -> &Asymptotics {
        &self.asymptotics
    }

    /// `λ(x)`.
    #[inline]
    pub fn birth_rate(&self, x: u64) -> f64 {
        match &self.rates {
            Rates::Power { tail, lambda_scale } => lambda_scale * tail.birth(x),
            Rates::Table { lambda, tail, .. } => match lambda.get(x as usize) {
                Some(&v) => v,
                None => tail.birth(x),
            },
            Rates::Custom { birth, .. } => birth(x),
        }
    }

    /// `μ(x)`; zero at the origin.
    #[inline]
    pub fn death_rate(&self, x: u64) -> f64 {
        match &self.rates {
            Rates::Power { tail, .. } => tail.death(x),
            Rates::Table { mu, tail, .. } => match mu.get(x as usize) {
                Some(&v) => v,
                None => tail.death(x),
            },
            Rates::Custom { death, .. } => death(x),
        }
    }

    /// `h(x) = λ(x) + μ(x)`.
    #[inline]
    pub fn total_rate(&self, x: u64) -> f64 {
        self.birth_rate(x) + self.death_rate(x)
    }

    /// Full model check: exponent constraints, positivity on a structural
    /// range, and agreement of the exact rates with the declared asymptotics.
    pub fn validate(&self, cfg: &ValidationConfig) -> Result<()> {
        let a = &self.asymptotics;
        if !(a.p_l.is_finite() && a.p_l > 0.0) {
            return Err(Error::invalid("c_lambda", "P_l must be finite and > 0"));
        }
        if !(a.l.is_finite() && a.l >= 0.0) {
            return Err(Error::invalid("l", "must be finite and >= 0"));
        }
        if !(a.m.is_finite() && a.m >= 0.0) {
            return Err(Error::invalid("m", "must be finite and >= 0"));
        }
        if !(a.q_m.is_finite() && a.q_m >= 0.0) {
            return Err(Error::invalid("c_mu", "Q_m must be finite and >= 0"));
        }
        if a.dominant_exponent() <= 0.0 {
            return Err(Error::invalid("l", "max(l, m) must be > 0"));
        }
        let pure_birth = a.is_pure_birth();
        for x in 0..=cfg.structural_range {
            let b = self.birth_rate(x);
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::RateEvaluation {
                    which: "birth",
                    state: x as i64,
                    value: b,
                });
            }
            let d = self.death_rate(x);
            let ok = if x == 0 || pure_birth {
                d == 0.0
            } else {
                d.is_finite() && d > 0.0
            };
            if !ok {
                return Err(Error::RateEvaluation {
                    which: "death",
                    state: x as i64,
                    value: d,
                });
            }
        }
        for &x in &cfg.check_points {
            let state = x.round() as u64;
            let dev = (self.birth_rate(state) / (a.p_l * x.powf(a.l)) - 1.0).abs();
            if !(dev < cfg.tolerance) {
                return Err(Error::AsymptoticMismatch {
                    which: "birth",
                    state: x,
                    deviation: dev,
                    tolerance: cfg.tolerance,
                });
            }
            if !pure_birth {
                let dev = (self.death_rate(state) / (a.q_m * x.powf(a.m)) - 1.0).abs();
                if !(dev < cfg.tolerance) {
                    return Err(Error::AsymptoticMismatch {
                        which: "death",
                        state: x,
                        deviation: dev,
                        tolerance: cfg.tolerance,
                    });
                }
            } else if self.death_rate(state) != 0.0 {
                return Err(Error::RateEvaluation {
                    which: "death",
                    state: state as i64,
                    value: self.death_rate(state),
                });
            }
        }
        Ok(())
    }
}

fn check_tail(tail: &PowerTail, prefix: &str) -> Result<()> {
    let field = |name: &str| format!("{prefix}{name}");
    if !(tail.c_lambda.is_finite() && tail.c_lambda > 0.0) {
        return Err(Error::invalid(field("c_lambda"), "must be finite and > 0"));
    }
    if !(tail.l.is_finite() && tail.l >= 0.0) {
        return Err(Error::invalid(field("l"), "must be finite and >= 0"));
    }
    if !(tail.c_mu.is_finite() && tail.c_mu >= 0.0) {
        return Err(Error::invalid(field("c_mu"), "must be finite and >= 0"));
    }
    if !(tail.m.is_finite() && tail.m >= 0.0) {
        return Err(Error::invalid(field("m"), "must be finite and >= 0"));
    }
    Ok(())
}

/// JSON model document.
///
/// ```json
/// {"family":"power","c_lambda":1,"l":1,"c_mu":1,"m":0}
/// {"family":"table","lambda":[1,2,3],"mu":[0,1,1],"tail":{"c_lambda":1,"l":1,"c_mu":1,"m":0}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelSpec {
    Power {
        c_lambda: f64,
        l: f64,
        c_mu: f64,
        m: f64,
        /// Multiplies the exact birth rate only; the declared `P_l` stays `c_lambda`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda_scale: Option<f64>,
    },
    Table {
        lambda: Vec<f64>,
        mu: Vec<f64>,
        tail: PowerTail,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<RateModel> {
        match self {
            ModelSpec::Power {
                c_lambda,
                l,
                c_mu,
                m,
                lambda_scale,
            } => RateModel::power_scaled(*c_lambda, *l, *c_mu, *m, lambda_scale.unwrap_or(1.0)),
            ModelSpec::Table { lambda, mu, tail } => RateModel::table(lambda.clone(), mu.clone(), *tail),
        }
    }
}
