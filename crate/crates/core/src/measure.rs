//! Path functionals and the change of measure from the reference walk `ζ`
//! to the birth-death process `ξ`.
//!
//! For a path `u` with `N` jumps at `t_1 < … < t_N`, holding times
//! `τ_i = t_i - t_{i-1}` and visited states `x_0, …, x_N`:
//!
//! ```text
//! A_T = Σ h(x_{i-1}) τ_i + h(x_N)(T - t_N)
//! B_T = Σ ln ν(x_{i-1}, x_i),   ν = λ(x) for an up-jump, μ(x) for a down-jump
//! ln p_T(u) = N ln 2 + Σ [-(h(x_{i-1}) - 1) τ_i + ln ν(x_{i-1}, x_i)] - (h(x_N) - 1)(T - t_N)
//! ```
//!
//! and `P(ξ ∈ G) = e^T E[exp(-A_T + B_T + N ln 2); ζ ∈ G]`. Everything is
//! kept in log space; a zero-probability path has log density `-∞`.

use std::f64::consts::LN_2;

use crate::model::RateModel;
use crate::path::JumpPath;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFunctionals {
    /// `∫_0^T h(u(t)) dt`, accumulated up to the first step below 0.
    pub a_t: f64,
    /// `Σ ln ν`; `-∞` when some factor vanishes.
    pub b_t: f64,
    pub n_t: u64,
    pub k_plus: u64,
    pub k_minus: u64,
    /// `k_plus - k_minus`.
    pub balance: i64,
}

impl PathFunctionals {
    /// `T - A_T + B_T + N ln 2`, the log importance weight of the path.
    pub fn log_weight(&self, horizon: f64) -> f64 {
        if self.b_t == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        horizon - self.a_t + self.b_t + self.n_t as f64 * LN_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpBalance {
    pub k_plus: u64,
    pub k_minus: u64,
    pub balance: i64,
}

pub fn jump_balance(path: &JumpPath) -> JumpBalance {
    let k_plus = path.jump_signs().iter().filter(|&&s| s > 0).count() as u64;
    let n = path.jump_count() as u64;
    let k_minus = n - k_plus;
    let balance = k_plus as i64 - k_minus as i64;
    debug_assert_eq!(2 * k_plus as i64, n as i64 + balance);
    debug_assert_eq!(2 * k_minus as i64, n as i64 - balance);
    JumpBalance {
        k_plus,
        k_minus,
        balance,
    }
}

#[inline]
fn log_jump_intensity(model: &RateModel, state: u64, sign: i8) -> f64 {
    let nu = if sign > 0 {
        model.birth_rate(state)
    } else {
        model.death_rate(state)
    };
    nu.ln()
}

/// `A_T`, `B_T` and the jump counts of a path.
///
/// A path that steps below zero has `B_T = -∞` (the step from 0 uses
/// `μ(0) = 0`); `A_T` then only covers the part before that step, since the
/// rates are not defined on negative states.
pub fn compute_functionals(model: &RateModel, path: &JumpPath) -> PathFunctionals {
    let balance = jump_balance(path);
    let mut a_t = 0.0;
    let mut b_t = 0.0;
    let mut x = path.start_state();
    let mut from = 0.0;
    let mut admissible = x >= 0;
    if admissible {
        for (&t, &s) in path.jump_times().iter().zip(path.jump_signs()) {
            let state = x as u64;
            a_t += model.total_rate(state) * (t - from);
            b_t += log_jump_intensity(model, state, s);
            x += s as i64;
            from = t;
            if x < 0 {
                admissible = false;
                break;
            }
        }
        if admissible {
            a_t += model.total_rate(x as u64) * (path.horizon() - from);
        }
    }
    if !admissible {
        b_t = f64::NEG_INFINITY;
    }
    PathFunctionals {
        a_t,
        b_t,
        n_t: path.jump_count() as u64,
        k_plus: balance.k_plus,
        k_minus: balance.k_minus,
        balance: balance.balance,
    }
}

/// `ln p_T(u)`, the log Radon–Nikodym density of the law of `ξ` with respect
/// to the law of `ζ`, evaluated term by term.
pub fn log_density(model: &RateModel, path: &JumpPath) -> f64 {
    let mut x = path.start_state();
    if x < 0 {
        return f64::NEG_INFINITY;
    }
    let horizon = path.horizon();
    if path.jump_count() == 0 {
        return -(model.total_rate(x as u64) - 1.0) * horizon;
    }
    let mut log_p = path.jump_count() as f64 * LN_2;
    let mut from = 0.0;
    for (&t, &s) in path.jump_times().iter().zip(path.jump_signs()) {
        let state = x as u64;
        let log_nu = log_jump_intensity(model, state, s);
        if log_nu == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        log_p += -(model.total_rate(state) - 1.0) * (t - from) + log_nu;
        x += s as i64;
        from = t;
    }
    log_p - (model.total_rate(x as u64) - 1.0) * (horizon - from)
}
