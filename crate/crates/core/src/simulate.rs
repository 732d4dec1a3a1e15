//! Exact event-driven sampling of the birth-death process `ξ` and of the
//! reference walk `ζ` (unit jump rate, symmetric ±1 steps).

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RateModel;
use crate::path::{Hold, JumpPath};
use crate::rng::replica_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SimStatus {
    Completed,
    /// The jump cap was reached before the horizon.
    Exploded { jump_cap: u64 },
    /// The event budget (jump cap for `ζ`, wall clock for either) ran out.
    Truncated { reason: Truncation },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    JumpCap,
    WallClock,
}

impl SimStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, SimStatus::Completed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub path: JumpPath,
    pub status: SimStatus,
}

#[derive(Debug, Clone, Copy)]
pub struct SimLimits {
    pub jump_cap: u64,
    pub wall_clock: Option<Duration>,
}

impl SimLimits {
    pub fn jump_cap(jump_cap: u64) -> Self {
        Self {
            jump_cap,
            wall_clock: None,
        }
    }
}

/// Default cap for `ζ`: its jump count is Poisson(T), so `T + 20√T + 1000`
/// is never reached in practice.
pub fn reference_jump_cap(horizon: f64) -> u64 {
    (horizon + 20.0 * horizon.sqrt() + 1000.0).ceil() as u64
}

pub(crate) enum WalkEnd {
    Finished(SimStatus),
    /// The hold visitor asked to stop.
    Rejected,
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("T", format!("horizon must be finite and > 0, got {horizon}")))
    }
}

fn check_cap(jump_cap: u64) -> Result<()> {
    if jump_cap == 0 {
        Err(Error::invalid("jump_cap", "must be >= 1"))
    } else {
        Ok(())
    }
}

/// Core loop for `ξ`. `visit` sees every completed constancy interval (the
/// final one ends at the horizon); returning `false` aborts the walk.
pub(crate) fn walk_bdp<R, V>(
    model: &RateModel,
    horizon: f64,
    limits: &SimLimits,
    rng: &mut R,
    mut record: Option<(&mut Vec<f64>, &mut Vec<i8>)>,
    mut visit: V,
) -> Result<WalkEnd>
where
    R: Rng + ?Sized,
    V: FnMut(Hold) -> bool,
{
    let started = limits.wall_clock.map(|budget| (Instant::now(), budget));
    let mut x: u64 = 0;
    let mut t = 0.0_f64;
    let mut jumps: u64 = 0;
    loop {
        let birth = model.birth_rate(x);
        let death = model.death_rate(x);
        if !(birth.is_finite() && birth > 0.0) {
            return Err(Error::RateEvaluation {
                which: "birth",
                state: x as i64,
                value: birth,
            });
        }
        if !(death.is_finite() && death >= 0.0) {
            return Err(Error::RateEvaluation {
                which: "death",
                state: x as i64,
                value: death,
            });
        }
        let total = birth + death;
        let hold: f64 = rng.sample::<f64, _>(Exp1) / total;
        let next = t + hold;
        if next > horizon {
            return Ok(if visit(Hold { state: x as i64, from: t, to: horizon }) {
                WalkEnd::Finished(SimStatus::Completed)
            } else {
                WalkEnd::Rejected
            });
        }
        if !visit(Hold { state: x as i64, from: t, to: next }) {
            return Ok(WalkEnd::Rejected);
        }
        // μ(0) = 0 makes `up` certain at the origin.
        let up = rng.random::<f64>() * total < birth;
        if let Some((times, signs)) = record.as_mut() {
            times.push(next);
            signs.push(if up { 1 } else { -1 });
        }
        x = if up { x + 1 } else { x - 1 };
        t = next;
        jumps += 1;
        if jumps >= limits.jump_cap {
            return Ok(WalkEnd::Finished(SimStatus::Exploded {
                jump_cap: limits.jump_cap,
            }));
        }
        if let Some((start, budget)) = started {
            if jumps.is_multiple_of(4096) && start.elapsed() > budget {
                return Ok(WalkEnd::Finished(SimStatus::Truncated {
                    reason: Truncation::WallClock,
                }));
            }
        }
    }
}

/// Samples `ξ` on `[0, T]` from state 0 with the caller's generator.
pub fn simulate_bdp_with<R: Rng + ?Sized>(
    model: &RateModel,
    horizon: f64,
    limits: &SimLimits,
    rng: &mut R,
) -> Result<SimOutcome> {
    check_horizon(horizon)?;
    check_cap(limits.jump_cap)?;
    let mut times = Vec::new();
    let mut signs = Vec::new();
    let end = walk_bdp(model, horizon, limits, rng, Some((&mut times, &mut signs)), |_| true)?;
    let status = match end {
        WalkEnd::Finished(s) => s,
        WalkEnd::Rejected => unreachable!("visitor never rejects"),
    };
    Ok(SimOutcome {
        path: JumpPath::from_parts_unchecked(horizon, 0, times, signs),
        status,
    })
}

/// Samples `ξ` on `[0, T]` using stream 0 of `seed`.
pub fn simulate_bdp(model: &RateModel, horizon: f64, seed: u64, jump_cap: u64) -> Result<SimOutcome> {
    simulate_bdp_with(model, horizon, &SimLimits::jump_cap(jump_cap), &mut replica_rng(seed, 0))
}

/// Samples the reference walk `ζ` on `[0, T]` from state 0.
pub fn simulate_reference_with<R: Rng + ?Sized>(horizon: f64, jump_cap: u64, rng: &mut R) -> Result<SimOutcome> {
    check_horizon(horizon)?;
    check_cap(jump_cap)?;
    let mut times = Vec::new();
    let mut signs = Vec::new();
    let mut t = 0.0_f64;
    let status = loop {
        t += rng.sample::<f64, _>(Exp1);
        if t > horizon {
            break SimStatus::Completed;
        }
        if times.len() as u64 >= jump_cap {
            break SimStatus::Truncated {
                reason: Truncation::JumpCap,
            };
        }
        times.push(t);
        signs.push(if rng.random::<bool>() { 1 } else { -1 });
    };
    Ok(SimOutcome {
        path: JumpPath::from_parts_unchecked(horizon, 0, times, signs),
        status,
    })
}

pub fn simulate_reference(horizon: f64, seed: u64, jump_cap: u64) -> Result<SimOutcome> {
    simulate_reference_with(horizon, jump_cap, &mut replica_rng(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_is_rejected() {
        let model = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(simulate_bdp(&model, 0.0, 1, 100).is_err());
        assert!(simulate_reference(0.0, 1, 100).is_err());
        assert!(simulate_bdp(&model, 1.0, 1, 0).is_err());
    }

    #[test]
    fn same_seed_same_path() {
        let model = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
        let a = simulate_bdp(&model, 5.0, 42, 100_000).unwrap();
        let b = simulate_bdp(&model, 5.0, 42, 100_000).unwrap();
        assert_eq!(a, b);
        let c = simulate_bdp(&model, 5.0, 43, 100_000).unwrap();
        assert_ne!(a.path, c.path);
    }

    #[test]
    fn zero_jump_path_when_first_hold_exceeds_horizon() {
        // λ(0) = 1e-9: the first holding time almost surely exceeds T.
        let model = RateModel::power(1e-9, 1.0, 1.0, 0.0).unwrap();
        let out = simulate_bdp(&model, 1.0, 3, 10).unwrap();
        assert!(out.status.is_completed());
        assert_eq!(out.path.jump_count(), 0);
    }

    #[test]
    fn paths_stay_nonnegative() {
        let model = RateModel::power(1.0, 0.0, 5.0, 1.0).unwrap();
        for seed in 0..200 {
            let out = simulate_bdp(&model, 20.0, seed, 1_000_000).unwrap();
            assert!(out.path.is_nonnegative());
            assert!(out.status.is_completed());
        }
    }

    #[test]
    fn cap_reached_means_exploded() {
        let model = RateModel::power(1.0, 2.0, 1.0, 0.0).unwrap();
        let out = simulate_bdp(&model, 10.0, 9, 1000).unwrap();
        assert_eq!(out.status, SimStatus::Exploded { jump_cap: 1000 });
        assert_eq!(out.path.jump_count(), 1000);
    }

    #[test]
    fn reference_cap_truncates() {
        let out = simulate_reference(100.0, 5, 3).unwrap();
        assert!(matches!(out.status, SimStatus::Truncated { reason: Truncation::JumpCap }));
        assert_eq!(out.path.jump_count(), 3);
    }

    #[test]
    fn non_finite_rate_names_state() {
        use std::sync::Arc;
        let birth: crate::model::RateFn = Arc::new(|x| if x >= 3 { f64::NAN } else { 1.0 });
        let death: crate::model::RateFn = Arc::new(|_| 0.0);
        let asym = crate::model::Asymptotics {
            p_l: 1.0,
            l: 1.0,
            q_m: 0.0,
            m: 0.0,
        };
        let model = RateModel::custom(birth, death, asym).unwrap();
        let err = simulate_bdp(&model, 1e6, 1, 100).unwrap_err();
        assert!(matches!(err, Error::RateEvaluation { state: 3, .. }), "{err}");
    }
}
