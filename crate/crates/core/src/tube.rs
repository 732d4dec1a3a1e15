//! Uniform-norm tubes `U_ε(f) = {g : sup_{[0,1]} |f - g| < ε}` and exact
//! membership tests for rescaled step paths.
//!
//! On each constancy interval `[s_i, s_{i+1})` the rescaled path equals a
//! constant `c_i`, so `sup |f - c_i| = max(max f - c_i, c_i - min f)` over
//! that interval. Interval extrema come from [`TargetProfile::range_on`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::{Hold, JumpPath};
use crate::profile::TargetProfile;
use crate::simulate::SimOutcome;

/// Distances within this margin of `ε` count as boundary cases and are
/// reported as non-members.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// The event `{ρ(f, ξ_T) < ε}` at horizon `T`.
#[derive(Debug, Clone)]
pub struct TubeSpec {
    pub profile: TargetProfile,
    pub epsilon: f64,
    pub horizon: f64,
}

impl TubeSpec {
    pub fn new(profile: TargetProfile, epsilon: f64, horizon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be finite and > 0, got {epsilon}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("T", format!("must be finite and > 0, got {horizon}")));
        }
        profile.validate()?;
        Ok(Self {
            profile,
            epsilon,
            horizon,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeDecision {
    pub member: bool,
    /// `sup_t |f(t) - ξ_T(t)|`; `+∞` for exploded or truncated paths.
    pub sup_distance: f64,
    /// `|sup_distance - ε| ≤ BOUNDARY_TOLERANCE`.
    pub boundary: bool,
    /// Width of the band `[sup_distance, sup_distance + uncertainty]` known to
    /// contain the true distance. Zero for built-in profiles.
    pub uncertainty: f64,
}

impl TubeDecision {
    fn outside() -> Self {
        Self {
            member: false,
            sup_distance: f64::INFINITY,
            boundary: false,
            uncertainty: 0.0,
        }
    }
}

/// `(sup_{[s0, s1]} |f - c|, slack)`.
#[inline]
pub fn interval_distance(profile: &TargetProfile, s0: f64, s1: f64, c: f64) -> (f64, f64) {
    let r = profile.range_on(s0, s1);
    ((r.max - c).max(c - r.min), r.slack)
}

#[inline]
fn hold_distance(profile: &TargetProfile, horizon: f64, hold: Hold) -> (f64, f64) {
    interval_distance(profile, hold.from / horizon, hold.to / horizon, hold.state as f64 / horizon)
}

/// Decides `ρ(f, ξ_T) < ε` for a complete path.
pub fn tube_membership(path: &JumpPath, profile: &TargetProfile, epsilon: f64) -> TubeDecision {
    let horizon = path.horizon();
    let mut sup: f64 = 0.0;
    let mut uncertainty: f64 = 0.0;
    for hold in path.holds() {
        let (d, slack) = hold_distance(profile, horizon, hold);
        sup = sup.max(d);
        uncertainty = uncertainty.max(slack);
    }
    let boundary = (sup - epsilon).abs() <= BOUNDARY_TOLERANCE;
    TubeDecision {
        member: sup < epsilon && !boundary,
        sup_distance: sup,
        boundary,
        uncertainty,
    }
}

/// As [`tube_membership`], with exploded and truncated paths outside every tube.
pub fn tube_membership_outcome(outcome: &SimOutcome, profile: &TargetProfile, epsilon: f64) -> TubeDecision {
    if outcome.status.is_completed() {
        tube_membership(&outcome.path, profile, epsilon)
    } else {
        TubeDecision::outside()
    }
}

/// Incremental membership check, fed one constancy interval at a time.
/// Agrees with [`tube_membership`] on every complete path.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TubeMonitor<'a> {
    profile: &'a TargetProfile,
    epsilon: f64,
    horizon: f64,
}

impl<'a> TubeMonitor<'a> {
    pub(crate) fn new(tube: &'a TubeSpec) -> Self {
        Self {
            profile: &tube.profile,
            epsilon: tube.epsilon,
            horizon: tube.horizon,
        }
    }

    #[inline]
    pub(crate) fn admits(&self, hold: Hold) -> bool {
        let (d, _) = hold_distance(self.profile, self.horizon, hold);
        d < self.epsilon && (d - self.epsilon).abs() > BOUNDARY_TOLERANCE
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{SimOutcome, SimStatus};

    #[test]
    fn unit_staircase_is_a_member() {
        let t = 10.0;
        let times: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let path = JumpPath::new(t, 0, times, vec![1; 10]).unwrap();
        let d = tube_membership(&path, &TargetProfile::linear(), 0.2);
        assert!(d.member);
        assert!((d.sup_distance - 0.1).abs() < 1e-12, "{d:?}");
        assert_eq!(d.uncertainty, 0.0);
    }

    #[test]
    fn empty_path_misses_linear_tube() {
        let path = JumpPath::empty(5.0).unwrap();
        let d = tube_membership(&path, &TargetProfile::linear(), 0.5);
        assert!(!d.member);
        assert_eq!(d.sup_distance, 1.0);
    }

    #[test]
    fn exploded_path_is_outside() {
        let outcome = SimOutcome {
            path: JumpPath::empty(1.0).unwrap(),
            status: SimStatus::Exploded { jump_cap: 10 },
        };
        let d = tube_membership_outcome(&outcome, &TargetProfile::linear(), 100.0);
        assert!(!d.member);
        assert!(d.sup_distance.is_infinite());
    }

    #[test]
    fn boundary_distance_is_flagged_non_member() {
        let path = JumpPath::empty(5.0).unwrap();
        let d = tube_membership(&path, &TargetProfile::linear(), 1.0);
        assert!(d.boundary);
        assert!(!d.member);
    }

    #[test]
    fn monitor_matches_full_check() {
        let path = JumpPath::new(4.0, 0, vec![0.5, 1.5, 2.0, 3.9], vec![1, 1, -1, 1]).unwrap();
        let profile = TargetProfile::power(0.5).unwrap();
        for eps in [0.1, 0.3, 0.5, 0.7, 1.0] {
            let tube = TubeSpec::new(profile.clone(), eps, 4.0).unwrap();
            let monitor = TubeMonitor::new(&tube);
            let incremental = path.holds().all(|h| monitor.admits(h));
            assert_eq!(incremental, tube_membership(&path, &profile, eps).member, "eps = {eps}");
        }
    }

    #[test]
    fn tube_spec_validation() {
        assert!(TubeSpec::new(TargetProfile::linear(), 0.0, 1.0).is_err());
        assert!(TubeSpec::new(TargetProfile::linear(), 0.1, -1.0).is_err());
        assert!(TubeSpec::new(TargetProfile::linear(), 0.1, 1.0).is_ok());
    }
}
