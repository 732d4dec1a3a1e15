//! Large-deviation tools for birth-death processes with polynomial rates.
//!
//! A birth-death process `ξ` on `{0, 1, 2, ...}` with birth rate `λ(x)` and
//! death rate `μ(x)` is compared against a reference symmetric walk `ζ` with
//! unit jump rate. The crate simulates both, evaluates the Radon–Nikodym
//! functionals between their path laws, computes the rate functional `I(f)`
//! for the rescaled process `ξ_T(t) = ξ(tT)/T`, and estimates tube
//! probabilities `P(sup_t |ξ_T(t) - f(t)| < ε)` by direct Monte Carlo,
//! importance sampling under `ζ`, or exact taboo-probability propagation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod appendix;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod measure;
pub mod model;
pub mod oracle;
pub mod path;
pub mod profile;
pub mod rate_functional;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod tube;
pub mod verify;

pub use error::{Error, Result};
pub use estimators::{estimate_direct, estimate_importance, normalized_decay, EstimateReport, EstimatorConfig, Method};
pub use measure::{compute_functionals, log_density, PathFunctionals};
pub use model::{Asymptotics, ModelSpec, PowerTail, RateModel};
pub use oracle::{tube_probability_exact, OracleConfig, OracleResult};
pub use path::{JumpPath, ScaledPath};
pub use profile::{ProfileSpec, TargetProfile};
pub use rate_functional::{classify, rate_functional, yule_rate_functional, Regime, RegimeClassification};
pub use simulate::{simulate_bdp, simulate_reference, SimLimits, SimOutcome, SimStatus};
pub use tube::{tube_membership, TubeDecision, TubeSpec};
