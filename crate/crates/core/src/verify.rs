//! Named verification gates: measure identities, analytic anchors, Poisson
//! product identities, sequence counts and oracle cross-checks.

use serde::Serialize;

use crate::appendix::{
    bounded_sequence_bound, brute_force_count, count_bounded_sequences, poisson_product_gap_bound,
    poisson_product_mean, poisson_product_mean_mc, poisson_product_total, poisson_product_total_mc, GFunction,
};
use crate::error::{Error, Result};
use crate::estimators::{estimate_importance, EstimatorConfig};
use crate::measure::{compute_functionals, log_density};
use crate::model::{RateModel, ValidationConfig};
use crate::oracle::{tube_probability_exact, OracleConfig};
use crate::profile::TargetProfile;
use crate::rate_functional::{rate_functional, DEFAULT_QUAD_POINTS};
use crate::rng::derive_seed;
use crate::simulate::{reference_jump_cap, simulate_reference_with};
use crate::tube::TubeSpec;

pub const GATES: [&str; 10] = [
    "asymptotic",
    "density_identity",
    "rate_anchors",
    "poisson_product_mean",
    "poisson_gap_bound",
    "poisson_total",
    "bounded_sequences_dp",
    "bounded_sequences_bound",
    "oracle_refinement",
    "is_vs_oracle",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateResult {
    pub gate: String,
    pub passed: bool,
    /// The worst observed statistic.
    pub value: f64,
    /// The threshold it is compared against.
    pub bound: f64,
    /// Distance to failure; negative when the gate fails.
    pub margin: f64,
    pub detail: String,
}

impl GateResult {
    fn at_most(gate: &str, value: f64, bound: f64, detail: String) -> Self {
        Self {
            gate: gate.to_string(),
            passed: value <= bound,
            value,
            bound,
            margin: bound - value,
            detail,
        }
    }

    fn at_least(gate: &str, value: f64, bound: f64, detail: String) -> Self {
        Self {
            gate: gate.to_string(),
            passed: value >= bound,
            value,
            bound,
            margin: value - bound,
            detail,
        }
    }
}

#[derive(Clone)]
pub struct VerifyConfig {
    /// Model checked by the `asymptotic` gate.
    pub model: RateModel,
    pub seed: u64,
    /// Monte Carlo sample size for the Poisson product gates.
    pub samples: u64,
    /// Random `ζ` paths per `(model, T)` in the density gate.
    pub density_paths: u64,
    pub threads: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            model: RateModel::power(1.0, 1.0, 1.0, 0.0).expect("valid default model"),
            seed: 20_240_601,
            samples: 100_000,
            density_paths: 10_000,
            threads: None,
        }
    }
}

/// One model per regime: birth dominant, balanced, death dominant.
pub fn regime_models() -> [(&'static str, RateModel); 3] {
    [
        ("birth_dominant", RateModel::power(1.0, 1.0, 1.0, 0.0).expect("valid")),
        ("balanced", RateModel::power(4.0, 1.0, 1.0, 1.0).expect("valid")),
        ("death_dominant", RateModel::power(1.0, 0.0, 3.0, 2.0).expect("valid")),
    ]
}

pub fn run_gate(name: &str, cfg: &VerifyConfig) -> Result<GateResult> {
    match name {
        "asymptotic" => Ok(asymptotic(cfg)),
        "density_identity" => density_identity(cfg),
        "rate_anchors" => rate_anchors(),
        "poisson_product_mean" => poisson_mean_grid(cfg),
        "poisson_gap_bound" => poisson_gap(cfg),
        "poisson_total" => poisson_total(cfg),
        "bounded_sequences_dp" => bounded_dp(),
        "bounded_sequences_bound" => bounded_bound(),
        "oracle_refinement" => oracle_refinement(),
        "is_vs_oracle" => is_vs_oracle(cfg),
        other => Err(Error::invalid("only", format!("unknown gate `{other}`"))),
    }
}

/// Runs the named gates (all of them when `only` is empty), in [`GATES`] order.
pub fn run_gates(only: &[String], cfg: &VerifyConfig) -> Result<Vec<GateResult>> {
    if let Some(bad) = only.iter().find(|o| !GATES.contains(&o.as_str())) {
        return Err(Error::invalid(
            "only",
            format!("unknown gate `{bad}`; known gates: {}", GATES.join(", ")),
        ));
    }
    GATES
        .iter()
        .filter(|g| only.is_empty() || only.iter().any(|o| o == *g))
        .map(|g| run_gate(g, cfg))
        .collect()
}

fn asymptotic(cfg: &VerifyConfig) -> GateResult {
    let (passed, detail) = match cfg.model.validate(&ValidationConfig::default()) {
        Ok(()) => (true, "rates match declared asymptotics".to_string()),
        Err(e) => (false, e.to_string()),
    };
    GateResult {
        gate: "asymptotic".into(),
        passed,
        value: if passed { 0.0 } else { 1.0 },
        bound: 0.0,
        margin: if passed { 0.0 } else { -1.0 },
        detail,
    }
}

/// Largest relative gap between the term-by-term log density and
/// `T - A_T + B_T + N ln 2` over random `ζ` paths.
pub fn density_identity_max_error(models: &[RateModel], horizons: &[f64], paths: u64, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (mi, model) in models.iter().enumerate() {
        for (ti, &t) in horizons.iter().enumerate() {
            let stream = derive_seed(seed, (mi * horizons.len() + ti) as u64);
            for i in 0..paths {
                let mut rng = crate::rng::replica_rng(stream, i);
                let out = simulate_reference_with(t, reference_jump_cap(t), &mut rng)?;
                let direct = log_density(model, &out.path);
                let via = compute_functionals(model, &out.path).log_weight(t);
                let err = if direct == f64::NEG_INFINITY && via == f64::NEG_INFINITY {
                    0.0
                } else {
                    (direct - via).abs() / direct.abs().max(1.0)
                };
                worst = worst.max(err);
            }
        }
    }
    Ok(worst)
}

fn density_identity(cfg: &VerifyConfig) -> Result<GateResult> {
    let models: Vec<RateModel> = regime_models().into_iter().map(|(_, m)| m).collect();
    let horizons = [1.0, 5.0, 20.0];
    let worst = density_identity_max_error(&models, &horizons, cfg.density_paths, cfg.seed)?;
    Ok(GateResult::at_most(
        "density_identity",
        worst,
        1e-10,
        format!("{} paths per (model, T), T in {horizons:?}", cfg.density_paths),
    ))
}

fn rate_anchors() -> Result<GateResult> {
    let anchors = [
        (RateModel::power(2.0, 1.0, 1.0, 0.0)?, 1.0),
        (RateModel::power(4.0, 1.0, 1.0, 1.0)?, 0.5),
        (RateModel::power(1.0, 0.0, 3.0, 2.0)?, 1.0),
    ];
    let f = TargetProfile::linear();
    let mut worst: f64 = 0.0;
    for (model, expected) in &anchors {
        let v = rate_functional(model, &f, DEFAULT_QUAD_POINTS)?;
        worst = worst.max((v - expected).abs() / expected);
    }
    Ok(GateResult::at_most("rate_anchors", worst, 1e-9, "I = 1, 0.5, 1 for f(t) = t".into()))
}

fn g_grid() -> [(&'static str, GFunction); 3] {
    [
        ("1", GFunction::Const(1.0)),
        ("s", GFunction::Identity),
        ("s^2", GFunction::Square),
    ]
}

fn poisson_mean_grid(cfg: &VerifyConfig) -> Result<GateResult> {
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    let mut idx = 0;
    for (name, g) in g_grid() {
        for t in [1.0, 2.0, 4.0] {
            for n in 1..=6 {
                let exact = poisson_product_mean(&g, n, t)?;
                let mc = poisson_product_mean_mc(&g, n, t, cfg.samples, derive_seed(cfg.seed, idx))?;
                idx += 1;
                let z = mc.z_score(exact);
                if z > worst {
                    worst = z;
                    at = format!("g = {name}, T = {t}, n = {n}");
                }
            }
        }
    }
    Ok(GateResult::at_most("poisson_product_mean", worst, 3.0, format!("max |z| at {at}")))
}

fn poisson_gap(cfg: &VerifyConfig) -> Result<GateResult> {
    let cases = [
        (GFunction::Const(1.0), 6, 4.0, 0.5),
        (GFunction::Identity, 3, 2.0, 0.5),
        (GFunction::Const(2.0), 2, 1.0, 0.25),
        (GFunction::Const(1.0), 12, 4.0, 1.0),
    ];
    let mut worst = f64::NEG_INFINITY;
    for (i, (g, n, t, delta)) in cases.iter().enumerate() {
        let c = poisson_product_gap_bound(g, *n, *t, *delta, cfg.samples, derive_seed(cfg.seed, 100 + i as u64))?;
        // excess of the estimate over the bound, in standard errors
        let excess = if c.lhs.std_error > 0.0 {
            (c.lhs.mean - c.rhs) / c.lhs.std_error
        } else if c.lhs.mean > c.rhs {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        worst = worst.max(excess);
    }
    Ok(GateResult::at_most(
        "poisson_gap_bound",
        worst,
        3.0,
        "max (lhs - rhs)/se over the case list".into(),
    ))
}

fn poisson_total(cfg: &VerifyConfig) -> Result<GateResult> {
    let mut worst: f64 = 0.0;
    for (i, (g, t)) in [(GFunction::Const(1.0), 1.0), (GFunction::Const(2.0), 1.0), (GFunction::Identity, 2.0)]
        .iter()
        .enumerate()
    {
        let exact = poisson_product_total(g, *t)?;
        let mc = poisson_product_total_mc(g, *t, cfg.samples, derive_seed(cfg.seed, 200 + i as u64))?;
        worst = worst.max(mc.z_score(exact));
    }
    Ok(GateResult::at_most("poisson_total", worst, 3.0, "max |z|".into()))
}

fn bounded_dp() -> Result<GateResult> {
    let mut mismatches = 0u32;
    for n in 1..=20u32 {
        for d in 1..=5u32 {
            let dp = count_bounded_sequences(n, d)?.count;
            if dp != brute_force_count(n, d)?.into() {
                mismatches += 1;
            }
        }
    }
    Ok(GateResult::at_most(
        "bounded_sequences_dp",
        mismatches as f64,
        0.0,
        "DP vs exhaustive enumeration for n <= 20, d <= 5".into(),
    ))
}

fn bounded_bound() -> Result<GateResult> {
    let mut worst = f64::INFINITY;
    let mut detail = Vec::new();
    for t in [50.0, 100.0] {
        let c = bounded_sequence_bound(t, 0.2, 1.5, 0.1)?;
        worst = worst.min(c.margin());
        detail.push(format!("T={t}: n={} d={} ln(c/2^n)={:.4}", c.n, c.d, c.log_fraction));
    }
    Ok(GateResult::at_least("bounded_sequences_bound", worst, 0.0, detail.join("; ")))
}

/// Instances used by the oracle gates.
pub fn oracle_instances() -> Vec<(RateModel, TubeSpec)> {
    let lin = TargetProfile::linear();
    vec![
        (
            RateModel::power(1.0, 1.0, 1.0, 0.0).expect("valid"),
            TubeSpec::new(lin.clone(), 0.5, 2.0).expect("valid"),
        ),
        (
            RateModel::power(4.0, 1.0, 1.0, 1.0).expect("valid"),
            TubeSpec::new(lin.clone(), 0.75, 1.5).expect("valid"),
        ),
        (
            RateModel::power(1.0, 0.0, 3.0, 2.0).expect("valid"),
            TubeSpec::new(lin, 0.75, 2.0).expect("valid"),
        ),
    ]
}

fn oracle_refinement() -> Result<GateResult> {
    let mut worst = f64::NEG_INFINITY;
    for (model, tube) in oracle_instances() {
        let mut prev_gap = f64::INFINITY;
        for k in [64, 128, 256, 512] {
            let r = tube_probability_exact(
                &model,
                &tube,
                &OracleConfig {
                    time_slices: k,
                    ..Default::default()
                },
            )?;
            let gap = r.log_outer - r.log_inner;
            worst = worst.max(gap - prev_gap);
            prev_gap = gap;
        }
    }
    Ok(GateResult::at_most(
        "oracle_refinement",
        worst,
        0.0,
        "largest increase of the log bracket width when slices double".into(),
    ))
}

/// `|estimate - bracket| / se`, zero inside the bracket.
pub fn bracket_z(estimate: f64, se: f64, inner: f64, outer: f64) -> f64 {
    let dist = if estimate < inner {
        inner - estimate
    } else if estimate > outer {
        estimate - outer
    } else {
        0.0
    };
    if dist == 0.0 {
        0.0
    } else {
        dist / se
    }
}

fn is_vs_oracle(cfg: &VerifyConfig) -> Result<GateResult> {
    let model = RateModel::power(1.0, 1.0, 1.0, 0.0)?;
    let tube = TubeSpec::new(TargetProfile::linear(), 0.5, 2.0)?;
    let oracle = tube_probability_exact(&model, &tube, &OracleConfig::default())?;
    let est_cfg = EstimatorConfig::new(cfg.samples, derive_seed(cfg.seed, 300)).with_threads(cfg.threads);
    let is = estimate_importance(&model, &tube, &est_cfg)?;
    let z = bracket_z(is.log_prob_estimate, is.std_error_log, oracle.log_inner, oracle.log_outer);
    Ok(GateResult::at_most(
        "is_vs_oracle",
        z,
        3.0,
        format!(
            "IS {:.5} (se {:.5}) vs bracket [{:.5}, {:.5}]",
            is.log_prob_estimate, is.std_error_log, oracle.log_inner, oracle.log_outer
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbed_model_fails_asymptotic_gate() {
        let cfg = VerifyConfig {
            model: RateModel::power_scaled(1.0, 1.0, 1.0, 0.0, 1.5).unwrap(),
            ..Default::default()
        };
        let r = run_gate("asymptotic", &cfg).unwrap();
        assert!(!r.passed);
        assert!(r.detail.contains("birth"), "{}", r.detail);
        assert!(run_gate("asymptotic", &VerifyConfig::default()).unwrap().passed);
    }

    #[test]
    fn unknown_gate_is_a_validation_error() {
        let err = run_gates(&["nope".into()], &VerifyConfig::default()).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn cheap_gates_pass() {
        let cfg = VerifyConfig::default();
        for g in ["rate_anchors", "bounded_sequences_bound", "oracle_refinement"] {
            let r = run_gate(g, &cfg).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn bracket_distance() {
        assert_eq!(bracket_z(-1.0, 0.1, -1.2, -0.9), 0.0);
        assert!((bracket_z(-1.5, 0.1, -1.2, -0.9) - 3.0).abs() < 1e-12);
    }
}
