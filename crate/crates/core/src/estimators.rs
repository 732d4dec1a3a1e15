//! Tube-probability estimators and the normalized decay table.
//!
//! * Direct Monte Carlo samples `ξ` and counts tube hits.
//! * Importance sampling samples the reference walk `ζ` and weights each
//!   in-tube path by `exp(T - A_T + B_T + N ln 2)`.
//! * The exact oracle result can be wrapped in the same report type.
//!
//! Replicas use per-index random streams and are aggregated in index order,
//! so results do not depend on the number of worker threads.

use std::f64::consts::LN_2;
use std::time::Duration;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::RateModel;
use crate::oracle::{tube_probability_exact, OracleConfig};
use crate::path::Hold;
use crate::profile::TargetProfile;
use crate::rate_functional::{classify, rate_functional, Regime, DEFAULT_QUAD_POINTS};
use crate::report::config_digest;
use crate::rng::{run_range, with_pool, SimRng};
use crate::simulate::{reference_jump_cap, walk_bdp, SimLimits, SimStatus, WalkEnd};
use crate::stats::{clopper_pearson, LogWeightSums};
use crate::tube::{TubeMonitor, TubeSpec};

pub const FLAG_NO_HITS: &str = "no hits; use importance sampling";
pub const FLAG_NO_ADMISSIBLE: &str = "no admissible ζ paths";
pub const FLAG_FEW_HITS: &str = "fewer than 10 hits; interval is Clopper-Pearson";
pub const FLAG_FEW_WEIGHTED: &str = "fewer than 10 weighted hits; standard error unreliable";
pub const FLAG_ABOVE_ONE: &str = "estimate exceeds probability 1 by more than 3 standard errors";
pub const FLAG_ZETA_TRUNCATED: &str = "some ζ replicas hit the jump cap and were given zero weight";

/// Default jump cap for `ξ` in direct sampling.
pub const DEFAULT_BDP_JUMP_CAP: u64 = 1_000_000;
const CHUNK: u64 = 1 << 18;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Direct,
    ImportanceSampling,
    ExactOracle,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::ImportanceSampling => "is",
            Method::ExactOracle => "oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub replicas: u64,
    pub master_seed: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
    /// Jump cap for `ξ` (direct) or `ζ` (importance sampling). `None` picks
    /// [`DEFAULT_BDP_JUMP_CAP`] or [`reference_jump_cap`].
    pub jump_cap: Option<u64>,
    /// Per-replica wall-clock limit for `ξ`.
    pub wall_clock: Option<Duration>,
}

impl EstimatorConfig {
    pub fn new(replicas: u64, master_seed: u64) -> Self {
        Self {
            replicas,
            master_seed,
            threads: None,
            jump_cap: None,
            wall_clock: None,
        }
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub method: Method,
    pub horizon: f64,
    pub epsilon: f64,
    pub profile: String,
    /// `ln P̂`; `-∞` when nothing was hit.
    pub log_prob_estimate: f64,
    /// Standard error of `ln P̂` (delta method).
    pub std_error_log: f64,
    /// 95% interval for `ln P`.
    pub log_ci: (f64, f64),
    pub replicas: u64,
    pub hits: u64,
    /// `-ln P̂ / ψ(T)`.
    pub normalized_value: f64,
    pub psi_exponent: f64,
    pub effective_sample_size: f64,
    pub exploded: u64,
    pub truncated: u64,
    pub master_seed: u64,
    pub config_digest: String,
    pub flags: Vec<String>,
}

impl EstimateReport {
    pub fn normalized_std_error(&self) -> f64 {
        self.std_error_log / self.horizon.powf(self.psi_exponent)
    }
}

fn check_replicas(cfg: &EstimatorConfig) -> Result<()> {
    if cfg.replicas == 0 {
        return Err(Error::invalid("replicas", "must be >= 1"));
    }
    if cfg.jump_cap == Some(0) {
        return Err(Error::invalid("jump_cap", "must be >= 1"));
    }
    Ok(())
}

fn run_digest(method: Method, model: &RateModel, tube: &TubeSpec, cfg: &EstimatorConfig, cap: u64) -> Result<String> {
    config_digest(&json!({
        "method": method.as_str(),
        "asymptotics": model.asymptotics(),
        "profile": tube.profile.label(),
        "epsilon": tube.epsilon,
        "T": tube.horizon,
        "replicas": cfg.replicas,
        "seed": cfg.master_seed,
        "jump_cap": cap,
    }))
}

/// Runs replicas in chunks on the configured pool, handing each chunk's
/// results (in replica order) to `sink`.
fn for_each_chunk<T, F, S>(cfg: &EstimatorConfig, job: F, mut sink: S) -> Result<()>
where
    T: Send,
    F: Fn(u64, &mut SimRng) -> T + Sync + Send,
    S: FnMut(Vec<T>) -> Result<()> + Send,
{
    with_pool(cfg.threads, || {
        let mut start = 0;
        while start < cfg.replicas {
            let end = (start + CHUNK).min(cfg.replicas);
            sink(run_range(start..end, cfg.master_seed, &job))?;
            start = end;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DirectEnd {
    Hit,
    Miss,
    Exploded,
    Truncated,
}

/// Direct Monte Carlo estimate of `P(ρ(f, ξ_T) < ε)`.
pub fn estimate_direct(model: &RateModel, tube: &TubeSpec, cfg: &EstimatorConfig) -> Result<EstimateReport> {
    check_replicas(cfg)?;
    let cap = cfg.jump_cap.unwrap_or(DEFAULT_BDP_JUMP_CAP);
    let limits = SimLimits {
        jump_cap: cap,
        wall_clock: cfg.wall_clock,
    };
    let monitor = TubeMonitor::new(tube);
    let job = |_i: u64, rng: &mut SimRng| -> Result<DirectEnd> {
        let end = walk_bdp(model, tube.horizon, &limits, rng, None, |h| monitor.admits(h))?;
        Ok(match end {
            WalkEnd::Rejected => DirectEnd::Miss,
            WalkEnd::Finished(SimStatus::Completed) => DirectEnd::Hit,
            WalkEnd::Finished(SimStatus::Exploded { .. }) => DirectEnd::Exploded,
            WalkEnd::Finished(SimStatus::Truncated { .. }) => DirectEnd::Truncated,
        })
    };
    let (mut hits, mut exploded, mut truncated) = (0u64, 0u64, 0u64);
    for_each_chunk(cfg, job, |chunk| {
        for end in chunk {
            match end? {
                DirectEnd::Hit => hits += 1,
                DirectEnd::Miss => {}
                DirectEnd::Exploded => exploded += 1,
                DirectEnd::Truncated => truncated += 1,
            }
        }
        Ok(())
    })?;

    let n = cfg.replicas;
    let p = hits as f64 / n as f64;
    let mut flags = Vec::new();
    let (log_prob, se) = if hits == 0 {
        flags.push(FLAG_NO_HITS.to_string());
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        (p.ln(), ((1.0 - p) / hits as f64).sqrt())
    };
    let log_ci = if hits < 10 {
        if hits > 0 {
            flags.push(FLAG_FEW_HITS.to_string());
        }
        let (lo, hi) = clopper_pearson(hits, n, 0.05);
        (lo.ln(), hi.ln())
    } else {
        (log_prob - Z95 * se, log_prob + Z95 * se)
    };
    let class = classify(model);
    Ok(EstimateReport {
        method: Method::Direct,
        horizon: tube.horizon,
        epsilon: tube.epsilon,
        profile: tube.profile.label().to_string(),
        log_prob_estimate: log_prob,
        std_error_log: se,
        log_ci,
        replicas: n,
        hits,
        normalized_value: -log_prob / class.psi(tube.horizon),
        psi_exponent: class.psi_exponent,
        effective_sample_size: hits as f64,
        exploded,
        truncated,
        master_seed: cfg.master_seed,
        config_digest: run_digest(Method::Direct, model, tube, cfg, cap)?,
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ZetaEnd {
    Miss,
    Truncated,
    Hit(f64),
}

/// One `ζ` replica: samples the walk, checks the tube on the fly and
/// accumulates `T - A_T + B_T + N ln 2`. Paths that step below zero have
/// zero density and are misses.
fn zeta_replica(
    model: &RateModel,
    monitor: &TubeMonitor<'_>,
    horizon: f64,
    cap: u64,
    rng: &mut SimRng,
) -> Result<ZetaEnd> {
    let mut x: u64 = 0;
    let mut t = 0.0_f64;
    let mut a_t = 0.0;
    let mut b_t = 0.0;
    let mut n: u64 = 0;
    loop {
        let next = t + rng.sample::<f64, _>(Exp1);
        let to = next.min(horizon);
        if !monitor.admits(Hold {
            state: x as i64,
            from: t,
            to,
        }) {
            return Ok(ZetaEnd::Miss);
        }
        let h = model.total_rate(x);
        if !h.is_finite() {
            return Err(Error::RateEvaluation {
                which: "total",
                state: x as i64,
                value: h,
            });
        }
        a_t += h * (to - t);
        if next > horizon {
            return Ok(ZetaEnd::Hit(horizon - a_t + b_t + n as f64 * LN_2));
        }
        if n >= cap {
            return Ok(ZetaEnd::Truncated);
        }
        let up = rng.random::<bool>();
        let nu = if up { model.birth_rate(x) } else { model.death_rate(x) };
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::RateEvaluation {
                which: if up { "birth" } else { "death" },
                state: x as i64,
                value: nu,
            });
        }
        if nu == 0.0 {
            return Ok(ZetaEnd::Miss);
        }
        b_t += nu.ln();
        n += 1;
        x = if up { x + 1 } else { x - 1 };
        t = next;
    }
}

/// Importance-sampling estimate of `P(ρ(f, ξ_T) < ε)` from `ζ` paths.
pub fn estimate_importance(model: &RateModel, tube: &TubeSpec, cfg: &EstimatorConfig) -> Result<EstimateReport> {
    check_replicas(cfg)?;
    let cap = cfg.jump_cap.unwrap_or_else(|| reference_jump_cap(tube.horizon));
    let monitor = TubeMonitor::new(tube);
    let job = |_i: u64, rng: &mut SimRng| zeta_replica(model, &monitor, tube.horizon, cap, rng);
    let mut weights = Vec::new();
    let mut truncated = 0u64;
    for_each_chunk(cfg, job, |chunk| {
        for end in chunk {
            match end? {
                ZetaEnd::Hit(w) => weights.push(w),
                ZetaEnd::Truncated => truncated += 1,
                ZetaEnd::Miss => {}
            }
        }
        Ok(())
    })?;

    let n = cfg.replicas;
    let sums = LogWeightSums::from_log_weights(&weights);
    let hits = weights.len() as u64;
    let mut flags = Vec::new();
    let log_prob = sums.log_sum() - (n as f64).ln();
    let se = if hits == 0 {
        flags.push(FLAG_NO_ADMISSIBLE.to_string());
        f64::INFINITY
    } else if n < 2 {
        f64::INFINITY
    } else {
        let nf = n as f64;
        let mean = sums.sum / nf;
        let var = ((sums.sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        (var / nf).sqrt() / mean
    };
    if hits > 0 && hits < 10 {
        flags.push(FLAG_FEW_WEIGHTED.to_string());
    }
    if log_prob - 3.0 * se > 0.0 {
        flags.push(FLAG_ABOVE_ONE.to_string());
    }
    if truncated > 0 {
        flags.push(FLAG_ZETA_TRUNCATED.to_string());
    }
    let class = classify(model);
    Ok(EstimateReport {
        method: Method::ImportanceSampling,
        horizon: tube.horizon,
        epsilon: tube.epsilon,
        profile: tube.profile.label().to_string(),
        log_prob_estimate: log_prob,
        std_error_log: se,
        log_ci: (log_prob - Z95 * se, log_prob + Z95 * se),
        replicas: n,
        hits,
        normalized_value: -log_prob / class.psi(tube.horizon),
        psi_exponent: class.psi_exponent,
        effective_sample_size: sums.ess(),
        exploded: 0,
        truncated,
        master_seed: cfg.master_seed,
        config_digest: run_digest(Method::ImportanceSampling, model, tube, cfg, cap)?,
        flags,
    })
}

/// Wraps the exact oracle in an [`EstimateReport`]. The log estimate is the
/// bracket midpoint and `std_error_log` is half the log-width of the bracket.
pub fn estimate_oracle(model: &RateModel, tube: &TubeSpec, oracle: &OracleConfig) -> Result<EstimateReport> {
    let r = tube_probability_exact(model, tube, oracle)?;
    let class = classify(model);
    let half_width = if r.log_outer == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * (r.log_outer - r.log_inner)
    };
    let mut flags = Vec::new();
    if let Some(at) = r.empty_band_at {
        flags.push(format!("tube band empty at rescaled time {at}"));
    }
    Ok(EstimateReport {
        method: Method::ExactOracle,
        horizon: tube.horizon,
        epsilon: tube.epsilon,
        profile: tube.profile.label().to_string(),
        log_prob_estimate: r.log_prob,
        std_error_log: half_width,
        log_ci: (r.log_inner, r.log_outer),
        replicas: 1,
        hits: 0,
        normalized_value: -r.log_prob / class.psi(tube.horizon),
        psi_exponent: class.psi_exponent,
        effective_sample_size: 0.0,
        exploded: 0,
        truncated: 0,
        master_seed: 0,
        config_digest: config_digest(&json!({
            "method": "oracle",
            "asymptotics": model.asymptotics(),
            "profile": tube.profile.label(),
            "epsilon": tube.epsilon,
            "T": tube.horizon,
            "time_slices": oracle.time_slices,
            "state_cap": oracle.state_cap,
        }))?,
        flags,
    })
}

/// One line of the convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub method: Method,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub epsilon: f64,
    pub log_prob: f64,
    pub stderr: f64,
    pub normalized: f64,
    #[serde(rename = "I_f")]
    pub rate_functional: f64,
    pub psi_exponent: f64,
    pub replicas: u64,
    pub ess: f64,
    pub seed: u64,
}

impl StudyRow {
    pub fn from_report(report: &EstimateReport, rate_functional: f64) -> Self {
        Self {
            method: report.method,
            horizon: report.horizon,
            epsilon: report.epsilon,
            log_prob: report.log_prob_estimate,
            stderr: report.std_error_log,
            normalized: report.normalized_value,
            rate_functional,
            psi_exponent: report.psi_exponent,
            replicas: report.replicas,
            ess: report.effective_sample_size,
            seed: report.master_seed,
        }
    }

    /// Standard error of the `normalized` column.
    pub fn normalized_stderr(&self) -> f64 {
        self.stderr / self.horizon.powf(self.psi_exponent)
    }
}

/// `-(1/ψ(T)) ln P̂` by importance sampling over an `ε × T` grid, next to
/// `I(f)`. Every row reuses the same master seed.
pub fn normalized_decay(
    model: &RateModel,
    profile: &TargetProfile,
    epsilons: &[f64],
    horizons: &[f64],
    cfg: &EstimatorConfig,
) -> Result<Vec<StudyRow>> {
    if classify(model).regime == Regime::Degenerate {
        return Err(Error::DegenerateRegime);
    }
    let i_f = rate_functional(model, profile, DEFAULT_QUAD_POINTS)?;
    let mut rows = Vec::with_capacity(epsilons.len() * horizons.len());
    for &eps in epsilons {
        for &t in horizons {
            let tube = TubeSpec::new(profile.clone(), eps, t)?;
            let report = estimate_importance(model, &tube, cfg)?;
            rows.push(StudyRow::from_report(&report, i_f));
        }
    }
    Ok(rows)
}
