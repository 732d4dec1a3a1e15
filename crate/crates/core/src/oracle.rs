//! Exact tube probabilities for small instances.
//!
//! The horizon is cut into `K` equal slices. On each slice the tube
//! constraint `T(f(s) - ε) < x < T(f(s) + ε)` is replaced by a fixed band of
//! integer states: the *inner* band (states allowed for every `s` in the
//! slice) under-approximates the tube, the *outer* band (states allowed for
//! some `s`) over-approximates it. Killing the chain whenever it leaves the
//! current band and propagating the surviving sub-probability with
//! uniformization gives two taboo probabilities that bracket
//! `P(ρ(f, ξ_T) < ε)`. Doubling `K` refines both bands, so the bracket
//! shrinks monotonically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RateModel;
use crate::tube::{TubeSpec, BOUNDARY_TOLERANCE};

/// Default Poisson tail mass dropped per uniformization step.
pub const DEFAULT_TOLERANCE: f64 = 1e-13;
const MAX_STEP_MEAN: f64 = 20.0;

/// Sub-generator of `ξ` restricted to the states `lo..=hi`; jumps leaving
/// the band are absorbed (lost).
#[derive(Debug, Clone)]
pub struct TruncatedGenerator {
    lo: u64,
    birth: Vec<f64>,
    death: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Propagation {
    /// Matrix-vector products times band width.
    pub work: f64,
    /// Upper bound on the probability mass dropped by series truncation.
    pub truncation_error: f64,
}

impl TruncatedGenerator {
    pub fn new(model: &RateModel, lo: u64, hi: u64) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid("band", format!("empty band [{lo}, {hi}]")));
        }
        let mut birth = Vec::with_capacity((hi - lo + 1) as usize);
        let mut death = Vec::with_capacity(birth.capacity());
        for x in lo..=hi {
            let (b, d) = (model.birth_rate(x), model.death_rate(x));
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::RateEvaluation {
                    which: "birth",
                    state: x as i64,
                    value: b,
                });
            }
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::RateEvaluation {
                    which: "death",
                    state: x as i64,
                    value: d,
                });
            }
            birth.push(b);
            death.push(d);
        }
        Ok(Self { lo, birth, death })
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.lo + self.birth.len() as u64 - 1
    }

    pub fn width(&self) -> usize {
        self.birth.len()
    }

    /// Row sums of the restricted generator; zero only where no jump leaves the band.
    pub fn row_sums(&self) -> Vec<f64> {
        let n = self.width();
        (0..n)
            .map(|i| {
                let up = if i + 1 < n { self.birth[i] } else { 0.0 };
                let down = if i > 0 { self.death[i] } else { 0.0 };
                up + down - (self.birth[i] + self.death[i])
            })
            .collect()
    }

    /// `max h(x)` over the band.
    pub fn uniformization_rate(&self) -> f64 {
        self.birth
            .iter()
            .zip(&self.death)
            .map(|(b, d)| b + d)
            .fold(0.0, f64::max)
    }

    /// Estimated work for [`TruncatedGenerator::propagate`] over `duration`.
    pub fn work_estimate(&self, duration: f64) -> f64 {
        let mean = self.uniformization_rate() * duration;
        (mean + 6.0 * mean.sqrt() + 10.0 * (1.0 + (mean / MAX_STEP_MEAN).ceil())) * self.width() as f64
    }

    fn step(&self, rate: f64, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        for i in 0..n {
            let mut acc = v[i] * (1.0 - (self.birth[i] + self.death[i]) / rate);
            if i > 0 {
                acc += v[i - 1] * self.birth[i - 1] / rate;
            }
            if i + 1 < n {
                acc += v[i + 1] * self.death[i + 1] / rate;
            }
            out[i] = acc;
        }
    }

    /// Evolves the row vector `p` (indexed from `lo`) for `duration` under
    /// the killed dynamics: `p ← p exp(Q duration)`.
    pub fn propagate(&self, p: &mut [f64], duration: f64, tolerance: f64) -> Propagation {
        assert_eq!(p.len(), self.width());
        let mut stats = Propagation::default();
        if duration <= 0.0 {
            return stats;
        }
        let rate = self.uniformization_rate().max(f64::MIN_POSITIVE);
        let substeps = ((rate * duration) / MAX_STEP_MEAN).ceil().max(1.0) as usize;
        let mean = rate * duration / substeps as f64;
        let n = p.len();
        let mut v = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut acc = vec![0.0; n];
        let max_terms = (mean + 50.0 * mean.sqrt() + 100.0) as usize;
        for _ in 0..substeps {
            let mut weight = (-mean).exp();
            let mut cumulative = weight;
            v.copy_from_slice(p);
            for (a, &x) in acc.iter_mut().zip(&v) {
                *a = weight * x;
            }
            let mut k = 0;
            while 1.0 - cumulative > tolerance && k < max_terms {
                k += 1;
                self.step(rate, &v, &mut next);
                std::mem::swap(&mut v, &mut next);
                weight *= mean / k as f64;
                cumulative += weight;
                for (a, &x) in acc.iter_mut().zip(&v) {
                    *a += weight * x;
                }
            }
            stats.work += (k + 1) as f64 * n as f64;
            stats.truncation_error += (1.0 - cumulative).max(0.0) * p.iter().sum::<f64>();
            p.copy_from_slice(&acc);
        }
        stats
    }
}

/// Probability that `ξ`, started at `start`, stays in `lo..=hi` for `duration`.
pub fn taboo_survival(model: &RateModel, lo: u64, hi: u64, start: u64, duration: f64) -> Result<f64> {
    if !(lo..=hi).contains(&start) {
        return Ok(0.0);
    }
    let gen = TruncatedGenerator::new(model, lo, hi)?;
    let mut p = vec![0.0; gen.width()];
    p[(start - lo) as usize] = 1.0;
    gen.propagate(&mut p, duration, DEFAULT_TOLERANCE);
    Ok(p.iter().sum::<f64>().min(1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub time_slices: usize,
    pub state_cap: u64,
    pub tolerance: f64,
    /// Maximum work units (band width × uniformization steps).
    pub budget: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            time_slices: 1024,
            state_cap: 100_000,
            tolerance: DEFAULT_TOLERANCE,
            budget: 5e9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    /// Lower bound (inner bands), in log space.
    pub log_inner: f64,
    /// Upper bound (outer bands), in log space.
    pub log_outer: f64,
    /// `ln((inner + outer) / 2)`.
    pub log_prob: f64,
    /// `(outer - inner) / 2`, relative to the midpoint.
    pub relative_discretization_bound: f64,
    pub truncation_error: f64,
    /// Rescaled time at which even the outer band is empty (probability 0).
    pub empty_band_at: Option<f64>,
    pub time_slices: usize,
    pub work: f64,
}

impl OracleResult {
    pub fn inner(&self) -> f64 {
        self.log_inner.exp()
    }

    pub fn outer(&self) -> f64 {
        self.log_outer.exp()
    }
}

type Band = Option<(u64, u64)>;

fn band(lower: f64, upper: f64, state_cap: u64, tol: f64) -> Band {
    // integers x with lower < x < upper, boundary cases excluded
    let lo = ((lower + tol).floor() + 1.0).max(0.0);
    let hi = (upper - tol).ceil() - 1.0;
    if hi < 0.0 || lo > hi {
        return None;
    }
    let hi = (hi as u64).min(state_cap);
    let lo = lo as u64;
    (lo <= hi).then_some((lo, hi))
}

/// Per-slice inner and outer bands, plus the exact band at each slice's
/// right endpoint (a necessary condition at that instant).
fn slice_bands(tube: &TubeSpec, slices: usize, state_cap: u64) -> (Vec<Band>, Vec<Band>, Vec<Band>) {
    let t = tube.horizon;
    let eps = tube.epsilon;
    let tol = BOUNDARY_TOLERANCE * t;
    let mut inner = Vec::with_capacity(slices);
    let mut outer = Vec::with_capacity(slices);
    let mut ends = Vec::with_capacity(slices);
    for j in 0..slices {
        let s0 = j as f64 / slices as f64;
        let s1 = (j + 1) as f64 / slices as f64;
        let r = tube.profile.range_on(s0, s1);
        inner.push(band(
            t * (r.max + r.slack - eps),
            t * (r.min - r.slack + eps),
            state_cap,
            tol,
        ));
        outer.push(band(
            t * (r.min - r.slack - eps),
            t * (r.max + r.slack + eps),
            state_cap,
            tol,
        ));
        let f1 = tube.profile.eval(s1);
        ends.push(band(t * (f1 - eps), t * (f1 + eps), state_cap, tol));
    }
    (inner, outer, ends)
}

struct BandRun {
    log_mass: f64,
    truncation_error: f64,
    work: f64,
}

fn run_bands(model: &RateModel, bands: &[Band], ends: &[Band], dt: f64, tolerance: f64) -> Result<BandRun> {
    let mut run = BandRun {
        log_mass: 0.0,
        truncation_error: 0.0,
        work: 0.0,
    };
    let mut current: Option<(u64, Vec<f64>)> = Some((0, vec![1.0]));
    for (band, end) in bands.iter().zip(ends) {
        let Some((lo, hi)) = *band else {
            run.log_mass = f64::NEG_INFINITY;
            return Ok(run);
        };
        let (prev_lo, prev) = current.take().expect("mass vector present");
        let mut p = vec![0.0; (hi - lo + 1) as usize];
        for (i, &mass) in prev.iter().enumerate() {
            let x = prev_lo + i as u64;
            if (lo..=hi).contains(&x) {
                p[(x - lo) as usize] = mass;
            }
        }
        let gen = TruncatedGenerator::new(model, lo, hi)?;
        let stats = gen.propagate(&mut p, dt, tolerance);
        run.work += stats.work;
        run.truncation_error += stats.truncation_error * run.log_mass.exp();
        for (i, v) in p.iter_mut().enumerate() {
            let x = lo + i as u64;
            if !end.is_some_and(|(a, b)| (a..=b).contains(&x)) {
                *v = 0.0;
            }
        }
        let total: f64 = p.iter().sum();
        if !(total > 0.0) {
            run.log_mass = f64::NEG_INFINITY;
            return Ok(run);
        }
        run.log_mass += total.ln();
        p.iter_mut().for_each(|v| *v /= total);
        current = Some((lo, p));
    }
    Ok(run)
}

fn bands_work(model: &RateModel, bands: &[Band], dt: f64) -> Result<f64> {
    let mut work = 0.0;
    for &(lo, hi) in bands.iter().flatten() {
        work += TruncatedGenerator::new(model, lo, hi)?.work_estimate(dt);
    }
    Ok(work)
}

/// Brackets `P(ρ(f, ξ_T) < ε)` between inner and outer sliced-band taboo
/// probabilities.
pub fn tube_probability_exact(model: &RateModel, tube: &TubeSpec, cfg: &OracleConfig) -> Result<OracleResult> {
    if cfg.time_slices == 0 {
        return Err(Error::invalid("time_slices", "must be >= 1"));
    }
    let (inner_bands, outer_bands, end_bands) = slice_bands(tube, cfg.time_slices, cfg.state_cap);
    let dt = tube.horizon / cfg.time_slices as f64;
    if let Some(j) = outer_bands
        .iter()
        .zip(&end_bands)
        .position(|(o, e)| o.is_none() || e.is_none())
    {
        return Ok(OracleResult {
            log_inner: f64::NEG_INFINITY,
            log_outer: f64::NEG_INFINITY,
            log_prob: f64::NEG_INFINITY,
            relative_discretization_bound: 0.0,
            truncation_error: 0.0,
            empty_band_at: Some(j as f64 / cfg.time_slices as f64),
            time_slices: cfg.time_slices,
            work: 0.0,
        });
    }
    let needed = bands_work(model, &inner_bands, dt)? + bands_work(model, &outer_bands, dt)?;
    if needed > cfg.budget {
        return Err(Error::OracleBudget {
            needed,
            budget: cfg.budget,
        });
    }
    let inner = run_bands(model, &inner_bands, &end_bands, dt, cfg.tolerance)?;
    let outer = run_bands(model, &outer_bands, &end_bands, dt, cfg.tolerance)?;
    let (li, lo) = (inner.log_mass, outer.log_mass);
    let log_prob = if li == f64::NEG_INFINITY {
        lo - 2f64.ln()
    } else {
        lo + (0.5 * (1.0 + (li - lo).exp())).ln()
    };
    let relative = if lo == f64::NEG_INFINITY {
        0.0
    } else {
        let ratio = (li - lo).exp();
        (1.0 - ratio) / (1.0 + ratio)
    };
    Ok(OracleResult {
        log_inner: li,
        log_outer: lo,
        log_prob,
        relative_discretization_bound: relative,
        truncation_error: inner.truncation_error + outer.truncation_error,
        empty_band_at: None,
        time_slices: cfg.time_slices,
        work: inner.work + outer.work,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::TargetProfile;

    #[test]
    fn row_sums_vanish_only_inside() {
        let model = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
        let gen = TruncatedGenerator::new(&model, 0, 4).unwrap();
        let sums = gen.row_sums();
        assert!(sums.iter().all(|&s| s <= 0.0));
        // interior rows conserve mass, the top row loses λ(4)
        assert_eq!(&sums[..4], &[0.0; 4]);
        assert_eq!(sums[4], -model.birth_rate(4));
        let inner = TruncatedGenerator::new(&model, 2, 4).unwrap().row_sums();
        assert_eq!(inner[0], -model.death_rate(2));
    }

    #[test]
    fn yule_three_state_band_matches_hypoexponential_tail() {
        // pure birth, rates 1, 2, 3 on states 0, 1, 2: staying in {0,1,2}
        // until t means the sum of three exponentials exceeds t.
        let model = RateModel::power(1.0, 1.0, 0.0, 0.0).unwrap();
        let rates = [1.0, 2.0, 3.0];
        for t in [0.1, 0.7, 2.0, 5.0] {
            let closed: f64 = (0..3)
                .map(|i| {
                    let prod: f64 = (0..3)
                        .filter(|&j| j != i)
                        .map(|j| rates[j] / (rates[j] - rates[i]))
                        .product();
                    prod * (-rates[i] * t).exp()
                })
                .sum();
            let oracle = taboo_survival(&model, 0, 2, 0, t).unwrap();
            assert!((oracle - closed).abs() < 1e-8, "t = {t}: {oracle} vs {closed}");
        }
    }

    #[test]
    fn vacuous_tube_has_probability_one() {
        // μ dominant (no explosion), huge ε
        let model = RateModel::power(1.0, 0.0, 1.0, 1.0).unwrap();
        let tube = TubeSpec::new(TargetProfile::linear(), 50.0, 2.0).unwrap();
        let r = tube_probability_exact(&model, &tube, &OracleConfig::default()).unwrap();
        assert!((r.inner() - 1.0).abs() < 1e-6, "{r:?}");
        assert!((r.outer() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn refinement_shrinks_bracket() {
        let model = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
        let tube = TubeSpec::new(TargetProfile::linear(), 0.5, 2.0).unwrap();
        let mut prev: Option<OracleResult> = None;
        for k in [16, 32, 64, 128] {
            let cfg = OracleConfig {
                time_slices: k,
                ..Default::default()
            };
            let r = tube_probability_exact(&model, &tube, &cfg).unwrap();
            assert!(r.log_inner <= r.log_outer);
            if let Some(p) = prev {
                assert!(r.log_inner >= p.log_inner - 1e-12);
                assert!(r.log_outer <= p.log_outer + 1e-12);
            }
            prev = Some(r);
        }
    }

    #[test]
    fn state_cap_beyond_tube_is_inert() {
        let model = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
        let tube = TubeSpec::new(TargetProfile::linear(), 0.5, 4.0).unwrap();
        let a = tube_probability_exact(&model, &tube, &OracleConfig { state_cap: 7, ..Default::default() }).unwrap();
        let b = tube_probability_exact(&model, &tube, &OracleConfig { state_cap: 1000, ..Default::default() }).unwrap();
        assert_eq!(a.log_inner, b.log_inner);
        assert_eq!(a.log_outer, b.log_outer);
    }

    #[test]
    fn budget_is_enforced() {
        let model = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
        let tube = TubeSpec::new(TargetProfile::linear(), 0.5, 4.0).unwrap();
        let cfg = OracleConfig {
            budget: 10.0,
            ..Default::default()
        };
        assert!(matches!(
            tube_probability_exact(&model, &tube, &cfg),
            Err(Error::OracleBudget { .. })
        ));
    }

    #[test]
    fn infeasible_band_reports_time() {
        // state cap 1 cannot follow f(t) = t to height T = 10 within ε = 0.2
        let model = RateModel::power(1.0, 1.0, 1.0, 0.0).unwrap();
        let tube = TubeSpec::new(TargetProfile::linear(), 0.2, 10.0).unwrap();
        let cfg = OracleConfig {
            state_cap: 1,
            time_slices: 100,
            ..Default::default()
        };
        let r = tube_probability_exact(&model, &tube, &cfg).unwrap();
        assert_eq!(r.log_prob, f64::NEG_INFINITY);
        let at = r.empty_band_at.unwrap();
        assert!(at > 0.0 && at < 0.5, "{at}");
    }
}
