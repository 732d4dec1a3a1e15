//! Target profiles `f` on `[0, 1]`.
//!
//! Membership in the profile class requires `f(0) = 0`, `f > 0` on `(0, 1]`
//! and continuity. Built-in families are monotone or piecewise linear, so
//! their extrema over any interval are known exactly; custom closures are
//! sampled on a fixed grid and widened by a declared Lipschitz constant.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of grid points used for custom profiles (`2^14 + 1`).
pub const DEFAULT_GRID: usize = (1 << 14) + 1;

const CONTINUITY_GRID: usize = 10_000;
const CONTINUITY_TOLERANCE: f64 = 0.05;

pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Linear { slope: f64 },
    Power { exponent: f64 },
    Table { knots: Vec<f64>, values: Vec<f64> },
    Custom {
        f: ProfileFn,
        lipschitz: Option<f64>,
        grid: Arc<Vec<f64>>,
    },
}

#[derive(Clone)]
pub struct TargetProfile {
    kind: Kind,
    label: String,
}

impl fmt::Debug for TargetProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("TargetProfile").field(&self.label).finish()
    }
}

/// Bounds on `f` over an interval: `min - slack ≤ f ≤ max + slack`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRange {
    pub min: f64,
    pub max: f64,
    pub slack: f64,
}

impl TargetProfile {
    /// `f(t) = t`.
    pub fn linear() -> Self {
        Self {
            kind: Kind::Linear { slope: 1.0 },
            label: "linear".into(),
        }
    }

    /// `f(t) = slope · t`.
    pub fn linear_with_slope(slope: f64) -> Result<Self> {
        if !(slope.is_finite() && slope > 0.0) {
            return Err(Error::InvalidProfile(format!("slope must be finite and > 0, got {slope}")));
        }
        Ok(Self {
            kind: Kind::Linear { slope },
            label: format!("linear:{slope}"),
        })
    }

    /// `f(t) = t^k`.
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "power exponent must be finite and > 0, got {exponent}"
            )));
        }
        Ok(Self {
            kind: Kind::Power { exponent },
            label: format!("power:{exponent}"),
        })
    }

    /// Piecewise-linear interpolation of `(knots[i], values[i])`. Knots must
    /// increase strictly from 0 to 1.
    pub fn table(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidProfile(
                "table needs at least two knots and one value per knot".into(),
            ));
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
            return Err(Error::InvalidProfile("table knots must start at 0 and end at 1".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile("table knots must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("table values must be finite".into()));
        }
        Ok(Self {
            kind: Kind::Table { knots, values },
            label: "custom-table".into(),
        })
    }

    /// Arbitrary closure. With `lipschitz = Some(L)` interval extrema are
    /// rigorous bounds; without it they carry a heuristic uncertainty band.
    pub fn custom(f: ProfileFn, lipschitz: Option<f64>) -> Result<Self> {
        if let Some(l) = lipschitz {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidProfile(format!("Lipschitz constant must be >= 0, got {l}")));
            }
        }
        let n = DEFAULT_GRID - 1;
        let grid: Vec<f64> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        Ok(Self {
            kind: Kind::Custom {
                f,
                lipschitz,
                grid: Arc::new(grid),
            },
            label: "custom".into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Linear { slope } => slope * t,
            Kind::Power { exponent } => t.powf(*exponent),
            Kind::Table { knots, values } => interpolate(knots, values, t),
            Kind::Custom { f, .. } => f(t),
        }
    }

    /// Bounds on `f` over `[a, b] ⊆ [0, 1]`.
    pub fn range_on(&self, a: f64, b: f64) -> ProfileRange {
        debug_assert!(a <= b);
        match &self.kind {
            Kind::Linear { .. } | Kind::Power { .. } => ProfileRange {
                min: self.eval(a),
                max: self.eval(b),
                slack: 0.0,
            },
            Kind::Table { knots, values } => {
                let fa = interpolate(knots, values, a);
                let fb = interpolate(knots, values, b);
                let (mut lo, mut hi) = (fa.min(fb), fa.max(fb));
                let start = knots.partition_point(|&k| k <= a);
                let end = knots.partition_point(|&k| k < b);
                for &v in &values[start..end.max(start)] {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                ProfileRange {
                    min: lo,
                    max: hi,
                    slack: 0.0,
                }
            }
            Kind::Custom { f, lipschitz, grid } => {
                let n = (grid.len() - 1) as f64;
                let h = 1.0 / n;
                let first = (a * n).floor() as usize + 1;
                let last = ((b * n).ceil() as usize).min(grid.len() - 1);
                let fa = f(a);
                let fb = f(b);
                let (mut lo, mut hi) = (fa.min(fb), fa.max(fb));
                let mut prev = fa;
                let mut widest_step: f64 = 0.0;
                for i in first..last {
                    let v = grid[i];
                    lo = lo.min(v);
                    hi = hi.max(v);
                    widest_step = widest_step.max((v - prev).abs());
                    prev = v;
                }
                widest_step = widest_step.max((fb - prev).abs());
                let slack = match lipschitz {
                    Some(l) => l * h.min(b - a) / 2.0,
                    None => widest_step,
                };
                ProfileRange { min: lo, max: hi, slack }
            }
        }
    }

    /// `max_{[0,1]} f`, an upper bound for custom profiles.
    pub fn sup(&self) -> f64 {
        let r = self.range_on(0.0, 1.0);
        r.max + r.slack
    }

    /// Checks membership in the profile class: `f(0) = 0`, `f > 0` on
    /// `(0, 1]`, finite, and (for custom closures) a grid continuity check.
    pub fn validate(&self) -> Result<()> {
        let f0 = self.eval(0.0);
        if f0.abs() > 1e-12 {
            return Err(Error::InvalidProfile(format!("f(0) must be 0, got {f0}")));
        }
        let n = CONTINUITY_GRID;
        let mut prev = f0;
        let mut widest: f64 = 0.0;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            let v = self.eval(t);
            if !v.is_finite() {
                return Err(Error::InvalidProfile(format!("f({t}) = {v} is not finite")));
            }
            if !(v > 0.0) {
                return Err(Error::InvalidProfile(format!("f must be > 0 on (0, 1]; f({t}) = {v}")));
            }
            widest = widest.max((v - prev).abs());
            prev = v;
        }
        if let Kind::Custom { grid, .. } = &self.kind {
            if let Some(t) = grid.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidProfile(format!(
                    "f is negative or not finite near t = {}",
                    t as f64 / (grid.len() - 1) as f64
                )));
            }
            if widest > CONTINUITY_TOLERANCE {
                return Err(Error::InvalidProfile(format!(
                    "f looks discontinuous: adjacent grid values differ by {widest:.3e} on a {n}-point grid"
                )));
            }
        }
        Ok(())
    }

    /// Whether `f` is non-decreasing (exact for built-ins, on the grid for closures).
    pub fn is_nondecreasing(&self) -> bool {
        match &self.kind {
            Kind::Linear { .. } | Kind::Power { .. } => true,
            Kind::Table { values, .. } => values.windows(2).all(|w| w[1] >= w[0]),
            Kind::Custom { grid, .. } => grid.windows(2).all(|w| w[1] >= w[0]),
        }
    }

    /// `c · f` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidProfile(format!("scale must be finite and > 0, got {c}")));
        }
        let label = format!("{c}*{}", self.label);
        let kind = match &self.kind {
            Kind::Linear { slope } => Kind::Linear { slope: slope * c },
            Kind::Power { exponent } => {
                let e = *exponent;
                let f: ProfileFn = Arc::new(move |t: f64| c * t.powf(e));
                return Ok(Self {
                    label,
                    ..Self::custom(f, (e >= 1.0).then_some(c * e))?
                });
            }
            Kind::Table { knots, values } => Kind::Table {
                knots: knots.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
            Kind::Custom { f, lipschitz, grid } => {
                let f = f.clone();
                Kind::Custom {
                    f: Arc::new(move |t| c * f(t)),
                    lipschitz: lipschitz.map(|l| l * c),
                    grid: Arc::new(grid.iter().map(|v| v * c).collect()),
                }
            }
        };
        Ok(Self { kind, label })
    }
}

fn interpolate(knots: &[f64], values: &[f64], t: f64) -> f64 {
    let i = knots.partition_point(|&k| k <= t);
    if i == 0 {
        return values[0];
    }
    if i >= knots.len() {
        return *values.last().unwrap();
    }
    let (k0, k1) = (knots[i - 1], knots[i]);
    let w = (t - k0) / (k1 - k0);
    values[i - 1] + w * (values[i] - values[i - 1])
}

/// Profile document: `"linear"`, `"linear:2"`, `"power:1.5"`, or
/// `{"kind":"custom-table","t":[...],"values":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Named(String),
    Table {
        kind: String,
        t: Vec<f64>,
        values: Vec<f64>,
    },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<TargetProfile> {
        match self {
            ProfileSpec::Named(name) => {
                let (head, arg) = match name.split_once(':') {
                    Some((h, a)) => (h, Some(a)),
                    None => (name.as_str(), None),
                };
                let parse = |a: &str| {
                    a.parse::<f64>()
                        .map_err(|e| Error::InvalidProfile(format!("bad parameter `{a}` in `{name}`: {e}")))
                };
                match (head, arg) {
                    ("linear", None) => Ok(TargetProfile::linear()),
                    ("linear", Some(a)) => TargetProfile::linear_with_slope(parse(a)?),
                    ("power", Some(a)) => TargetProfile::power(parse(a)?),
                    _ => Err(Error::InvalidProfile(format!(
                        "unknown profile `{name}` (expected linear, linear:<slope>, power:<k> or a custom-table document)"
                    ))),
                }
            }
            ProfileSpec::Table { kind, t, values } => {
                if kind != "custom-table" {
                    return Err(Error::InvalidProfile(format!("unknown profile kind `{kind}`")));
                }
                TargetProfile::table(t.clone(), values.clone())
            }
        }
    }
}
