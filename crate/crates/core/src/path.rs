//! Finite-jump ±1 step paths and their rescaling to the unit interval.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Right-continuous ±1 step path on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath {
    horizon: f64,
    start_state: i64,
    jump_times: Vec<f64>,
    jump_signs: Vec<i8>,
}

impl JumpPath {
    /// Checked constructor: `0 < t_1 < … < t_N ≤ T`, signs in `{-1, +1}`.
    pub fn new(horizon: f64, start_state: i64, jump_times: Vec<f64>, jump_signs: Vec<i8>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("T", "horizon must be finite and > 0"));
        }
        if jump_times.len() != jump_signs.len() {
            return Err(Error::invalid("jump_signs", "one sign per jump time is required"));
        }
        let mut prev = 0.0;
        for &t in &jump_times {
            if !(t > prev && t <= horizon) {
                return Err(Error::invalid(
                    "jump_times",
                    format!("jump times must be strictly increasing in (0, T]; got {t} after {prev}"),
                ));
            }
            prev = t;
        }
        if let Some(s) = jump_signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::invalid("jump_signs", format!("jump sign {s} is not ±1")));
        }
        Ok(Self {
            horizon,
            start_state,
            jump_times,
            jump_signs,
        })
    }

    pub(crate) fn from_parts_unchecked(
        horizon: f64,
        start_state: i64,
        jump_times: Vec<f64>,
        jump_signs: Vec<i8>,
    ) -> Self {
        debug_assert_eq!(jump_times.len(), jump_signs.len());
        Self {
            horizon,
            start_state,
            jump_times,
            jump_signs,
        }
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(horizon, 0, Vec::new(), Vec::new())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn start_state(&self) -> i64 {
        self.start_state
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn jump_signs(&self) -> &[i8] {
        &self.jump_signs
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    pub fn final_state(&self) -> i64 {
        self.start_state + self.jump_signs.iter().map(|&s| s as i64).sum::<i64>()
    }

    /// Constancy intervals `(state, from, to)` covering `[0, T]` in order.
    pub fn holds(&self) -> Holds<'_> {
        Holds {
            path: self,
            next: 0,
            state: self.start_state,
            from: 0.0,
            done: false,
        }
    }

    /// State at time `t ∈ [0, T]` (right-continuous).
    pub fn state_at(&self, t: f64) -> i64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        self.start_state + self.jump_signs[..k].iter().map(|&s| s as i64).sum::<i64>()
    }

    /// Every prefix state is non-negative.
    pub fn is_nonnegative(&self) -> bool {
        let mut x = self.start_state;
        if x < 0 {
            return false;
        }
        for &s in &self.jump_signs {
            x += s as i64;
            if x < 0 {
                return false;
            }
        }
        true
    }

    /// Writes the path as CSV with columns `time,sign`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time,sign")?;
        for (t, s) in self.jump_times.iter().zip(&self.jump_signs) {
            writeln!(out, "{t},{s}")?;
        }
        Ok(())
    }

    /// Reads a `time,sign` CSV. Lines starting with `#` are metadata and skipped.
    pub fn read_csv<R: BufRead>(input: R, horizon: f64, start_state: i64) -> Result<Self> {
        let mut times = Vec::new();
        let mut signs = Vec::new();
        let mut header_seen = false;
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line == "time,sign" {
                    continue;
                }
            }
            let (t, s) = line
                .split_once(',')
                .ok_or_else(|| Error::invalid("path", format!("malformed row `{line}`")))?;
            times.push(
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid("path", format!("bad time `{t}`: {e}")))?,
            );
            signs.push(
                s.trim()
                    .parse::<i8>()
                    .map_err(|e| Error::invalid("path", format!("bad sign `{s}`: {e}")))?,
            );
        }
        Self::new(horizon, start_state, times, signs)
    }
}

/// One constancy interval of a path, in original time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hold {
    pub state: i64,
    pub from: f64,
    pub to: f64,
}

pub struct Holds<'a> {
    path: &'a JumpPath,
    next: usize,
    state: i64,
    from: f64,
    done: bool,
}

impl Iterator for Holds<'_> {
    type Item = Hold;

    fn next(&mut self) -> Option<Hold> {
        if self.done {
            return None;
        }
        if self.next < self.path.jump_times.len() {
            let to = self.path.jump_times[self.next];
            let hold = Hold {
                state: self.state,
                from: self.from,
                to,
            };
            self.state += self.path.jump_signs[self.next] as i64;
            self.from = to;
            self.next += 1;
            Some(hold)
        } else {
            self.done = true;
            Some(Hold {
                state: self.state,
                from: self.from,
                to: self.path.horizon,
            })
        }
    }
}

/// The rescaled path `t ↦ x(tT)/T` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPath {
    /// Rescaled jump times `t_i / T`.
    pub jump_times: Vec<f64>,
    /// Value on `[0, s_1)` followed by the value after each jump.
    pub values: Vec<f64>,
}

impl ScaledPath {
    pub fn value_at(&self, s: f64) -> f64 {
        let k = self.jump_times.partition_point(|&u| u <= s);
        self.values[k]
    }
}

pub fn rescale(path: &JumpPath) -> ScaledPath {
    let t = path.horizon();
    let mut values = Vec::with_capacity(path.jump_count() + 1);
    let mut x = path.start_state();
    values.push(x as f64 / t);
    for &s in path.jump_signs() {
        x += s as i64;
        values.push(x as f64 / t);
    }
    ScaledPath {
        jump_times: path.jump_times().iter().map(|&u| u / t).collect(),
        values,
    }
}
