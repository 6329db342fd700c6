//! Quantum-jump simulation of photodetection records.
//!
//! Records are generated at unit efficiency by norm-threshold sampling: draw
//! `r ~ U(0, 1)`, evolve the un-normalized state from `|g>` under `H_eff`
//! until its squared norm (the no-click survival probability) falls to `r`,
//! emit a click there and reset to `|g>`. Finite-efficiency records come from
//! Bernoulli thinning of a perfect record.

use rand::distributions::{Distribution, Open01, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_matrix, Matrix2, NoJumpPropagator, PureState};
use crate::error::{Error, Result};
use crate::params::AtomParams;
use crate::rng::{thinning_rng, trajectory_rng};

/// Tolerance on `|norm^2 - r|` when locating a click inside a step.
pub const ROOT_TOL: f64 = 1e-10;

/// When to stop generating clicks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopCondition {
    /// Observe for a fixed time; the record may end with an open interval.
    Duration(f64),
    /// Stop at the N-th click; the record ends at that click.
    Clicks(usize),
}

/// Ordered detection times of one observation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub params: AtomParams,
    pub seed: u64,
    /// Substream of `seed` the record was drawn from.
    #[serde(default)]
    pub stream: u64,
    /// Seed of the thinning pass, for records derived by [`thin_record`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinning_seed: Option<u64>,
    pub duration: f64,
    pub times: Vec<f64>,
}

impl ClickRecord {
    /// Validates that `times` is strictly increasing within `(0, duration]`.
    pub fn new(params: AtomParams, seed: u64, duration: f64, times: Vec<f64>) -> Result<Self> {
        let rec = Self { params, seed, stream: 0, thinning_seed: None, duration, times };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::Format(format!("invalid duration {}", self.duration)));
        }
        let mut prev = 0.0;
        for &t in &self.times {
            if !(t > prev) {
                return Err(Error::Format(format!("click times must increase strictly from 0, got {t} after {prev}")));
            }
            prev = t;
        }
        if prev > self.duration {
            return Err(Error::Format(format!("click at {prev} after the end of the record {}", self.duration)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time from the last click (or from 0) to the end of the record.
    pub fn trailing_interval(&self) -> f64 {
        self.duration - self.times.last().copied().unwrap_or(0.0)
    }

    /// Record restricted to its first `n` clicks, ending at the `n`-th.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.times.len());
        let mut out = self.clone();
        out.times.truncate(n);
        out.duration = if n == self.times.len() { self.duration } else { out.times.last().copied().unwrap_or(0.0) };
        out
    }
}

/// Intervals between consecutive clicks, the first measured from `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingTimes {
    pub taus: Vec<f64>,
}

pub fn waiting_times(record: &ClickRecord) -> WaitingTimes {
    let mut prev = 0.0;
    let taus = record
        .times
        .iter()
        .map(|&t| {
            let tau = t - prev;
            prev = t;
            tau
        })
        .collect();
    WaitingTimes { taus }
}

/// Draws unit-efficiency waiting times by norm-threshold sampling.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    propagator: NoJumpPropagator,
    step: f64,
    step_matrix: Matrix2,
    drives: bool,
}

impl JumpSampler {
    pub fn new(params: &AtomParams) -> Self {
        let propagator = NoJumpPropagator::new(params);
        // exact propagation; the step only brackets the crossing
        let step = 1.0 / params.fastest_rate();
        Self { propagator, step, step_matrix: propagator.matrix(step), drives: params.omega > 0.0 }
    }

    /// Time after a reset at which the no-click probability equals `r`, or
    /// `None` if it stays above `r` up to `horizon`.
    pub fn wait_for(&self, r: f64, horizon: f64) -> Option<f64> {
        if !self.drives {
            return None;
        }
        let mut state = PureState::ground();
        let mut t = 0.0;
        while t < horizon {
            let h = self.step.min(horizon - t);
            let next = if h == self.step {
                apply_matrix(&self.step_matrix, &state)
            } else {
                self.propagator.apply(&state, h)
            };
            if next.norm_sqr() <= r {
                return Some(t + self.bisect(&state, r, h));
            }
            state = next;
            t += h;
        }
        None
    }

    fn bisect(&self, start: &PureState, r: f64, h: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, h);
        loop {
            let mid = 0.5 * (lo + hi);
            let n = self.propagator.apply(start, mid).norm_sqr();
            if (n - r).abs() < ROOT_TOL || mid <= lo || mid >= hi {
                return mid;
            }
            if n > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
}

/// Simulate one unit-efficiency record on substream 0 of `seed`.
pub fn simulate_record(params: &AtomParams, stop: StopCondition, seed: u64) -> Result<ClickRecord> {
    simulate_stream(params, stop, seed, 0)
}

/// Simulate the record on substream `stream` of `seed`.
pub fn simulate_stream(params: &AtomParams, stop: StopCondition, seed: u64, stream: u64) -> Result<ClickRecord> {
    params.validate()?;
    if params.eta != 1.0 {
        return Err(Error::NotUnitEfficiency("simulate_record (use thin_record for eta < 1)"));
    }
    let horizon = match stop {
        StopCondition::Duration(t) if t > 0.0 && t.is_finite() => t,
        StopCondition::Clicks(n) if n >= 1 => f64::INFINITY,
        other => return Err(Error::InvalidParameter(format!("invalid stop condition {other:?}"))),
    };
    let mut rng = trajectory_rng(seed, stream);
    let sampler = JumpSampler::new(params);
    let mut times = Vec::new();
    let mut now = 0.0;
    if params.omega > 0.0 {
        loop {
            if let StopCondition::Clicks(n) = stop {
                if times.len() == n {
                    break;
                }
            }
            let r: f64 = Open01.sample(&mut rng);
            match sampler.wait_for(r, horizon - now) {
                Some(tau) if now + tau <= horizon => {
                    now += tau;
                    times.push(now);
                }
                _ => break,
            }
        }
    }
    let duration = match stop {
        StopCondition::Duration(t) => t,
        StopCondition::Clicks(_) => now,
    };
    Ok(ClickRecord { params: *params, seed, stream, thinning_seed: None, duration, times })
}

/// Records on substreams `0..count` of `seed`, generated in parallel.
pub fn simulate_batch(params: &AtomParams, stop: StopCondition, seed: u64, count: usize) -> Result<Vec<ClickRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_stream(params, stop, seed, i))
        .collect()
}

/// Keep each click independently with probability `eta`.
pub fn thin_record(record: &ClickRecord, eta: f64, seed: u64) -> Result<ClickRecord> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    let mut out = record.clone();
    out.params = record.params.with_eta(record.params.eta * eta)?;
    out.thinning_seed = Some(seed);
    if eta < 1.0 {
        let mut rng = thinning_rng(seed, record.stream);
        let unit = Uniform::new(0.0, 1.0);
        out.times.retain(|_| unit.sample(&mut rng) < eta);
    }
    Ok(out)
}
