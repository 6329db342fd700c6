//! Bayesian inference of a drive parameter over a discrete candidate grid.
//!
//! Two likelihoods are provided. The time-stepped form follows the conditional
//! state of every candidate through bins of width `dt`, multiplying by the
//! no-click probability of each empty bin and by `gamma |c_e|^2 dt` at each
//! click. The waiting-time form sums `ln w(tau_i)` over the intervals of the
//! record. Both agree up to a candidate-independent constant as `dt -> 0`.
//!
//! Log-weights are kept relative to their maximum; the removed maxima and all
//! candidate-independent factors are collected in `log_offset`, so the
//! posterior never depends on them.

use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_matrix, Matrix2, NoJumpPropagator, PureState};
use crate::error::{Error, Result};
use crate::params::{AtomParams, Theta};
use crate::trajectory::{waiting_times, ClickRecord, WaitingTimes};
use crate::waiting_time::{choose_grid, wtd_numeric, TauGrid, WaitingTimeTable, DEFAULT_TRUNCATION};

/// Log-weights below this trigger a shift by the maximum.
pub const RENORMALIZE_BELOW: f64 = -700.0;

#[derive(Debug, Clone)]
pub struct LikelihoodGrid {
    pub theta_name: Theta,
    pub base: AtomParams,
    pub candidates: Vec<f64>,
    pub log_weights: Vec<f64>,
    /// Candidate-independent part of the log-likelihood.
    pub log_offset: f64,
    /// Normalized conditional states (time-stepped mode).
    pub states: Vec<PureState>,
    pub t_now: f64,
    params: Vec<AtomParams>,
    step_cache: Option<(f64, Vec<Matrix2>)>,
}

pub fn init_grid(base: &AtomParams, theta_name: Theta, candidates: &[f64], prior: &[f64]) -> Result<LikelihoodGrid> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("candidate list is empty".into()));
    }
    if prior.len() != candidates.len() {
        return Err(Error::InvalidParameter(format!(
            "{} prior entries for {} candidates",
            prior.len(),
            candidates.len()
        )));
    }
    if let Some(p) = prior.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidParameter(format!("prior entries must be positive, got {p}")));
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("prior must sum to 1, got {total}")));
    }
    let params = candidates.iter().map(|&c| base.with_theta(theta_name, c)).collect::<Result<Vec<_>>>()?;
    Ok(LikelihoodGrid {
        theta_name,
        base: *base,
        candidates: candidates.to_vec(),
        log_weights: prior.iter().map(|p| p.ln()).collect(),
        log_offset: 0.0,
        states: vec![PureState::ground(); candidates.len()],
        t_now: 0.0,
        params,
        step_cache: None,
    })
}

/// Grid with a uniform prior.
pub fn init_uniform(base: &AtomParams, theta_name: Theta, candidates: &[f64]) -> Result<LikelihoodGrid> {
    let p = 1.0 / candidates.len().max(1) as f64;
    init_grid(base, theta_name, candidates, &vec![p; candidates.len()])
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

impl LikelihoodGrid {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidate_params(&self) -> &[AtomParams] {
        &self.params
    }

    /// Softmax of the log-weights.
    pub fn posterior(&self) -> Vec<f64> {
        posterior(&self.log_weights)
    }

    /// Total log-likelihood of each candidate including the collected constant.
    pub fn log_likelihoods(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w + self.log_offset).collect()
    }

    /// Candidate with the largest weight.
    pub fn argmax(&self) -> usize {
        argmax(&self.log_weights)
    }

    /// Posterior mean and standard deviation of the parameter.
    pub fn posterior_moments(&self) -> (f64, f64) {
        let p = self.posterior();
        let mean: f64 = p.iter().zip(&self.candidates).map(|(p, c)| p * c).sum();
        let var: f64 = p.iter().zip(&self.candidates).map(|(p, c)| p * (c - mean).powi(2)).sum();
        (mean, var.sqrt())
    }

    fn step_matrices(&mut self, dt: f64) -> &[Matrix2] {
        if self.step_cache.as_ref().map(|(h, _)| *h) != Some(dt) {
            let ms = self.params.iter().map(|p| NoJumpPropagator::new(p).matrix(dt)).collect();
            self.step_cache = Some((dt, ms));
        }
        &self.step_cache.as_ref().expect("cache filled").1
    }

    /// Advance one bin of width `dt`.
    ///
    /// Without a click every state evolves under the no-jump propagator and
    /// its weight gains the log of the squared-norm ratio. With a click the
    /// weight gains `ln |c_e|^2` (the candidate-independent `ln(gamma dt)` goes
    /// to `log_offset`) and the state resets to `|g>`.
    pub fn step_dt(&mut self, click: bool, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeStep(dt));
        }
        if self.base.eta != 1.0 {
            return Err(Error::NotUnitEfficiency("time-stepped likelihood"));
        }
        let gamma = self.base.gamma;
        let worst = self.states.iter().map(|s| gamma * s.c_e.norm_sqr() * dt).fold(0.0, f64::max);
        if worst >= 1.0 {
            return Err(Error::StepTooLarge(worst));
        }
        if click {
            for (w, s) in self.log_weights.iter_mut().zip(self.states.iter_mut()) {
                *w += s.c_e.norm_sqr().ln();
                *s = PureState::ground();
            }
            self.log_offset += (gamma * dt).ln();
        } else {
            let matrices = self.step_matrices(dt).to_vec();
            for ((w, s), m) in self.log_weights.iter_mut().zip(self.states.iter_mut()).zip(&matrices) {
                let next = apply_matrix(m, s);
                let n = next.norm_sqr();
                *w += n.ln();
                *s = next.normalized();
            }
        }
        self.t_now += dt;
        self.renormalize_if_needed()
    }

    fn renormalize_if_needed(&mut self) -> Result<()> {
        if self.log_weights.iter().any(|w| w.is_finite() && *w < RENORMALIZE_BELOW) {
            self.renormalize()?;
        }
        Ok(())
    }

    /// Shift the log-weights so the largest is zero.
    pub fn renormalize(&mut self) -> Result<()> {
        let m = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::AllCandidatesExcluded);
        }
        for w in &mut self.log_weights {
            *w -= m;
        }
        self.log_offset += m;
        Ok(())
    }
}

/// Max-subtracted softmax; `-inf` entries get zero mass.
pub fn posterior(log_weights: &[f64]) -> Vec<f64> {
    let m = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return vec![f64::NAN; log_weights.len()];
    }
    let e: Vec<f64> = log_weights.iter().map(|w| (w - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// Posterior after some prefix of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSnapshot {
    pub t: f64,
    pub clicks: usize,
    pub posterior: Vec<f64>,
}

/// Feed a record through [`LikelihoodGrid::step_dt`] in bins of width `dt`.
///
/// A click is processed in the bin that contains it, before any evolution in
/// that bin. Snapshots are taken at `t = 0`, after every click, every
/// `snapshot_every` bins when nonzero, and at the end.
pub fn filter_record(
    grid: &mut LikelihoodGrid,
    record: &ClickRecord,
    dt: f64,
    snapshot_every: usize,
) -> Result<Vec<PosteriorSnapshot>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeStep(dt));
    }
    let bins = (record.duration / dt - 1e-9).ceil().max(0.0) as usize;
    let mut snapshots = vec![PosteriorSnapshot { t: grid.t_now, clicks: 0, posterior: grid.posterior() }];
    let mut next_click = 0;
    for k in 0..bins {
        let bin_end = (k + 1) as f64 * dt;
        let click = next_click < record.times.len() && record.times[next_click] < bin_end;
        if click {
            next_click += 1;
            if next_click < record.times.len() && record.times[next_click] < bin_end {
                return Err(Error::StepTooLarge(dt));
            }
        }
        grid.step_dt(click, dt)?;
        let periodic = snapshot_every > 0 && (k + 1) % snapshot_every == 0;
        if click || periodic || k + 1 == bins {
            snapshots.push(PosteriorSnapshot { t: grid.t_now, clicks: next_click, posterior: grid.posterior() });
        }
    }
    Ok(snapshots)
}

/// Per-candidate waiting-time tables, extended on demand.
#[derive(Debug, Clone)]
pub struct CandidateTables {
    pub theta_name: Theta,
    pub base: AtomParams,
    pub candidates: Vec<f64>,
    pub tables: Vec<WaitingTimeTable>,
}

/// Relative accuracy of linearly interpolated densities.
pub const INTERPOLATION_TOL: f64 = 1e-6;

impl CandidateTables {
    /// Tables on grids fine enough for linear interpolation to
    /// [`INTERPOLATION_TOL`] and long enough to hold all but
    /// [`DEFAULT_TRUNCATION`] of the probability.
    pub fn build(base: &AtomParams, theta_name: Theta, candidates: &[f64]) -> Result<Self> {
        use rayon::prelude::*;
        let tables = candidates
            .par_iter()
            .map(|&c| {
                let p = base.with_theta(theta_name, c)?;
                let grid = choose_grid(&p, 1.0 - DEFAULT_TRUNCATION)?;
                let coarse = wtd_numeric(&p, &grid)?;
                let dtau = coarse.interpolation_step(INTERPOLATION_TOL);
                if dtau < grid.dtau {
                    wtd_numeric(&p, &TauGrid::covering(dtau, grid.tau_max())?)
                } else {
                    Ok(coarse)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { theta_name, base: *base, candidates: candidates.to_vec(), tables })
    }

    /// Extend every table whose grid ends before `tau`.
    pub fn ensure_covers(&mut self, tau: f64) -> Result<()> {
        for table in &mut self.tables {
            if table.tau_max() < tau {
                let grid = TauGrid::covering(table.grid.dtau, tau * 1.25)?;
                *table = wtd_numeric(&table.params, &grid)?;
            }
        }
        Ok(())
    }
}

/// Options of [`loglik_waiting_times`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitingTimeLikelihood {
    /// Include the no-click probability of the interval after the last click.
    pub censor_trailing: bool,
}

impl Default for WaitingTimeLikelihood {
    fn default() -> Self {
        Self { censor_trailing: true }
    }
}

/// `ln L(theta) = sum_i ln w(tau_i; theta)`, plus `ln S(trailing)` when a
/// trailing open interval is given.
pub fn loglik_waiting_times(
    taus: &WaitingTimes,
    trailing: Option<f64>,
    tables: &mut CandidateTables,
) -> Result<LikelihoodGrid> {
    let longest = taus.taus.iter().copied().chain(trailing).fold(0.0, f64::max);
    tables.ensure_covers(longest)?;
    let mut grid = init_uniform(&tables.base, tables.theta_name, &tables.candidates)?;
    for (w, table) in grid.log_weights.iter_mut().zip(&tables.tables) {
        let mut acc = 0.0;
        for &tau in &taus.taus {
            acc += table.density_at(tau).expect("table covers tau").ln();
        }
        if let Some(t) = trailing {
            acc += table.survival_at(t).expect("table covers trailing interval").ln();
        }
        *w = acc;
    }
    grid.t_now = taus.taus.iter().sum::<f64>() + trailing.unwrap_or(0.0);
    grid.renormalize()?;
    Ok(grid)
}

/// Waiting-time log-likelihood of a whole record.
pub fn loglik_record(
    record: &ClickRecord,
    tables: &mut CandidateTables,
    opts: WaitingTimeLikelihood,
) -> Result<LikelihoodGrid> {
    let trailing = (opts.censor_trailing && record.trailing_interval() > 0.0).then(|| record.trailing_interval());
    loglik_waiting_times(&waiting_times(record), trailing, tables)
}

/// Grid maximum-likelihood value of the parameter.
pub fn grid_mle(record: &ClickRecord, theta_name: Theta, candidates: &[f64]) -> Result<f64> {
    let mut tables = CandidateTables::build(&record.params, theta_name, candidates)?;
    let grid = loglik_record(record, &mut tables, WaitingTimeLikelihood::default())?;
    Ok(grid.candidates[grid.argmax()])
}
