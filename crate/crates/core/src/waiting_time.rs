//! Waiting-time distributions between reported clicks.
//!
//! After every reported click the atom is in `|g>`, so the delay to the next
//! reported click has density `w(tau) = eta * gamma * rho_ee(tau)`, where
//! `rho(tau)` solves the no-jump master equation from `|g><g|`. The trace of
//! that un-normalized state is the probability that no click has been
//! reported yet.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    analytic_nojump_ee, apply_matrix, nojump_transfer, steady_state_ee, DensityMatrix, NoJumpPropagator,
    PureState,
};
use crate::error::{Error, Result};
use crate::params::AtomParams;
use crate::record_io::fmt_f64;

/// Default bound on the probability mass beyond the end of a grid.
pub const DEFAULT_TRUNCATION: f64 = 1e-10;

/// Uniform grid `tau_j = j * dtau`, `j = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    pub dtau: f64,
    pub len: usize,
}

impl TauGrid {
    /// Grid with step `dtau` whose last node is at or beyond `tau_max`.
    pub fn covering(dtau: f64, tau_max: f64) -> Result<Self> {
        if !(dtau > 0.0 && dtau.is_finite() && tau_max >= 0.0 && tau_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad grid dtau={dtau}, tau_max={tau_max}")));
        }
        Ok(Self { dtau, len: (tau_max / dtau).ceil() as usize + 1 })
    }

    pub fn tau(&self, j: usize) -> f64 {
        j as f64 * self.dtau
    }

    pub fn tau_max(&self) -> f64 {
        self.tau(self.len - 1)
    }

    pub fn taus(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|j| self.tau(j))
    }
}

/// Knobs for [`choose_grid_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Minimum captured probability, `1 - survival(tau_max)`.
    pub mass_target: f64,
    /// Maximum RK4 step; `None` uses [`AtomParams::default_dt`].
    pub dt: Option<f64>,
    /// Minimum nodes per period of the fastest oscillation.
    pub points_per_period: f64,
    /// Bound on the trapezoid endpoint error of the mass, `dtau^4 |w'''(0)| / 720`.
    pub quadrature_tol: f64,
    pub max_nodes: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            mass_target: 1.0 - DEFAULT_TRUNCATION,
            dt: None,
            points_per_period: 40.0,
            quadrature_tol: 1e-11,
            max_nodes: 50_000_000,
        }
    }
}

impl GridOptions {
    pub fn with_mass_target(mass_target: f64) -> Self {
        Self { mass_target, ..Self::default() }
    }
}

/// Grid step resolving the dynamics of `params`.
///
/// The step takes the smaller of two bounds: `points_per_period` nodes per
/// period `2 pi / max(sqrt(omega^2 + delta^2), gamma)`, and the trapezoid
/// endpoint error of the normalization, which is governed by
/// `w'''(0) = -3/4 eta gamma^2 omega^2`.
pub fn grid_step(params: &AtomParams, opts: &GridOptions) -> f64 {
    let by_period = 2.0 * PI / (opts.points_per_period * params.fastest_rate());
    let third = 0.75 * params.eta * params.gamma.powi(2) * params.omega.powi(2);
    if third > 0.0 {
        by_period.min((720.0 * opts.quadrature_tol / third).powf(0.25))
    } else {
        by_period
    }
}

pub fn choose_grid(params: &AtomParams, mass_target: f64) -> Result<TauGrid> {
    choose_grid_with(params, &GridOptions::with_mass_target(mass_target))
}

/// Uniform grid fine enough for `params` and long enough that the no-click
/// probability at its end is below `1 - mass_target`.
pub fn choose_grid_with(params: &AtomParams, opts: &GridOptions) -> Result<TauGrid> {
    params.validate()?;
    if !(opts.mass_target > 0.0 && opts.mass_target < 1.0) {
        return Err(Error::InvalidParameter(format!("mass target must lie in (0, 1), got {}", opts.mass_target)));
    }
    if steady_state_ee(params) == 0.0 {
        return Err(Error::NoFluorescence);
    }
    let dtau = grid_step(params, opts);
    let transfer = nojump_transfer(params, dtau, opts.dt.unwrap_or_else(|| params.default_dt()));
    let threshold = 1.0 - opts.mass_target;
    let mut y = DensityMatrix::ground().to_vec();
    let mut len = 1;
    while y[0] + y[1] >= threshold {
        if len >= opts.max_nodes {
            return Err(Error::GridTooLarge(len));
        }
        y = transfer.apply(&y);
        len += 1;
    }
    Ok(TauGrid { dtau, len })
}

/// Asymptotic exponential rate of the waiting-time tail, `eta gamma rho_ee^st`,
/// which is also the mean rate of reported clicks.
pub fn wtd_tail_rate(params: &AtomParams) -> f64 {
    params.eta * params.gamma * steady_state_ee(params)
}

/// Tabulated waiting-time density on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingTimeTable {
    pub params: AtomParams,
    pub grid: TauGrid,
    /// Density at the grid nodes, in units of gamma.
    pub w: Vec<f64>,
    /// Probability that no click has been reported by each node.
    pub survival: Vec<f64>,
    /// Trapezoid integral of `w` over the grid.
    pub mass: f64,
    /// Probability mass beyond the last node, `survival(tau_max)`.
    pub truncation: f64,
    /// RK4 step used, or `None` for closed-form tables.
    pub integrator_dt: Option<f64>,
}

/// Closed-form density on resonance at unit efficiency.
pub fn wtd_analytic(params: &AtomParams, grid: &TauGrid) -> Result<WaitingTimeTable> {
    params.validate()?;
    if params.delta != 0.0 {
        return Err(Error::NotResonant("wtd_analytic"));
    }
    if params.eta != 1.0 {
        return Err(Error::NotUnitEfficiency("wtd_analytic"));
    }
    let w = grid
        .taus()
        .map(|tau| analytic_nojump_ee(tau, params).map(|ee| params.gamma * ee))
        .collect::<Result<Vec<_>>>()?;
    let step = NoJumpPropagator::new(params).matrix(grid.dtau);
    let mut psi = PureState::ground();
    let mut survival = Vec::with_capacity(grid.len);
    for _ in 0..grid.len {
        survival.push(psi.norm_sqr());
        psi = apply_matrix(&step, &psi);
    }
    Ok(WaitingTimeTable::assemble(*params, *grid, w, survival, None))
}

/// Density from RK4 integration of the no-jump master equation with the
/// default step.
pub fn wtd_numeric(params: &AtomParams, grid: &TauGrid) -> Result<WaitingTimeTable> {
    wtd_numeric_with(params, grid, params.default_dt())
}

/// As [`wtd_numeric`] with an explicit maximum RK4 step.
pub fn wtd_numeric_with(params: &AtomParams, grid: &TauGrid, max_step: f64) -> Result<WaitingTimeTable> {
    params.validate()?;
    if !(max_step > 0.0 && max_step.is_finite()) {
        return Err(Error::InvalidTimeStep(max_step));
    }
    let transfer = nojump_transfer(params, grid.dtau, max_step);
    let scale = params.eta * params.gamma;
    let mut y = DensityMatrix::ground().to_vec();
    let mut w = Vec::with_capacity(grid.len);
    let mut survival = Vec::with_capacity(grid.len);
    for _ in 0..grid.len {
        w.push((scale * y[1]).max(0.0));
        survival.push((y[0] + y[1]).max(0.0));
        y = transfer.apply(&y);
    }
    let substeps = crate::dynamics::substeps(grid.dtau, max_step);
    Ok(WaitingTimeTable::assemble(*params, *grid, w, survival, Some(grid.dtau / substeps as f64)))
}

pub(crate) fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, .., last] => (values.iter().sum::<f64>() - 0.5 * (first + last)) * dx,
    }
}

impl WaitingTimeTable {
    fn assemble(
        params: AtomParams,
        grid: TauGrid,
        w: Vec<f64>,
        survival: Vec<f64>,
        integrator_dt: Option<f64>,
    ) -> Self {
        let mass = trapezoid(&w, grid.dtau);
        let truncation = *survival.last().unwrap_or(&1.0);
        Self { params, grid, w, survival, mass, truncation, integrator_dt }
    }

    pub fn tau(&self, j: usize) -> f64 {
        self.grid.tau(j)
    }

    pub fn tau_max(&self) -> f64 {
        self.grid.tau_max()
    }

    fn locate(&self, tau: f64) -> Option<(usize, f64)> {
        if !(tau >= 0.0) || tau > self.tau_max() {
            return None;
        }
        let x = tau / self.grid.dtau;
        let j = (x.floor() as usize).min(self.grid.len.saturating_sub(2));
        Some((j, x - j as f64))
    }

    fn interpolate(&self, values: &[f64], tau: f64) -> Option<f64> {
        if self.grid.len == 1 {
            return (tau == 0.0).then_some(values[0]);
        }
        self.locate(tau).map(|(j, frac)| values[j] + frac * (values[j + 1] - values[j]))
    }

    /// Linear interpolation of the density; `None` beyond the grid.
    pub fn density_at(&self, tau: f64) -> Option<f64> {
        self.interpolate(&self.w, tau)
    }

    /// Linear interpolation of the no-click probability; `None` beyond the grid.
    pub fn survival_at(&self, tau: f64) -> Option<f64> {
        self.interpolate(&self.survival, tau)
    }

    /// Cumulative distribution `1 - survival`, saturating beyond the grid.
    pub fn cdf_at(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            0.0
        } else {
            1.0 - self.survival_at(tau).unwrap_or(self.truncation)
        }
    }

    /// Grid step at which linear interpolation of `w` is accurate to
    /// `rel_tol * max(w)`, from the bound `dtau^2 / 8 max|w''|` with `w''`
    /// estimated by second differences on this table.
    pub fn interpolation_step(&self, rel_tol: f64) -> f64 {
        let h = self.grid.dtau;
        let w_max = self.w.iter().copied().fold(0.0, f64::max);
        let curvature = self
            .w
            .windows(3)
            .map(|s| ((s[0] - 2.0 * s[1] + s[2]) / (h * h)).abs())
            .fold(0.0, f64::max);
        if curvature == 0.0 || w_max == 0.0 {
            return h;
        }
        h.min((8.0 * rel_tol * w_max / curvature).sqrt())
    }

    pub fn metadata(&self) -> TableMetadata {
        TableMetadata {
            params: self.params,
            dtau: self.grid.dtau,
            tau_max: self.tau_max(),
            nodes: self.grid.len,
            mass: self.mass,
            eps_trunc: self.truncation,
            tail_rate: wtd_tail_rate(&self.params),
            integrator_dt: self.integrator_dt,
        }
    }

    /// `# meta: {json}` line, a `tau,w` header and one row per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# meta: {}", serde_json::to_string(&self.metadata()).expect("metadata serialize"))?;
        writeln!(out, "tau,w")?;
        for (j, w) in self.w.iter().enumerate() {
            writeln!(out, "{},{}", fmt_f64(self.tau(j)), fmt_f64(*w))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "meta": self.metadata(),
            "tau": self.grid.taus().collect::<Vec<_>>(),
            "w": self.w,
        })
    }
}

/// Header describing a serialized table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub params: AtomParams,
    pub dtau: f64,
    pub tau_max: f64,
    pub nodes: usize,
    pub mass: f64,
    pub eps_trunc: f64,
    pub tail_rate: f64,
    pub integrator_dt: Option<f64>,
}
