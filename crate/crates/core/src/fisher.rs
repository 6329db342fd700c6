//! Fisher information carried by the waiting times between reported clicks.
//!
//! Because every reported click resets the atom to `|g>`, waiting times are
//! i.i.d. draws from `w(tau; theta)` and the Fisher information of a record
//! with `N` clicks is `N / a^2` with
//!
//! ```text
//! 1 / a^2 = 4 ∫ (∂Φ/∂θ)^2 dτ,   Φ = sqrt(w)
//! ```
//!
//! The `Φ` form stays finite at the exact zeros of `w` that occur at unit
//! efficiency, where the equivalent `∫ (∂w/∂θ)^2 / w dτ` is `0/0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::steady_state_ee;
use crate::error::{Error, Result};
use crate::params::{AtomParams, Theta};
use crate::waiting_time::{choose_grid_with, trapezoid, wtd_numeric_with, GridOptions, TauGrid, WaitingTimeTable};

/// Density floor used by the `(∂w)^2 / w` cross-check.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherOptions {
    /// Central-difference step; `None` means [`default_step`].
    pub h: Option<f64>,
    pub grid: GridOptions,
    /// Maximum relative disagreement between steps `h` and `h/2`.
    pub richardson_tol: f64,
}

impl Default for FisherOptions {
    fn default() -> Self {
        Self { h: None, grid: GridOptions::default(), richardson_tol: 0.01 }
    }
}

/// `1e-6 * max(|theta|, gamma)`. At unit efficiency `sqrt(w)` has kinks at
/// the zeros of `w`, and a central difference straddling a kink biases the
/// integral by a term linear in `h`, so the step is kept small.
pub fn default_step(params: &AtomParams, theta: Theta) -> f64 {
    1e-6 * params.theta(theta).abs().max(params.gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherDiagnostics {
    pub grid_nodes: usize,
    pub dtau: f64,
    pub tau_max: f64,
    pub h: f64,
    /// Largest probability mass beyond the grid among the difference tables.
    pub truncation: f64,
    /// Per-photon information recomputed with step `h / 2`.
    pub f_half_step: f64,
    /// Per-photon information from `∫ (∂w)^2 / max(w, floor)`.
    pub f_density_form: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub theta_name: Theta,
    pub theta_value: f64,
    pub eta: f64,
    /// `1 / a^2`, information per reported click.
    pub f_per_photon: f64,
    /// Information per unit time at the asymptotic click rate `eta gamma rho_ee^st`.
    pub f_per_time: f64,
    /// Scaled uncertainty `ΔS sqrt(N)`; infinite when no information is available.
    pub a: f64,
    pub diagnostics: FisherDiagnostics,
}

/// Waiting-time tables at `theta ± h` on a shared grid.
#[derive(Debug, Clone)]
pub struct DifferencePair {
    pub minus: WaitingTimeTable,
    pub plus: WaitingTimeTable,
    pub h: f64,
}

impl DifferencePair {
    pub fn new(params: &AtomParams, theta: Theta, grid: &TauGrid, h: f64, dt: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("derivative step must be positive, got {h}")));
        }
        let centre = params.theta(theta);
        let lo = params.with_theta(theta, centre - h)?;
        let hi = params.with_theta(theta, centre + h)?;
        let (minus, plus) = rayon::join(|| wtd_numeric_with(&lo, grid, dt), || wtd_numeric_with(&hi, grid, dt));
        Ok(Self { minus: minus?, plus: plus?, h })
    }

    /// Central difference `∂w/∂θ` at the grid nodes.
    pub fn derivative(&self) -> Vec<f64> {
        self.minus.w.iter().zip(&self.plus.w).map(|(m, p)| (p - m) / (2.0 * self.h)).collect()
    }

    /// `4 ∫ (∂Φ/∂θ)^2 dτ`.
    pub fn phi_form(&self) -> f64 {
        let integrand: Vec<f64> = self
            .minus
            .w
            .iter()
            .zip(&self.plus.w)
            .map(|(m, p)| ((p.sqrt() - m.sqrt()) / (2.0 * self.h)).powi(2))
            .collect();
        4.0 * trapezoid(&integrand, self.minus.grid.dtau)
    }

    /// `∫ (∂w/∂θ)^2 / w dτ` with `w` floored at [`DENSITY_FLOOR`].
    pub fn density_form(&self) -> f64 {
        let integrand: Vec<f64> = self
            .minus
            .w
            .iter()
            .zip(&self.plus.w)
            .map(|(m, p)| {
                let w = (0.5 * (m + p)).max(DENSITY_FLOOR);
                ((p - m) / (2.0 * self.h)).powi(2) / w
            })
            .collect();
        trapezoid(&integrand, self.minus.grid.dtau)
    }
}

/// Per-photon Fisher information with default options and an optional step.
pub fn fisher_per_photon(params: &AtomParams, theta: Theta, h: Option<f64>) -> Result<FisherResult> {
    fisher_per_photon_with(params, theta, &FisherOptions { h, ..FisherOptions::default() })
}

/// Per-photon Fisher information from the `Φ = sqrt(w)` quadrature, gated by
/// agreement between steps `h` and `h / 2`.
pub fn fisher_per_photon_with(params: &AtomParams, theta: Theta, opts: &FisherOptions) -> Result<FisherResult> {
    params.validate()?;
    let h = opts.h.unwrap_or_else(|| default_step(params, theta));
    let grid = choose_grid_with(params, &opts.grid)?;
    let dt = opts.grid.dt.unwrap_or_else(|| params.default_dt());
    let (coarse, fine) = rayon::join(
        || DifferencePair::new(params, theta, &grid, h, dt),
        || DifferencePair::new(params, theta, &grid, h / 2.0, dt),
    );
    let (coarse, fine) = (coarse?, fine?);
    let f = coarse.phi_form();
    let f_half = fine.phi_form();
    let scale_floor = 1e-12 / params.gamma.powi(2);
    if (f - f_half).abs() > opts.richardson_tol * f_half.abs() + scale_floor {
        return Err(Error::Richardson { coarse: f, fine: f_half });
    }
    let truncation = coarse.minus.truncation.max(coarse.plus.truncation);
    Ok(FisherResult {
        theta_name: theta,
        theta_value: params.theta(theta),
        eta: params.eta,
        f_per_photon: f,
        f_per_time: f * params.eta * params.gamma * steady_state_ee(params),
        a: 1.0 / f.sqrt(),
        diagnostics: FisherDiagnostics {
            grid_nodes: grid.len,
            dtau: grid.dtau,
            tau_max: grid.tau_max(),
            h,
            truncation,
            f_half_step: f_half,
            f_density_form: coarse.density_form(),
        },
    })
}

/// Closed-form Rabi-frequency information on resonance at unit efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiFisher {
    /// `8 / gamma^2 + 4 / omega^2`.
    pub per_photon: f64,
    /// `per_photon * gamma * rho_ee^st`, identically `4 / gamma`.
    pub per_time: f64,
}

pub fn fisher_analytic_rabi(params: &AtomParams) -> Result<RabiFisher> {
    params.validate()?;
    if params.delta != 0.0 {
        return Err(Error::NotResonant("fisher_analytic_rabi"));
    }
    if params.eta != 1.0 {
        return Err(Error::NotUnitEfficiency("fisher_analytic_rabi"));
    }
    if params.omega == 0.0 {
        return Err(Error::NoFluorescence);
    }
    let per_photon = 8.0 / params.gamma.powi(2) + 4.0 / params.omega.powi(2);
    Ok(RabiFisher { per_photon, per_time: per_photon * params.gamma * steady_state_ee(params) })
}

/// Information per click when clicks carry only the mean-rate information,
/// `(∂θ ρ_ee^st / ρ_ee^st)^2`, the vanishing-efficiency limit.
pub fn fisher_low_eta(params: &AtomParams, theta: Theta) -> Result<f64> {
    params.validate()?;
    let rho = steady_state_ee(params);
    if rho == 0.0 {
        return Err(Error::NoFluorescence);
    }
    let h = default_step(params, theta);
    let centre = params.theta(theta);
    let up = steady_state_ee(&params.with_theta(theta, centre + h)?);
    let down = steady_state_ee(&params.with_theta(theta, centre - h)?);
    Ok(((up - down) / (2.0 * h) / rho).powi(2))
}

/// Cramér-Rao standard deviation `1 / sqrt(N f)` for `N` clicks.
pub fn crb_sigma(f_per_photon: f64, n_photons: f64) -> Result<f64> {
    if !(f_per_photon > 0.0 && n_photons > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need positive information and photon count, got f={f_per_photon}, N={n_photons}"
        )));
    }
    Ok(1.0 / (n_photons * f_per_photon).sqrt())
}

/// Cartesian parameter scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub base: AtomParams,
    pub theta: Theta,
    pub omegas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub etas: Vec<f64>,
    pub options: FisherOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub omega: f64,
    pub delta: f64,
    pub eta: f64,
    pub result: std::result::Result<FisherResult, Error>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScanDiagnostics {
    /// `(omega, delta, eta_low, eta_high)` where `a` increased with `eta`.
    pub eta_monotonicity_violations: Vec<(f64, f64, f64, f64)>,
    /// Largest `|F(δ) - F(-δ)| / max(F(δ), F(-δ))` over mirrored pairs.
    pub max_detuning_asymmetry: Option<f64>,
    pub failed_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub diagnostics: ScanDiagnostics,
}

/// Fisher information over every `(omega, delta, eta)` combination, rows
/// ordered with `eta` varying fastest. Points run in parallel; failures are
/// kept as flagged rows.
pub fn scan(spec: &ScanSpec) -> ScanTable {
    let points: Vec<(f64, f64, f64)> = spec
        .omegas
        .iter()
        .flat_map(|&o| spec.deltas.iter().flat_map(move |&d| spec.etas.iter().map(move |&e| (o, d, e))))
        .collect();
    let rows: Vec<ScanRow> = points
        .par_iter()
        .map(|&(omega, delta, eta)| {
            let result = AtomParams::new(omega, delta, spec.base.gamma, eta)
                .and_then(|p| fisher_per_photon_with(&p, spec.theta, &spec.options));
            ScanRow { omega, delta, eta, result }
        })
        .collect();
    let diagnostics = scan_diagnostics(&rows);
    ScanTable { rows, diagnostics }
}

fn scan_diagnostics(rows: &[ScanRow]) -> ScanDiagnostics {
    let ok: Vec<(f64, f64, f64, &FisherResult)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|f| (r.omega, r.delta, r.eta, f)))
        .collect();
    let mut diag = ScanDiagnostics { failed_rows: rows.len() - ok.len(), ..Default::default() };

    let mut groups: Vec<((f64, f64), Vec<(f64, f64)>)> = Vec::new();
    for &(o, d, e, f) in &ok {
        match groups.iter_mut().find(|(k, _)| *k == (o, d)) {
            Some((_, v)) => v.push((e, f.a)),
            None => groups.push(((o, d), vec![(e, f.a)])),
        }
    }
    for ((o, d), mut series) in groups {
        series.sort_by(|x, y| x.0.total_cmp(&y.0));
        for pair in series.windows(2) {
            if pair[1].1 > pair[0].1 * (1.0 + 1e-9) {
                diag.eta_monotonicity_violations.push((o, d, pair[0].0, pair[1].0));
            }
        }
    }

    for &(o, d, e, f) in &ok {
        if d <= 0.0 {
            continue;
        }
        if let Some(&(_, _, _, g)) = ok.iter().find(|(o2, d2, e2, _)| *o2 == o && *e2 == e && *d2 == -d) {
            let big = f.f_per_photon.max(g.f_per_photon);
            if big > 0.0 {
                let asym = (f.f_per_photon - g.f_per_photon).abs() / big;
                diag.max_detuning_asymmetry = Some(diag.max_detuning_asymmetry.map_or(asym, |m: f64| m.max(asym)));
            }
        }
    }
    diag
}
