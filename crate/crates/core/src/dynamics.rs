//! State representations of the two-level atom and its no-jump propagators.
//!
//! Basis ordering is `(g, e)`. In the frame rotating with the laser the
//! Hamiltonian is `H0 = -delta |e><e| + omega/2 (|e><g| + |g><e|)`, and the
//! conditional no-jump evolution with detector efficiency `eta` is
//!
//! ```text
//! d rho/dt = -i[H0, rho] - gamma/2 {|e><e|, rho} + (1 - eta) gamma rho_ee |g><g|
//! ```
//!
//! whose trace decays as `-eta * gamma * rho_ee`. For `eta = 1` a pure state
//! stays pure and evolves under `H_eff = H0 - i gamma/2 |e><e|`; for `eta -> 0`
//! the equation becomes the ordinary optical Bloch equations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{LinearSystem, Transfer};
use crate::params::AtomParams;

/// Positivity and hermiticity tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-9;

/// Un-normalized state vector of the atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    pub c_g: Complex64,
    pub c_e: Complex64,
}

impl PureState {
    pub fn ground() -> Self {
        Self { c_g: Complex64::new(1.0, 0.0), c_e: Complex64::new(0.0, 0.0) }
    }

    pub fn excited() -> Self {
        Self { c_g: Complex64::new(0.0, 0.0), c_e: Complex64::new(1.0, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_g.norm_sqr() + self.c_e.norm_sqr()
    }

    /// `|c_e|^2` of the normalized state.
    pub fn excited_population(&self) -> f64 {
        let n = self.norm_sqr();
        if n > 0.0 {
            self.c_e.norm_sqr() / n
        } else {
            0.0
        }
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            Self { c_g: self.c_g / n, c_e: self.c_e / n }
        } else {
            *self
        }
    }
}

/// Un-normalized density matrix; `rho_eg` is the conjugate of `rho_ge`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    pub rho_gg: f64,
    pub rho_ee: f64,
    pub rho_ge: Complex64,
}

impl DensityMatrix {
    pub fn ground() -> Self {
        Self { rho_gg: 1.0, rho_ee: 0.0, rho_ge: Complex64::new(0.0, 0.0) }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            rho_gg: psi.c_g.norm_sqr(),
            rho_ee: psi.c_e.norm_sqr(),
            rho_ge: psi.c_g * psi.c_e.conj(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho_gg + self.rho_ee
    }

    /// Non-negative populations, `|rho_ge|^2 <= rho_gg rho_ee` and trace at
    /// most one, all within `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.rho_gg >= -tol
            && self.rho_ee >= -tol
            && self.rho_ge.norm_sqr() <= self.rho_gg * self.rho_ee + tol
            && self.trace() <= 1.0 + tol
    }

    /// `[rho_gg, rho_ee, Re rho_eg, Im rho_eg]`.
    pub(crate) fn to_vec(self) -> [f64; 4] {
        [self.rho_gg, self.rho_ee, self.rho_ge.re, -self.rho_ge.im]
    }

    pub(crate) fn from_vec(y: [f64; 4]) -> Self {
        Self { rho_gg: y[0], rho_ee: y[1], rho_ge: Complex64::new(y[2], -y[3]) }
    }
}

pub type Matrix2 = [[Complex64; 2]; 2];

/// Non-hermitian no-jump Hamiltonian `H0 - i gamma/2 |e><e|`.
pub fn effective_hamiltonian(params: &AtomParams) -> Matrix2 {
    let half_omega = Complex64::new(params.omega / 2.0, 0.0);
    [
        [Complex64::new(0.0, 0.0), half_omega],
        [half_omega, Complex64::new(-params.delta, -params.gamma / 2.0)],
    ]
}

/// Exact propagator `exp(-i H_eff t)` of the no-jump Schrödinger equation.
///
/// Uses the closed form for a 2x2 generator `A = -i H_eff`:
/// `exp(A t) = e^{mu t} [cosh(nu t) I + sinh(nu t)/nu (A - mu I)]` with
/// `mu = tr A / 2` and `nu^2 = ((a - d)/2)^2 + b c`.
#[derive(Debug, Clone, Copy)]
pub struct NoJumpPropagator {
    generator: Matrix2,
    mu: Complex64,
    nu: Complex64,
}

impl NoJumpPropagator {
    pub fn new(params: &AtomParams) -> Self {
        let h = effective_hamiltonian(params);
        let minus_i = Complex64::new(0.0, -1.0);
        let a = [[minus_i * h[0][0], minus_i * h[0][1]], [minus_i * h[1][0], minus_i * h[1][1]]];
        let mu = (a[0][0] + a[1][1]) / 2.0;
        let half_diff = (a[0][0] - a[1][1]) / 2.0;
        let nu = (half_diff * half_diff + a[0][1] * a[1][0]).sqrt();
        Self { generator: a, mu, nu }
    }

    /// The matrix `exp(-i H_eff t)`.
    pub fn matrix(&self, t: f64) -> Matrix2 {
        let z = self.nu * t;
        let cosh = z.cosh();
        // sinh(nu t) / nu, regular at nu -> 0
        let sinhc = if z.norm() < 1e-4 {
            let z2 = z * z;
            (Complex64::new(1.0, 0.0) + z2 / 6.0 + z2 * z2 / 120.0) * t
        } else {
            z.sinh() / self.nu
        };
        let scale = (self.mu * t).exp();
        let a = &self.generator;
        [
            [scale * (cosh + sinhc * (a[0][0] - self.mu)), scale * sinhc * a[0][1]],
            [scale * sinhc * a[1][0], scale * (cosh + sinhc * (a[1][1] - self.mu))],
        ]
    }

    pub fn apply(&self, state: &PureState, t: f64) -> PureState {
        apply_matrix(&self.matrix(t), state)
    }
}

pub fn apply_matrix(m: &Matrix2, s: &PureState) -> PureState {
    PureState {
        c_g: m[0][0] * s.c_g + m[0][1] * s.c_e,
        c_e: m[1][0] * s.c_g + m[1][1] * s.c_e,
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTimeStep(dt))
    }
}

/// Evolve an un-normalized state under `H_eff` for `dt`.
///
/// The evolution is meaningful for `eta = 1` records; `eta` is ignored here.
pub fn nojump_propagate_pure(state: &PureState, params: &AtomParams, dt: f64) -> Result<PureState> {
    check_dt(dt)?;
    Ok(NoJumpPropagator::new(params).apply(state, dt))
}

/// Generator of the conditional no-jump master equation at efficiency `eta`.
pub fn nojump_generator(params: &AtomParams) -> LinearSystem<4> {
    generator(params, 1.0 - params.eta)
}

/// Generator of the unconditional master equation (optical Bloch equations).
pub fn master_equation_generator(params: &AtomParams) -> LinearSystem<4> {
    generator(params, 1.0)
}

fn generator(params: &AtomParams, feed: f64) -> LinearSystem<4> {
    let AtomParams { omega, delta, gamma, .. } = *params;
    // y = [gg, ee, Re rho_eg, Im rho_eg]
    LinearSystem {
        a: [
            [0.0, feed * gamma, 0.0, omega],
            [0.0, -gamma, 0.0, -omega],
            [0.0, 0.0, -gamma / 2.0, -delta],
            [-omega / 2.0, omega / 2.0, delta, -gamma / 2.0],
        ],
    }
}

/// Number of equal RK4 sub-steps covering `span` with steps no longer than `max_step`.
pub(crate) fn substeps(span: f64, max_step: f64) -> usize {
    ((span / max_step).ceil() as usize).max(1)
}

/// RK4 transfer matrix for one interval `span` of the no-jump equation.
pub fn nojump_transfer(params: &AtomParams, span: f64, max_step: f64) -> Transfer<4> {
    let n = substeps(span, max_step);
    nojump_generator(params).rk4_transfer(span / n as f64, n)
}

/// Advance `rho` by `dt` under the no-jump master equation with the default
/// RK4 step `1e-3 / max(omega, |delta|, gamma)`.
pub fn nojump_propagate_density(
    rho: &DensityMatrix,
    params: &AtomParams,
    dt: f64,
) -> Result<DensityMatrix> {
    propagate_density_with_step(rho, params, dt, params.default_dt())
}

/// As [`nojump_propagate_density`] with an explicit maximum RK4 step.
pub fn propagate_density_with_step(
    rho: &DensityMatrix,
    params: &AtomParams,
    dt: f64,
    max_step: f64,
) -> Result<DensityMatrix> {
    check_dt(dt)?;
    check_dt(max_step)?;
    let n = substeps(dt, max_step);
    let y = nojump_generator(params).integrate(&rho.to_vec(), dt / n as f64, n);
    Ok(DensityMatrix::from_vec(y))
}

/// Closed-form no-jump excited population from the ground state on resonance
/// at unit efficiency: `(omega / 2 lambda)^2 sin^2(lambda tau) e^{-gamma tau / 2}`,
/// `lambda = sqrt(omega^2 - gamma^2/4) / 2`.
///
/// Below `omega = gamma/2` the hyperbolic continuation is used, and the
/// critical point takes the `tau^2` limit.
pub fn analytic_nojump_ee(tau: f64, params: &AtomParams) -> Result<f64> {
    if params.delta != 0.0 {
        return Err(Error::NotResonant("analytic_nojump_ee"));
    }
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
    }
    let AtomParams { omega, gamma, .. } = *params;
    let lambda_sq = (omega * omega - gamma * gamma / 4.0) / 4.0;
    // sin(lambda tau) / lambda
    let ratio = if (omega - gamma / 2.0).abs() < 1e-9 {
        tau
    } else if lambda_sq > 0.0 {
        let l = lambda_sq.sqrt();
        (l * tau).sin() / l
    } else {
        let k = (-lambda_sq).sqrt();
        (k * tau).sinh() / k
    };
    Ok((omega / 2.0).powi(2) * ratio * ratio * (-gamma * tau / 2.0).exp())
}

/// Excited-state population of the stationary solution of the master equation.
///
/// Solves the three real fixed-point equations for
/// `(rho_ee, Re rho_eg, Im rho_eg)` with `rho_gg = 1 - rho_ee` by Cramer's rule.
pub fn steady_state_ee(params: &AtomParams) -> f64 {
    if params.omega == 0.0 {
        return 0.0;
    }
    let AtomParams { omega, delta, gamma, .. } = *params;
    let m = [
        [-gamma, 0.0, -omega],
        [0.0, -gamma / 2.0, -delta],
        [omega, delta, -gamma / 2.0],
    ];
    let b = [0.0, 0.0, omega / 2.0];
    let det = det3(&m);
    let mut m0 = m;
    for (row, bi) in m0.iter_mut().zip(b) {
        row[0] = bi;
    }
    det3(&m0) / det
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
