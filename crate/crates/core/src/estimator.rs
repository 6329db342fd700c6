//! Linear estimator built from binned waiting times.
//!
//! With bins `[j dtau, (j+1) dtau)` of expected count `N wbar_j dtau`, the
//! estimator is
//!
//! ```text
//! dtheta = sum_j g_j n_j + C,   g_j = beta dwbar_j / (2 wbar_j),   C = -N sum_j g_j wbar_j dtau
//! ```
//!
//! with `beta = 2 / (N F1)` and `F1 = sum_j dwbar_j^2 / wbar_j dtau` the
//! information per click carried by the binned counts. Its variance is
//! `1 / (N F1)` at the expansion point. Bins where `wbar` is below
//! [`W_FLOOR_REL`] of its maximum get zero gain and are left out of `C` and
//! `F1`.

use serde::{Deserialize, Serialize};

use crate::bayes::{grid_mle, linspace};
use crate::error::{Error, Result};
use crate::fisher::{default_step, DifferencePair};
use crate::params::{AtomParams, Theta};
use crate::trajectory::{waiting_times, ClickRecord};
use crate::waiting_time::{choose_grid, wtd_numeric_with, TauGrid, DEFAULT_TRUNCATION};

/// Relative density floor below which bins are excluded.
pub const W_FLOOR_REL: f64 = 1e-9;

/// Largest accepted `|dtheta| / |theta|` in one update.
pub const TRUST_REGION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingHistogram {
    pub dtau: f64,
    pub counts: Vec<u64>,
    /// All waiting times, including those beyond the last bin.
    pub n_total: u64,
    pub overflow: u64,
}

impl WaitingHistogram {
    pub fn new(taus: &[f64], dtau: f64, bins: usize) -> Result<Self> {
        if !(dtau > 0.0 && dtau.is_finite()) || bins == 0 {
            return Err(Error::InvalidParameter(format!("histogram needs dtau > 0 and bins > 0, got {dtau}, {bins}")));
        }
        let mut counts = vec![0u64; bins];
        let mut overflow = 0;
        for &tau in taus {
            if !(tau >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative waiting time {tau}")));
            }
            match counts.get_mut((tau / dtau) as usize) {
                Some(c) => *c += 1,
                None => overflow += 1,
            }
        }
        Ok(Self { dtau, counts, n_total: taus.len() as u64, overflow })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainFunction {
    pub theta_name: Theta,
    /// Expansion point.
    pub theta_prior: f64,
    pub n_ref: f64,
    pub dtau: f64,
    /// Gain per bin.
    pub g: Vec<f64>,
    pub c: f64,
    /// Bin-averaged density and its derivative.
    pub w_bar: Vec<f64>,
    pub dw_bar: Vec<f64>,
    /// Information per click of the binned counts.
    pub fisher_binned: f64,
    pub excluded_bins: usize,
    /// Probability carried by excluded bins.
    pub excluded_mass: f64,
}

fn bin_average(node_values: &[f64]) -> Vec<f64> {
    node_values.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Gain and offset from node values of `w` and `dw/dtheta` on a shared grid.
pub fn build_gain(
    theta_name: Theta,
    theta_prior: f64,
    w: &[f64],
    dw: &[f64],
    dtau: f64,
    n_ref: f64,
) -> Result<GainFunction> {
    if w.len() != dw.len() || w.len() < 2 {
        return Err(Error::GridMismatch(format!("{} density nodes but {} derivative nodes", w.len(), dw.len())));
    }
    if !(n_ref >= 1.0) {
        return Err(Error::InvalidParameter(format!("reference count must be at least 1, got {n_ref}")));
    }
    let w_bar = bin_average(w);
    let dw_bar = bin_average(dw);
    let floor = W_FLOOR_REL * w_bar.iter().copied().fold(0.0, f64::max);
    let keep: Vec<bool> = w_bar.iter().map(|&x| x > floor && x > 0.0).collect();
    let fisher_binned: f64 = (0..w_bar.len()).filter(|&j| keep[j]).map(|j| dw_bar[j].powi(2) / w_bar[j] * dtau).sum();
    if !(fisher_binned > 0.0) {
        return Err(Error::Degenerate);
    }
    let half_beta = 1.0 / (n_ref * fisher_binned);
    let g: Vec<f64> =
        (0..w_bar.len()).map(|j| if keep[j] { half_beta * dw_bar[j] / w_bar[j] } else { 0.0 }).collect();
    let c = -n_ref * (0..w_bar.len()).filter(|&j| keep[j]).map(|j| g[j] * w_bar[j] * dtau).sum::<f64>();
    let excluded_bins = keep.iter().filter(|k| !**k).count();
    let excluded_mass = (0..w_bar.len()).filter(|&j| !keep[j]).map(|j| w_bar[j] * dtau).sum();
    Ok(GainFunction {
        theta_name,
        theta_prior,
        n_ref,
        dtau,
        g,
        c,
        w_bar,
        dw_bar,
        fisher_binned,
        excluded_bins,
        excluded_mass,
    })
}

impl GainFunction {
    /// Gain at `params` on the grid chosen for `params`.
    pub fn at(params: &AtomParams, theta_name: Theta, n_ref: f64) -> Result<Self> {
        let grid = choose_grid(params, 1.0 - DEFAULT_TRUNCATION)?;
        Self::on_grid(params, theta_name, &grid, n_ref)
    }

    pub fn on_grid(params: &AtomParams, theta_name: Theta, grid: &TauGrid, n_ref: f64) -> Result<Self> {
        let dt = params.default_dt();
        let h = default_step(params, theta_name);
        let (centre, pair) =
            rayon::join(|| wtd_numeric_with(params, grid, dt), || DifferencePair::new(params, theta_name, grid, h, dt));
        let (centre, pair) = (centre?, pair?);
        build_gain(theta_name, params.theta(theta_name), &centre.w, &pair.derivative(), grid.dtau, n_ref)
    }

    pub fn bins(&self) -> usize {
        self.g.len()
    }

    /// Bin centres.
    pub fn taus(&self) -> Vec<f64> {
        (0..self.bins()).map(|j| (j as f64 + 0.5) * self.dtau).collect()
    }

    /// `N sum_j g_j wbar_j dtau + C`, zero up to rounding.
    pub fn identity_residual(&self) -> f64 {
        self.n_ref * self.g.iter().zip(&self.w_bar).map(|(g, w)| g * w * self.dtau).sum::<f64>() + self.c
    }

    /// Standard deviation `1 / sqrt(N F1)` of the estimate for `n` clicks.
    pub fn sigma(&self, n: f64) -> f64 {
        1.0 / (n * self.fisher_binned).sqrt()
    }

    pub fn histogram(&self, taus: &[f64]) -> Result<WaitingHistogram> {
        WaitingHistogram::new(taus, self.dtau, self.bins())
    }

    fn check(&self, hist: &WaitingHistogram) -> Result<()> {
        if hist.dtau != self.dtau || hist.counts.len() != self.bins() {
            return Err(Error::GridMismatch(format!(
                "histogram has {} bins of {}, gain has {} bins of {}",
                hist.counts.len(),
                hist.dtau,
                self.bins(),
                self.dtau
            )));
        }
        Ok(())
    }
}

/// `dtheta = sum_j g_j n_j + C`.
pub fn linear_estimate(hist: &WaitingHistogram, gain: &GainFunction) -> Result<f64> {
    gain.check(hist)?;
    Ok(gain.g.iter().zip(&hist.counts).map(|(g, &n)| g * n as f64).sum::<f64>() + gain.c)
}

/// The same correction written as `(1/F1) sum_j dwbar_j dtau (n_j / (N wbar_j dtau) - 1)`.
pub fn linear_estimate_relative(hist: &WaitingHistogram, gain: &GainFunction) -> Result<f64> {
    gain.check(hist)?;
    let n = gain.n_ref;
    let s: f64 = (0..gain.bins())
        .filter(|&j| gain.g[j] != 0.0 || gain.dw_bar[j] == 0.0 && gain.w_bar[j] > 0.0)
        .map(|j| {
            let expected = n * gain.w_bar[j] * gain.dtau;
            gain.dw_bar[j] * gain.dtau * (hist.counts[j] as f64 / expected - 1.0)
        })
        .sum();
    Ok(s / gain.fisher_binned)
}

/// Click counts at which the estimate is updated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule(pub Vec<usize>);

impl Schedule {
    /// Roughly `per_decade` log-spaced counts from `lo` to `hi` inclusive.
    pub fn log(lo: usize, hi: usize, per_decade: usize) -> Result<Self> {
        if lo == 0 || hi < lo || per_decade == 0 {
            return Err(Error::InvalidParameter(format!("bad log schedule {lo}:{hi} with {per_decade} per decade")));
        }
        let steps = ((hi as f64 / lo as f64).log10() * per_decade as f64).round() as usize;
        let mut ns: Vec<usize> = (0..=steps)
            .map(|k| (lo as f64 * (hi as f64 / lo as f64).powf(k as f64 / steps.max(1) as f64)).round() as usize)
            .collect();
        ns.dedup();
        Ok(Self(ns))
    }

    /// Parses `lo:hi:log` (ten per decade), `lo:hi:log:k`, or a comma list.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse schedule '{s}'"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            [lo, hi, "log"] => Self::log(lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?, 10),
            [lo, hi, "log", k] => Self::log(
                lo.parse().map_err(|_| bad())?,
                hi.parse().map_err(|_| bad())?,
                k.parse().map_err(|_| bad())?,
            ),
            [list] => {
                let ns = list.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
                if ns.is_empty() || ns.contains(&0) || ns.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(bad());
                }
                Ok(Self(ns))
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub theta_hat: f64,
    pub sigma_crb: f64,
    pub delta_theta: f64,
}

/// Iterative estimate along a schedule: at each `N` the gain is rebuilt at the
/// current estimate, applied to the first `N` waiting times, and the estimate
/// moves by the correction. Counts beyond the record are skipped.
pub fn estimate_trace(record: &ClickRecord, theta_name: Theta, theta0: f64, schedule: &Schedule) -> Result<Vec<TraceRow>> {
    let taus = waiting_times(record).taus;
    let ns: Vec<usize> = schedule.0.iter().copied().filter(|&n| n <= taus.len()).collect();
    if ns.is_empty() {
        return Err(Error::InvalidParameter(format!("record has {} clicks, fewer than the schedule needs", taus.len())));
    }
    let mut theta = theta0;
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let params = record.params.with_theta(theta_name, theta)?;
        let gain = GainFunction::at(&params, theta_name, n as f64)?;
        let step = linear_estimate(&gain.histogram(&taus[..n])?, &gain)?;
        let limit = TRUST_REGION * theta.abs();
        if step.abs() > limit {
            return Err(Error::TrustRegion { step: step.abs(), limit });
        }
        theta += step;
        rows.push(TraceRow { n, theta_hat: theta, sigma_crb: gain.sigma(n as f64), delta_theta: step });
    }
    Ok(rows)
}

/// Starting value from a grid maximum-likelihood fit to the first
/// `n_initial` clicks, over `points` candidates spanning `[lo, hi]`.
pub fn initial_estimate(record: &ClickRecord, theta_name: Theta, n_initial: usize, lo: f64, hi: f64, points: usize) -> Result<f64> {
    if record.is_empty() {
        return Err(Error::InvalidParameter("record has no clicks".into()));
    }
    grid_mle(&record.truncated(n_initial), theta_name, &linspace(lo, hi, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gain5(n: f64) -> GainFunction {
        GainFunction::at(&AtomParams::resonant(5.0).unwrap(), Theta::Omega, n).unwrap()
    }

    #[test]
    fn histogram_counts_and_overflow() {
        let h = WaitingHistogram::new(&[0.0, 0.05, 0.1, 0.15, 5.0], 0.1, 3).unwrap();
        assert_eq!(h.counts, vec![2, 2, 0]);
        assert_eq!(h.overflow, 1);
        assert_eq!(h.n_total, 5);
        assert!(WaitingHistogram::new(&[-1.0], 0.1, 3).is_err());
        assert!(WaitingHistogram::new(&[1.0], 0.0, 3).is_err());
    }

    #[test]
    fn unbiasedness_identity() {
        let g = gain5(1e4);
        assert!(g.identity_residual().abs() < 1e-10);
        let exact = WaitingHistogram {
            dtau: g.dtau,
            counts: vec![0; g.bins()],
            n_total: 0,
            overflow: 0,
        };
        // zero counts give exactly the offset
        assert_eq!(linear_estimate(&exact, &g).unwrap(), g.c);
    }

    #[test]
    fn binned_information_approaches_closed_form() {
        // Bins straddling the zeros of w lose slope information, so the gap
        // to 8/gamma^2 + 4/omega^2 shrinks linearly with the bin width.
        let g = gain5(1e4);
        assert!(g.fisher_binned < 8.16 && g.fisher_binned > 0.98 * 8.16);
        assert!(g.excluded_mass < 1e-6);
        let p = AtomParams::resonant(5.0).unwrap();
        let fine = TauGrid::covering(g.dtau / 2.0, 60.0).unwrap();
        let half = GainFunction::on_grid(&p, Theta::Omega, &fine, 1e4).unwrap();
        let ratio = (8.16 - g.fisher_binned) / (8.16 - half.fisher_binned);
        assert!((ratio - 2.0).abs() < 0.2, "gap ratio {ratio}");
    }

    #[test]
    fn rounded_expected_counts_give_small_correction() {
        let g = gain5(1e4);
        let counts: Vec<u64> = g.w_bar.iter().map(|w| (1e4 * w * g.dtau).round() as u64).collect();
        let n_total = counts.iter().sum();
        let hist = WaitingHistogram { dtau: g.dtau, counts, n_total, overflow: 0 };
        assert!(linear_estimate(&hist, &g).unwrap().abs() < g.sigma(1e4));
    }

    #[test]
    fn two_forms_agree() {
        let g = gain5(500.0);
        let counts: Vec<u64> = (0..g.bins()).map(|j| ((j * 7919) % 5) as u64).collect();
        let n_total = counts.iter().sum();
        let hist = WaitingHistogram { dtau: g.dtau, counts, n_total, overflow: 0 };
        let a = linear_estimate(&hist, &g).unwrap();
        let b = linear_estimate_relative(&hist, &g).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let g = gain5(100.0);
        let hist = WaitingHistogram::new(&[0.3], g.dtau * 2.0, g.bins()).unwrap();
        assert!(matches!(linear_estimate(&hist, &g), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn no_information_is_degenerate() {
        let w = vec![0.5; 10];
        let dw = vec![0.0; 10];
        assert_eq!(build_gain(Theta::Omega, 1.0, &w, &dw, 0.1, 10.0), Err(Error::Degenerate));
    }

    #[test]
    fn gain_peaks_where_density_slope_is_steep() {
        let g = gain5(1.0);
        let gw: Vec<f64> = g.g.iter().zip(&g.w_bar).map(|(g, w)| (g * w).abs()).collect();
        let dw: Vec<f64> = g.dw_bar.iter().map(|d| d.abs()).collect();
        let i = crate::bayes::argmax(&gw);
        let k = crate::bayes::argmax(&dw);
        assert_eq!(i, k);
    }

    #[test]
    fn schedules() {
        let s = Schedule::parse("100:10000:log").unwrap();
        assert_eq!(s.0.first(), Some(&100));
        assert_eq!(s.0.last(), Some(&10000));
        assert_eq!(s.0.len(), 21);
        assert_eq!(Schedule::parse("10, 20,40").unwrap().0, vec![10, 20, 40]);
        assert!(Schedule::parse("20,10").is_err());
        assert!(Schedule::parse("a:b:log").is_err());
        assert!(Schedule::parse("0:10:log").is_err());
    }
}
