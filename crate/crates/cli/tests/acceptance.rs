//! Acceptance checks, one line per criterion.
//!
//! Every criterion is evaluated and reported. The process exits non-zero on a
//! failed criterion only when `ACCEPTANCE_STRICT` is set, so the report can
//! run inside the ordinary test suite.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use photocount::bayes::{filter_record, init_uniform, loglik_record, CandidateTables, WaitingTimeLikelihood};
use photocount::estimator::{estimate_trace, initial_estimate, Schedule};
use photocount::fisher::{fisher_analytic_rabi, fisher_low_eta, fisher_per_photon, scan, FisherOptions, ScanSpec};
use photocount::stats::{ks_p_value, ks_statistic, linear_fit, mean, median, std_dev};
use photocount::trajectory::{simulate_batch, waiting_times, StopCondition};
use photocount::waiting_time::{choose_grid, wtd_analytic, wtd_numeric, wtd_tail_rate, TauGrid};
use photocount::{AtomParams, Theta};
use rayon::prelude::*;

type Outcome = (bool, String);

// Tolerances.
const C1_REL: f64 = 1e-3;
const C2_ABS: f64 = 1e-6;
const C2_SPAN: f64 = 40.0;
const C3_ALPHA: f64 = 0.01;
const C3_MIN_PASSING: usize = 95;
const C4_SLOPE_REL: f64 = 0.02;
const C5_REL: f64 = 0.05;
const C6_MEDIAN: f64 = 0.8;
const C6_RATIO: (f64, f64) = (1.5, 2.7);
const C7_SD: (f64, f64) = (3.50e-3, 3.99e-3);
const C7_BIAS_SIGMAS: f64 = 0.5;
const C8_EVEN_REL: f64 = 1e-6;

fn resonant(omega: f64) -> AtomParams {
    AtomParams::resonant(omega).unwrap()
}

fn c1_fisher_closed_form() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for omega in [1.0, 2.0, 5.0, 10.0] {
        let p = resonant(omega);
        let exact = fisher_analytic_rabi(&p).unwrap().per_photon;
        match fisher_per_photon(&p, Theta::Omega, None) {
            Ok(f) => {
                let e1 = (f.f_per_photon / exact - 1.0).abs();
                let e2 = (f.f_per_time * p.gamma / 4.0 - 1.0).abs();
                ok &= e1 < C1_REL && e2 < C1_REL;
                notes.push(format!("omega={omega}: F={:.6} (rel {e1:.1e}), F/T rel {e2:.1e}", f.f_per_photon));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("omega={omega}: {e}"));
            }
        }
    }
    (ok, notes.join("; "))
}

fn c2_wtd_closed_form() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for omega in [1.0, 5.0] {
        let p = resonant(omega);
        let dtau = choose_grid(&p, 1.0 - 1e-10).unwrap().dtau;
        let grid = TauGrid::covering(dtau, C2_SPAN).unwrap();
        let num = wtd_numeric(&p, &grid).unwrap();
        let exact = wtd_analytic(&p, &grid).unwrap();
        let worst = num.w.iter().zip(&exact.w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let lambda = (omega * omega - 0.25 * p.gamma * p.gamma).sqrt() / 2.0;
        let minima: Vec<f64> =
            (1..grid.len - 1).filter(|&j| num.w[j] <= num.w[j - 1] && num.w[j] < num.w[j + 1]).map(|j| grid.tau(j)).collect();
        let expected: Vec<f64> = (1..).map(|k| k as f64 * std::f64::consts::PI / lambda).take_while(|t| *t < C2_SPAN - dtau).collect();
        let nodes_ok = minima.len() == expected.len()
            && minima.iter().zip(&expected).all(|(m, e)| (m - e).abs() <= dtau);
        ok &= worst < C2_ABS && nodes_ok;
        notes.push(format!("omega={omega}: max|dw|={worst:.1e}, {} nodes matched={nodes_ok}", expected.len()));
    }
    (ok, notes.join("; "))
}

fn c3_ks() -> Outcome {
    let p = resonant(5.0);
    let table = wtd_analytic(&p, &choose_grid(&p, 1.0 - 1e-12).unwrap()).unwrap();
    let records = simulate_batch(&p, StopCondition::Clicks(10_000), 3, 100).unwrap();
    let passing = records
        .par_iter()
        .filter(|r| {
            let taus = waiting_times(r).taus;
            ks_p_value(ks_statistic(&taus, |t| table.cdf_at(t)), taus.len()) > C3_ALPHA
        })
        .count();
    (passing >= C3_MIN_PASSING, format!("{passing}/100 seeds pass KS at alpha={C3_ALPHA}"))
}

fn c4_finite_efficiency() -> Outcome {
    let unit = resonant(5.0);
    let lambda = (25.0f64 - 0.25).sqrt() / 2.0;
    let mut nodes_ok = true;
    for eta in [0.1, 0.4, 0.7] {
        let p = unit.with_eta(eta).unwrap();
        let table = wtd_numeric(&p, &choose_grid(&p, 1.0 - 1e-10).unwrap()).unwrap();
        let mut k = 1;
        loop {
            let node = k as f64 * std::f64::consts::PI / lambda;
            match table.density_at(node) {
                Some(w) => nodes_ok &= w > 0.0,
                None => break,
            }
            k += 1;
        }
    }
    let low = unit.with_eta(0.01).unwrap();
    let grid = choose_grid(&low, 1.0 - 1e-10).unwrap();
    let table = wtd_numeric(&low, &grid).unwrap();
    let start = 2 * grid.len / 3;
    let x: Vec<f64> = (start..grid.len).map(|j| grid.tau(j)).collect();
    let y: Vec<f64> = table.w[start..].iter().map(|w| w.ln()).collect();
    let slope = linear_fit(&x, &y).0;
    let rate = wtd_tail_rate(&low);
    let slope_rel = (slope / -rate - 1.0).abs();

    let spec = ScanSpec {
        base: unit,
        theta: Theta::Omega,
        omegas: (1..=10).map(|k| k as f64).collect(),
        deltas: vec![0.0],
        etas: (1..=10).map(|k| k as f64 / 10.0).collect(),
        options: FisherOptions::default(),
    };
    let table = scan(&spec);
    let monotone = table.diagnostics.eta_monotonicity_violations.is_empty() && table.diagnostics.failed_rows == 0;
    (
        nodes_ok && slope_rel < C4_SLOPE_REL && monotone,
        format!(
            "w>0 at nodes: {nodes_ok}; tail slope {slope:.6e} vs -{rate:.6e} (rel {slope_rel:.1e}); a(omega, eta) monotone over {} points: {monotone}",
            table.rows.len()
        ),
    )
}

fn c5_low_efficiency() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for omega in [2.0, 5.0] {
        let p = AtomParams::new(omega, 0.0, 1.0, 1e-3).unwrap();
        let limit = fisher_low_eta(&p, Theta::Omega).unwrap();
        match fisher_per_photon(&p, Theta::Omega, None) {
            Ok(f) => {
                let rel = (f.f_per_photon / limit - 1.0).abs();
                ok &= rel < C5_REL;
                notes.push(format!("omega={omega}: F={:.5e} vs limit {limit:.5e} (rel {rel:.3})", f.f_per_photon));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("omega={omega}: {e}"));
            }
        }
    }
    (ok, notes.join("; "))
}

fn c6_bayes() -> Outcome {
    let truth = resonant(5.0);
    let cands = [2.5, 5.0, 7.5];
    let twenty = simulate_batch(&truth, StopCondition::Clicks(20), 6, 100).unwrap();
    let p_true: Vec<f64> = twenty
        .par_iter()
        .map(|r| {
            let mut g = init_uniform(&truth, Theta::Omega, &cands).unwrap();
            let snaps = filter_record(&mut g, r, 1e-3, 0).unwrap();
            snaps.iter().find(|s| s.clicks == 20).expect("twentieth click").posterior[1]
        })
        .collect();
    let med = median(&p_true);

    let records = simulate_batch(&truth, StopCondition::Duration(40.0), 60, 100).unwrap();
    let dts = [1e-2, 5e-3, 2.5e-3];
    let tables = CandidateTables::build(&truth, Theta::Omega, &cands).unwrap();
    let per_record: Vec<Vec<f64>> = records
        .par_iter()
        .map(|r| {
            let mut t = tables.clone();
            let lw = loglik_record(r, &mut t, WaitingTimeLikelihood::default()).unwrap().log_likelihoods();
            dts.iter()
                .map(|&dt| {
                    let mut g = init_uniform(&truth, Theta::Omega, &cands).unwrap();
                    filter_record(&mut g, r, dt, 0).unwrap();
                    let ld = g.log_likelihoods();
                    let d: Vec<f64> = (0..3).map(|i| ld[i] - lw[i]).collect();
                    (0..3).map(|i| (d[i] - d[1]).abs()).fold(0.0, f64::max)
                })
                .collect()
        })
        .collect();
    let medians: Vec<f64> = (0..dts.len()).map(|k| median(&per_record.iter().map(|v| v[k]).collect::<Vec<_>>())).collect();
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[0] / w[1]).collect();
    let linear = ratios.iter().all(|r| (C6_RATIO.0..=C6_RATIO.1).contains(r));
    (
        med > C6_MEDIAN && linear,
        format!(
            "median P(omega0) after 20 clicks = {med:.4}; median theta-dependent discrepancy {} (halving ratios {})",
            medians.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(", "),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c7_crb() -> Outcome {
    let truth = resonant(5.0);
    let records = simulate_batch(&truth, StopCondition::Clicks(10_000), 0, 200).unwrap();
    let schedule = Schedule::parse("100:10000:log").unwrap();
    let finals: Vec<Result<f64, String>> = records
        .par_iter()
        .map(|r| {
            let start = initial_estimate(r, Theta::Omega, 100, 2.5, 7.5, 201).map_err(|e| e.to_string())?;
            let trace = estimate_trace(r, Theta::Omega, start, &schedule).map_err(|e| e.to_string())?;
            Ok(trace.last().expect("non-empty trace").theta_hat)
        })
        .collect();
    let failures = finals.iter().filter(|f| f.is_err()).count();
    let values: Vec<f64> = finals.into_iter().filter_map(Result::ok).collect();
    let sd = std_dev(&values);
    let bias = mean(&values) - 5.0;
    let crb = 1.0 / (1e4 * 8.16f64).sqrt();
    let ok = failures == 0 && (C7_SD.0..=C7_SD.1).contains(&sd) && bias.abs() < C7_BIAS_SIGMAS * crb;
    (
        ok,
        format!(
            "sd {sd:.4e} (band [{:.2e}, {:.2e}], variance ratio {:.3}); bias {bias:.2e} = {:.2} sigma; {failures} traces failed",
            C7_SD.0,
            C7_SD.1,
            sd * sd / (crb * crb),
            bias / crb
        ),
    )
}

fn c8_detuning() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for omega in [2.0, 5.0, 8.0] {
        let deltas: Vec<f64> = (0..=60).map(|k| k as f64 * 3.0 * omega / 60.0).collect();
        let values: Vec<(f64, f64)> = deltas
            .par_iter()
            .map(|&d| {
                let f = |d: f64| {
                    fisher_per_photon(&AtomParams::new(omega, d, 1.0, 1.0).unwrap(), Theta::Delta, None)
                        .map(|r| r.f_per_photon)
                        .unwrap_or(f64::NAN)
                };
                (f(d), f(-d))
            })
            .collect();
        let even = values.iter().all(|(a, b)| (a - b).abs() <= C8_EVEN_REL * a.abs().max(b.abs()) || a == b);
        let (k, fmax) = values.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v.0 > acc.1 { (k, v.0) } else { acc });
        let star = deltas[k];
        let dip = values[0].0 < fmax;
        let placed = (0.5 * omega..=2.0 * omega).contains(&star);
        ok &= even && dip && placed;
        notes.push(format!("omega={omega}: even={even}, F(0)={:.2e}, delta*={star:.2} (F={fmax:.4})", values[0].0));
    }
    (ok, notes.join("; "))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_photocount"))
        .args(args)
        .current_dir(dir)
        .env_remove("PHOTOCOUNT_OUTPUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn c9_determinism() -> Outcome {
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--omega", "5", "--duration", "40", "--seed", "1", "-o", "fig1.csv"],
        vec!["simulate", "--omega", "5", "--clicks", "2000", "--seed", "4", "-o", "long.json"],
        vec!["simulate", "--omega", "5", "--eta", "0.4", "--clicks", "200", "--seed", "2", "-o", "thin.csv"],
        vec!["wtd", "--omega", "5", "--eta", "1,0.7,0.4,0.1", "-o", "wtd.csv"],
        vec!["wtd", "--omega", "3", "--delta", "2", "--format", "json", "-o", "wtd.json"],
        vec!["fisher", "--theta", "omega", "--omega", "2,5", "--eta", "0.5,1", "-o", "fisher.csv"],
        vec!["fisher", "--theta", "delta", "--omega", "2", "--delta-range", "-4:4:9", "-o", "fisher_delta.json"],
        vec!["bayes", "--record", "fig1.csv", "-o", "bayes.csv"],
        vec!["bayes", "--record", "fig1.csv", "--mode", "stepped", "--candidate-range", "2:8:25", "--layout", "long", "-o", "bayes_long.csv"],
        vec!["estimate", "--record", "long.json", "--schedule", "100:2000:log", "--gain-output", "gain.csv", "-o", "estimate.csv"],
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        for args in &commands {
            if let Err(e) = run_cli(args, dir.path()) {
                return (false, e);
            }
        }
    }
    let mut names: Vec<String> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(dirs[0].path().join(n)).ok() != std::fs::read(dirs[1].path().join(n)).ok())
        .collect();
    (differing.is_empty(), format!("{} artifacts from {} invocations, differing: {differing:?}", names.len(), commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("C1 analytic Fisher recovery", c1_fisher_closed_form),
        ("C2 waiting-time closed form", c2_wtd_closed_form),
        ("C3 simulated waiting times pass KS", c3_ks),
        ("C4 finite-efficiency structure", c4_finite_efficiency),
        ("C5 low-efficiency limit", c5_low_efficiency),
        ("C6 Bayesian convergence", c6_bayes),
        ("C7 CRB attainment", c7_crb),
        ("C8 detuning Fisher properties", c8_detuning),
        ("C9 CLI determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!("[{}] {name} ({:.1}s): {detail}", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
