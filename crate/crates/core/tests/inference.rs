use photocount::bayes::{filter_record, grid_mle, init_uniform, linspace, loglik_record, CandidateTables, WaitingTimeLikelihood};
use photocount::estimator::{estimate_trace, linear_estimate, GainFunction, Schedule};
use photocount::stats::{mean, median, std_dev};
use photocount::trajectory::{simulate_batch, simulate_record, waiting_times, StopCondition};
use photocount::waiting_time::TauGrid;
use photocount::{AtomParams, Theta};
use rayon::prelude::*;

fn truth() -> AtomParams {
    AtomParams::resonant(5.0).unwrap()
}

#[test]
fn stepped_and_waiting_time_likelihoods_converge() {
    let cands = [2.5, 5.0, 7.5];
    let mut tables = CandidateTables::build(&truth(), Theta::Omega, &cands).unwrap();
    let records = simulate_batch(&truth(), StopCondition::Duration(40.0), 100, 40).unwrap();
    let dts = [1e-2, 5e-3, 2.5e-3];
    let mut discrepancy = vec![Vec::new(); dts.len()];
    for rec in &records {
        let lw = loglik_record(rec, &mut tables, WaitingTimeLikelihood::default()).unwrap().log_likelihoods();
        for (k, &dt) in dts.iter().enumerate() {
            let mut g = init_uniform(&truth(), Theta::Omega, &cands).unwrap();
            filter_record(&mut g, rec, dt, 0).unwrap();
            let ld = g.log_likelihoods();
            let d: Vec<f64> = (0..3).map(|i| ld[i] - lw[i]).collect();
            discrepancy[k].push((0..3).map(|i| (d[i] - d[1]).abs()).fold(0.0, f64::max));
        }
    }
    let m: Vec<f64> = discrepancy.iter().map(|v| median(v)).collect();
    for w in m.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.5..2.7).contains(&ratio), "medians {m:?}");
    }
}

#[test]
fn grid_mle_is_within_the_bound() {
    let records = simulate_batch(&truth(), StopCondition::Clicks(2_000), 3, 8).unwrap();
    let sigma = 1.0 / (2_000.0f64 * 8.16).sqrt();
    let cands = linspace(4.9, 5.1, 81);
    for rec in &records {
        let mle = grid_mle(rec, Theta::Omega, &cands).unwrap();
        assert!((mle - 5.0).abs() < 4.0 * sigma, "mle {mle}");
    }
}

#[test]
fn posterior_width_shrinks_as_inverse_root_n() {
    let rec = simulate_record(&truth(), StopCondition::Clicks(10_000), 17).unwrap();
    let cands = linspace(4.5, 5.5, 401);
    let mut tables = CandidateTables::build(&truth(), Theta::Omega, &cands).unwrap();
    let mut widths = Vec::new();
    for n in [100, 1_000, 10_000] {
        let part = rec.truncated(n);
        let g = loglik_record(&part, &mut tables, WaitingTimeLikelihood { censor_trailing: false }).unwrap();
        widths.push(g.posterior_moments().1 * (n as f64).sqrt());
    }
    let expected = 1.0 / 8.16f64.sqrt();
    for w in widths {
        assert!(w > expected / 2.0 && w < expected * 2.0, "scaled width {w}");
    }
}

#[test]
fn estimator_pulls_back_towards_the_truth() {
    let eps = 0.01;
    let off = truth().with_theta(Theta::Omega, 5.0 * (1.0 + eps)).unwrap();
    let gain = GainFunction::at(&off, Theta::Omega, 1e4).unwrap();
    let records = simulate_batch(&truth(), StopCondition::Clicks(10_000), 40, 200).unwrap();
    let steps: Vec<f64> = records
        .par_iter()
        .map(|r| linear_estimate(&gain.histogram(&waiting_times(r).taus).unwrap(), &gain).unwrap())
        .collect();
    let m = mean(&steps);
    assert!((m + eps * 5.0).abs() < 0.2 * eps * 5.0, "mean correction {m}");
}

#[test]
fn spread_follows_root_n() {
    let gain_small = GainFunction::at(&truth(), Theta::Omega, 2_500.0).unwrap();
    let gain_large = GainFunction::at(&truth(), Theta::Omega, 1e4).unwrap();
    let records = simulate_batch(&truth(), StopCondition::Clicks(10_000), 41, 200).unwrap();
    let (small, large): (Vec<f64>, Vec<f64>) = records
        .par_iter()
        .map(|r| {
            let taus = waiting_times(r).taus;
            (
                linear_estimate(&gain_small.histogram(&taus[..2_500]).unwrap(), &gain_small).unwrap(),
                linear_estimate(&gain_large.histogram(&taus).unwrap(), &gain_large).unwrap(),
            )
        })
        .unzip();
    let ratio = std_dev(&large) / std_dev(&small);
    assert!((ratio - 0.5).abs() < 0.125, "ratio {ratio}");
}

#[test]
fn halving_the_bins_barely_moves_the_estimate() {
    let rec = simulate_record(&truth(), StopCondition::Clicks(10_000), 5).unwrap();
    let taus = waiting_times(&rec).taus;
    let coarse = GainFunction::at(&truth(), Theta::Omega, 1e4).unwrap();
    let fine_grid = TauGrid::covering(coarse.dtau / 2.0, coarse.dtau * coarse.bins() as f64).unwrap();
    let fine = GainFunction::on_grid(&truth(), Theta::Omega, &fine_grid, 1e4).unwrap();
    let a = linear_estimate(&coarse.histogram(&taus).unwrap(), &coarse).unwrap();
    let b = linear_estimate(&fine.histogram(&taus).unwrap(), &fine).unwrap();
    assert!((a - b).abs() < 0.2 * coarse.sigma(1e4), "{a} vs {b}");
}

#[test]
fn single_entry_schedule_is_one_linear_step() {
    let rec = simulate_record(&truth(), StopCondition::Clicks(3_000), 6).unwrap();
    let trace = estimate_trace(&rec, Theta::Omega, 5.0, &Schedule(vec![3_000])).unwrap();
    let gain = GainFunction::at(&truth(), Theta::Omega, 3_000.0).unwrap();
    let step = linear_estimate(&gain.histogram(&waiting_times(&rec).taus).unwrap(), &gain).unwrap();
    assert_eq!(trace.len(), 1);
    assert_eq!(trace[0].theta_hat, 5.0 + step);
}

#[test]
fn trace_stays_near_the_truth() {
    let records = simulate_batch(&truth(), StopCondition::Clicks(10_000), 77, 20).unwrap();
    let sched = Schedule::parse("100:10000:log").unwrap();
    let inside = records
        .par_iter()
        .filter(|r| {
            let start = photocount::estimator::initial_estimate(r, Theta::Omega, 100, 2.5, 7.5, 201).unwrap();
            let trace = estimate_trace(r, Theta::Omega, start, &sched).unwrap();
            trace.iter().filter(|row| row.n >= 1_000).all(|row| (row.theta_hat - 5.0).abs() < 3.0 * row.sigma_crb)
        })
        .count();
    assert!(inside >= 17, "{inside} of 20 traces inside three sigma");
}
