use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use photocount::bayes::{filter_record, init_uniform, posterior, CandidateTables, PosteriorSnapshot};
use photocount::record_io::fmt_f64;
use photocount::trajectory::{waiting_times, ClickRecord};
use photocount::Theta;
use serde_json::json;

use super::{config_json, load_record, parse_theta};
use crate::args::{BayesArgs, GlobalArgs};
use crate::output::{csv_header, json_document, write_json, Format, Sink};
use crate::settings::{parse_range, Settings};

pub fn run(args: BayesArgs, global: GlobalArgs) -> Result<()> {
    let mut s = Settings::load(global.config.as_deref())?;
    let path = s
        .optional::<PathBuf>("record", args.record)?
        .ok_or_else(|| anyhow!("bayes needs --record FILE"))?;
    let theta = parse_theta(&s.value("theta", args.theta, "omega".to_string())?)?;
    let range = s.optional::<String>("candidate_range", args.candidate_range)?;
    let listed = s.list("candidates", args.candidates, vec![])?;
    let mode = s.value("mode", args.mode, "waiting-time".to_string())?;
    let dt = s.value("dt", args.dt, 1e-2)?;
    let snapshot_every = s.value("snapshot_every", args.snapshot_every, 0usize)?;
    let layout = s.value("layout", args.layout, "wide".to_string())?;
    let censor = s.value("censor", args.censor, true)?;
    let sink = Sink::resolve(&mut s, global.output, global.format, "posterior")?;
    s.finish()?;

    let record = load_record(&path)?;
    let candidates = match range {
        Some(r) => parse_range(&r, 101)?,
        None if !listed.is_empty() => listed,
        None => {
            let v = record.params.theta(theta);
            vec![0.5 * v, v, 1.5 * v]
        }
    };
    let wide = match layout.as_str() {
        "wide" => true,
        "long" => false,
        other => bail!("unknown layout '{other}', expected wide or long"),
    };
    let snapshots = match mode.as_str() {
        "waiting-time" => waiting_time_trace(&record, theta, &candidates, censor)?,
        "stepped" => {
            let mut grid = init_uniform(&record.params, theta, &candidates)?;
            filter_record(&mut grid, &record, dt, snapshot_every)?
        }
        other => bail!("unknown mode '{other}', expected waiting-time or stepped"),
    };

    let config = config_json("bayes", &s);
    sink.write(|out| match sink.format {
        Format::Csv => {
            csv_header(out, &config)?;
            if wide {
                write_wide(out, theta, &candidates, &snapshots)
            } else {
                write_long(out, theta, &candidates, &snapshots)
            }
        }
        Format::Json => write_json(
            out,
            &json_document(&config, "posterior", json!({"theta": theta, "candidates": candidates, "snapshots": snapshots})),
        ),
    })?;
    if let Some(last) = snapshots.last() {
        let best = photocount::bayes::argmax(&last.posterior);
        eprintln!(
            "{} clicks, most probable {} = {} with posterior {:.6} -> {}",
            last.clicks,
            theta,
            candidates[best],
            last.posterior[best],
            sink.describe()
        );
    }
    Ok(())
}

/// Posterior at `t = 0`, after each click and at the end of the record.
fn waiting_time_trace(record: &ClickRecord, theta: Theta, candidates: &[f64], censor: bool) -> Result<Vec<PosteriorSnapshot>> {
    let mut tables = CandidateTables::build(&record.params, theta, candidates)?;
    let taus = waiting_times(record).taus;
    let trailing = record.trailing_interval();
    tables.ensure_covers(taus.iter().copied().fold(trailing, f64::max))?;
    let prior = (1.0 / candidates.len() as f64).ln();
    let mut log_w = vec![prior; candidates.len()];
    let mut out = vec![PosteriorSnapshot { t: 0.0, clicks: 0, posterior: posterior(&log_w) }];
    for (i, (&tau, &t)) in taus.iter().zip(&record.times).enumerate() {
        for (w, table) in log_w.iter_mut().zip(&tables.tables) {
            *w += table.density_at(tau).expect("table covers tau").ln();
        }
        out.push(PosteriorSnapshot { t, clicks: i + 1, posterior: posterior(&log_w) });
    }
    if censor && trailing > 0.0 {
        for (w, table) in log_w.iter_mut().zip(&tables.tables) {
            *w += table.survival_at(trailing).expect("table covers trailing interval").ln();
        }
        out.push(PosteriorSnapshot { t: record.duration, clicks: taus.len(), posterior: posterior(&log_w) });
    }
    Ok(out)
}

fn write_wide(out: &mut dyn Write, theta: Theta, candidates: &[f64], snaps: &[PosteriorSnapshot]) -> std::io::Result<()> {
    let names: Vec<String> = candidates.iter().map(|c| format!("P({theta}={c})")).collect();
    writeln!(out, "t,clicks,{}", names.join(","))?;
    for s in snaps {
        let ps: Vec<String> = s.posterior.iter().map(|p| fmt_f64(*p)).collect();
        writeln!(out, "{},{},{}", fmt_f64(s.t), s.clicks, ps.join(","))?;
    }
    Ok(())
}

fn write_long(out: &mut dyn Write, theta: Theta, candidates: &[f64], snaps: &[PosteriorSnapshot]) -> std::io::Result<()> {
    writeln!(out, "t,clicks,{theta},posterior")?;
    for s in snaps {
        for (c, p) in candidates.iter().zip(&s.posterior) {
            writeln!(out, "{},{},{},{}", fmt_f64(s.t), s.clicks, fmt_f64(*c), fmt_f64(*p))?;
        }
    }
    Ok(())
}
