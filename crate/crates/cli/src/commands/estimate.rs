use std::path::PathBuf;

use anyhow::{anyhow, Result};
use photocount::estimator::{estimate_trace, initial_estimate, GainFunction, Schedule};
use photocount::record_io::fmt_f64;
use photocount::trajectory::waiting_times;
use photocount::Error;
use serde_json::json;

use super::{config_json, load_record, parse_theta};
use crate::args::{EstimateArgs, GlobalArgs};
use crate::output::{csv_header, json_document, write_json, Format, Sink};
use crate::settings::{parse_range, Settings};

pub const DEFAULT_SCHEDULE: &str = "100:10000:log";
pub const DEFAULT_INITIAL_POINTS: usize = 201;

pub fn run(args: EstimateArgs, global: GlobalArgs) -> Result<()> {
    let mut s = Settings::load(global.config.as_deref())?;
    let path = s
        .optional::<PathBuf>("record", args.record)?
        .ok_or_else(|| anyhow!("estimate needs --record FILE"))?;
    let theta = parse_theta(&s.value("theta", args.theta, "omega".to_string())?)?;
    let theta0 = s.optional::<f64>("theta0", args.theta0)?;
    let initial_clicks = s.value("initial_clicks", args.initial_clicks, 100usize)?;
    let initial_range = s.optional::<String>("initial_range", args.initial_range)?;
    let schedule = Schedule::parse(&s.value("schedule", args.schedule, DEFAULT_SCHEDULE.to_string())?)?;
    let gain_output = s.unrecorded::<PathBuf>("gain_output", args.gain_output)?;
    let sink = Sink::resolve(&mut s, global.output, global.format, "estimate")?;
    s.finish()?;

    let record = load_record(&path)?;
    let start = match theta0 {
        Some(v) => v,
        None => {
            let candidates = match &initial_range {
                Some(r) => parse_range(r, DEFAULT_INITIAL_POINTS)?,
                None => {
                    let v = record.params.theta(theta);
                    let half = 0.5 * v.abs().max(record.params.gamma);
                    parse_range(&format!("{}:{}", v - half, v + half), DEFAULT_INITIAL_POINTS)?
                }
            };
            let lo = candidates[0];
            let hi = *candidates.last().expect("non-empty range");
            initial_estimate(&record, theta, initial_clicks, lo, hi, candidates.len())?
        }
    };
    let rows = match estimate_trace(&record, theta, start, &schedule) {
        Ok(rows) => rows,
        Err(e @ Error::TrustRegion { .. }) => {
            eprintln!("warning: correction too large for the linear regime; supply a closer --theta0");
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };

    let config = config_json("estimate", &s);
    sink.write(|out| match sink.format {
        Format::Csv => {
            csv_header(out, &config)?;
            writeln!(out, "n,theta_hat,sigma_crb,delta_theta")?;
            for r in &rows {
                writeln!(out, "{},{},{},{}", r.n, fmt_f64(r.theta_hat), fmt_f64(r.sigma_crb), fmt_f64(r.delta_theta))?;
            }
            Ok(())
        }
        Format::Json => write_json(out, &json_document(&config, "trace", json!({"theta0": start, "rows": rows}))),
    })?;

    let last = rows.last().expect("non-empty trace");
    if let Some(p) = gain_output {
        let params = record.params.with_theta(theta, last.theta_hat)?;
        let gain = GainFunction::at(&params, theta, last.n as f64)?;
        let gain_sink = Sink { format: sink.format, path: Some(p) };
        gain_sink.write(|out| match gain_sink.format {
            Format::Csv => {
                csv_header(out, &config)?;
                writeln!(out, "# offset: {}", fmt_f64(gain.c))?;
                writeln!(out, "tau,g")?;
                for (tau, g) in gain.taus().iter().zip(&gain.g) {
                    writeln!(out, "{},{}", fmt_f64(*tau), fmt_f64(*g))?;
                }
                Ok(())
            }
            Format::Json => write_json(out, &json_document(&config, "gain", serde_json::to_value(&gain)?)),
        })?;
    }
    let used = waiting_times(&record).taus.len().min(last.n);
    eprintln!(
        "{theta} = {} +/- {} from {used} waiting times (start {start}) -> {}",
        last.theta_hat,
        last.sigma_crb,
        sink.describe()
    );
    Ok(())
}
