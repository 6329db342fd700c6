use anyhow::{bail, Result};
use photocount::dynamics::steady_state_ee;
use photocount::record_io;
use photocount::trajectory::{simulate_record, thin_record, ClickRecord, StopCondition};
use photocount::AtomParams;

use super::config_json;
use crate::args::{GlobalArgs, SimulateArgs};
use crate::output::{csv_header, json_document, write_json, Format, Sink};
use crate::settings::Settings;

pub const DEFAULT_DURATION: f64 = 40.0;

pub fn run(args: SimulateArgs, global: GlobalArgs) -> Result<()> {
    let mut s = Settings::load(global.config.as_deref())?;
    let omega = s.value("omega", args.omega, 5.0)?;
    let delta = s.value("delta", args.delta, 0.0)?;
    let gamma = s.value("gamma", args.gamma, 1.0)?;
    let eta = s.value("eta", args.eta, 1.0)?;
    let clicks = s.optional::<usize>("clicks", args.clicks)?;
    let duration = s.optional::<f64>("duration", args.duration)?;
    let seed = s.value("seed", args.seed, 0u64)?;
    let thinning_seed = s.value("thinning_seed", args.thinning_seed, seed)?;
    let sink = Sink::resolve(&mut s, global.output, global.format, "record")?;
    s.finish()?;

    let stop = match (clicks, duration) {
        (Some(_), Some(_)) => bail!("give either a duration or a click count, not both"),
        (Some(n), None) => StopCondition::Clicks(n),
        (None, Some(t)) => StopCondition::Duration(t),
        (None, None) => StopCondition::Duration(DEFAULT_DURATION),
    };
    let params = AtomParams::new(omega, delta, gamma, eta)?;
    if omega == 0.0 {
        eprintln!("warning: omega = 0, the atom is never excited; writing an empty record");
    }
    let record = simulate(&params, stop, seed, thinning_seed)?;

    let config = config_json("simulate", &s);
    sink.write(|out| match sink.format {
        Format::Csv => {
            csv_header(out, &config)?;
            record_io::write_csv(&record, out)
        }
        Format::Json => write_json(out, &json_document(&config, "record", serde_json::to_value(&record)?)),
    })?;

    let expected = eta * gamma * steady_state_ee(&params);
    let rate = if record.duration > 0.0 { record.len() as f64 / record.duration } else { 0.0 };
    eprintln!(
        "{} clicks over T = {}, rate {:.6} (stationary {:.6}) -> {}",
        record.len(),
        record.duration,
        rate,
        expected,
        sink.describe()
    );
    Ok(())
}

/// Unit-efficiency record thinned to `params.eta`. For a click-count stop
/// below unit efficiency the raw record is lengthened until enough clicks
/// survive; the raw and thinning streams are consumed in order, so the
/// result does not depend on how many extensions were needed.
fn simulate(params: &AtomParams, stop: StopCondition, seed: u64, thinning_seed: u64) -> Result<ClickRecord> {
    let unit = params.with_eta(1.0)?;
    if params.eta == 1.0 {
        return Ok(simulate_record(&unit, stop, seed)?);
    }
    match stop {
        StopCondition::Duration(_) => Ok(thin_record(&simulate_record(&unit, stop, seed)?, params.eta, thinning_seed)?),
        StopCondition::Clicks(n) => {
            let mut raw_clicks = ((n as f64 / params.eta) * 1.2).ceil() as usize + 16;
            loop {
                let raw = simulate_record(&unit, StopCondition::Clicks(raw_clicks), seed)?;
                let thinned = thin_record(&raw, params.eta, thinning_seed)?;
                if thinned.len() >= n || raw.is_empty() {
                    let mut out = thinned.truncated(n);
                    out.duration = out.times.last().copied().unwrap_or(0.0);
                    return Ok(out);
                }
                raw_clicks *= 2;
            }
        }
    }
}
