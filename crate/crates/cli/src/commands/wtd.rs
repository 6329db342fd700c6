use anyhow::Result;
use photocount::waiting_time::{choose_grid_with, wtd_numeric_with, GridOptions, TauGrid, DEFAULT_TRUNCATION};
use photocount::AtomParams;

use super::config_json;
use crate::args::{GlobalArgs, WtdArgs};
use crate::output::{csv_header, json_document, write_json, Format, Sink};
use crate::settings::Settings;

pub fn run(args: WtdArgs, global: GlobalArgs) -> Result<()> {
    let mut s = Settings::load(global.config.as_deref())?;
    let omega = s.value("omega", args.omega, 5.0)?;
    let delta = s.value("delta", args.delta, 0.0)?;
    let gamma = s.value("gamma", args.gamma, 1.0)?;
    let etas = s.list("eta", args.eta, vec![1.0])?;
    let mass_target = s.value("mass_target", args.mass_target, 1.0 - DEFAULT_TRUNCATION)?;
    let dt = s.optional::<f64>("dt", args.dt)?;
    let dtau = s.optional::<f64>("dtau", args.dtau)?;
    let tau_max = s.optional::<f64>("tau_max", args.tau_max)?;
    let sink = Sink::resolve(&mut s, global.output, global.format, "wtd")?;
    s.finish()?;
    let config = config_json("wtd", &s);

    let opts = GridOptions { mass_target, dt, ..GridOptions::default() };
    for &eta in &etas {
        let params = AtomParams::new(omega, delta, gamma, eta)?;
        let grid = match (dtau, tau_max) {
            (Some(step), Some(end)) => TauGrid::covering(step, end)?,
            _ => {
                let auto = choose_grid_with(&params, &opts)?;
                TauGrid::covering(dtau.unwrap_or(auto.dtau), tau_max.unwrap_or(auto.tau_max()))?
            }
        };
        let table = wtd_numeric_with(&params, &grid, dt.unwrap_or_else(|| params.default_dt()))?;
        let target = if etas.len() > 1 { sink.with_suffix(&format!("eta{eta}")) } else { sink.clone() };
        target.write(|out| match target.format {
            Format::Csv => {
                csv_header(out, &config)?;
                table.write_csv(out)
            }
            Format::Json => write_json(out, &json_document(&config, "table", table.to_json())),
        })?;
        eprintln!(
            "eta = {eta}: {} nodes, dtau = {:.3e}, mass = {:.12}, beyond grid = {:.3e} -> {}",
            grid.len,
            grid.dtau,
            table.mass,
            table.truncation,
            target.describe()
        );
    }
    Ok(())
}
