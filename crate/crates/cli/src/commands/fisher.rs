use std::io::Write;

use anyhow::{bail, Result};
use photocount::fisher::{scan, FisherOptions, ScanRow, ScanSpec, ScanTable};
use photocount::record_io::fmt_f64;
use photocount::waiting_time::{GridOptions, DEFAULT_TRUNCATION};
use photocount::{AtomParams, Theta};
use serde_json::{json, Value};

use super::{config_json, parse_theta};
use crate::args::{FisherArgs, GlobalArgs};
use crate::output::{csv_header, json_document, write_json, Format, Sink};
use crate::settings::{parse_range, Settings};

pub const DEFAULT_RANGE_POINTS: usize = 81;

pub fn run(args: FisherArgs, global: GlobalArgs) -> Result<()> {
    let mut s = Settings::load(global.config.as_deref())?;
    let theta = parse_theta(&s.value("theta", args.theta, "omega".to_string())?)?;
    let omegas = s.list("omega", args.omega, vec![5.0])?;
    let deltas = match s.optional::<String>("delta_range", args.delta_range)? {
        Some(r) => parse_range(&r, DEFAULT_RANGE_POINTS)?,
        None => s.list("delta", args.delta, vec![0.0])?,
    };
    let etas = match s.optional::<String>("eta_range", args.eta_range)? {
        Some(r) => parse_range(&r, DEFAULT_RANGE_POINTS)?,
        None => s.list("eta", args.eta, vec![1.0])?,
    };
    let gamma = s.value("gamma", args.gamma, 1.0)?;
    let h = s.optional::<f64>("h", args.h)?;
    let mass_target = s.value("mass_target", args.mass_target, 1.0 - DEFAULT_TRUNCATION)?;
    let dt = s.optional::<f64>("dt", args.dt)?;
    let sink = Sink::resolve(&mut s, global.output, global.format, "fisher")?;
    s.finish()?;
    if omegas.is_empty() || deltas.is_empty() || etas.is_empty() {
        bail!("omega, delta and eta grids must be non-empty");
    }

    let spec = ScanSpec {
        base: AtomParams::new(omegas[0], deltas[0], gamma, etas[0])?,
        theta,
        omegas,
        deltas,
        etas,
        options: FisherOptions { h, grid: GridOptions { mass_target, dt, ..GridOptions::default() }, ..Default::default() },
    };
    let table = scan(&spec);
    let config = config_json("fisher", &s);
    sink.write(|out| match sink.format {
        Format::Csv => {
            csv_header(out, &config)?;
            write_csv(out, theta, &table)
        }
        Format::Json => write_json(out, &json_document(&config, "scan", to_json(&table))),
    })?;

    let d = &table.diagnostics;
    for (o, dl, lo, hi) in &d.eta_monotonicity_violations {
        eprintln!("warning: a increases from eta = {lo} to eta = {hi} at omega = {o}, delta = {dl}");
    }
    if let Some(a) = d.max_detuning_asymmetry {
        eprintln!("largest relative asymmetry F(delta) vs F(-delta): {a:.3e}");
    }
    eprintln!("{} points -> {}", table.rows.len(), sink.describe());
    if d.failed_rows > 0 {
        for row in table.rows.iter().filter(|r| r.result.is_err()) {
            if let Err(e) = &row.result {
                eprintln!("failed at omega = {}, delta = {}, eta = {}: {e}", row.omega, row.delta, row.eta);
            }
        }
        return Err(table.rows.iter().find_map(|r| r.result.clone().err()).expect("a failed row").into());
    }
    Ok(())
}

fn leading(theta: Theta, row: &ScanRow) -> [(&'static str, f64); 3] {
    let (f, a) = row.result.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.f_per_photon, r.a));
    match theta {
        Theta::Omega => [("omega", row.omega), ("eta", row.eta), ("a", a)],
        Theta::Delta => [("delta", row.delta), ("omega", row.omega), ("f_per_photon", f)],
    }
}

fn write_csv(out: &mut dyn Write, theta: Theta, table: &ScanTable) -> std::io::Result<()> {
    let rest = match theta {
        Theta::Omega => "f_per_photon,f_per_time,delta",
        Theta::Delta => "a,f_per_time,eta",
    };
    writeln!(out, "{},{rest},h,nodes,truncation,f_half_step,f_density_form,status", match theta {
        Theta::Omega => "omega,eta,a",
        Theta::Delta => "delta,omega,f_per_photon",
    })?;
    for row in &table.rows {
        let lead = leading(theta, row);
        let mut cells: Vec<String> = lead.iter().map(|(_, v)| fmt_f64(*v)).collect();
        match &row.result {
            Ok(r) => {
                let tail = match theta {
                    Theta::Omega => [r.f_per_photon, r.f_per_time, row.delta],
                    Theta::Delta => [r.a, r.f_per_time, row.eta],
                };
                cells.extend(tail.iter().map(|v| fmt_f64(*v)));
                let dg = &r.diagnostics;
                cells.push(fmt_f64(dg.h));
                cells.push(dg.grid_nodes.to_string());
                cells.extend([dg.truncation, dg.f_half_step, dg.f_density_form].iter().map(|v| fmt_f64(*v)));
                cells.push("ok".into());
            }
            Err(e) => {
                let tail = match theta {
                    Theta::Omega => [f64::NAN, f64::NAN, row.delta],
                    Theta::Delta => [f64::NAN, f64::NAN, row.eta],
                };
                cells.extend(tail.iter().map(|v| fmt_f64(*v)));
                cells.extend(["NaN", "0", "NaN", "NaN", "NaN"].map(String::from));
                cells.push(format!("\"{}\"", e.to_string().replace('"', "'")));
            }
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

fn to_json(table: &ScanTable) -> Value {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| match &r.result {
            Ok(f) => json!({"omega": r.omega, "delta": r.delta, "eta": r.eta, "result": f}),
            Err(e) => json!({"omega": r.omega, "delta": r.delta, "eta": r.eta, "error": e.to_string()}),
        })
        .collect();
    json!({"rows": rows, "diagnostics": table.diagnostics})
}
