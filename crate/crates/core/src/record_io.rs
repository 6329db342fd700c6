//! Serialization of click records.
//!
//! CSV layout: `#`-prefixed `key: value` metadata lines, a `t` header, then
//! one timestamp per line written with 17 significant digits. The JSON form
//! is the serde envelope of [`ClickRecord`]. Both round-trip bit-exactly.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::AtomParams;
use crate::trajectory::ClickRecord;

/// Format with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(record: &ClickRecord, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# photocount click record")?;
    writeln!(out, "# params: {}", serde_json::to_string(&record.params).expect("params serialize"))?;
    writeln!(out, "# seed: {}", record.seed)?;
    writeln!(out, "# stream: {}", record.stream)?;
    if let Some(s) = record.thinning_seed {
        writeln!(out, "# thinning_seed: {s}")?;
    }
    writeln!(out, "# duration: {}", fmt_f64(record.duration))?;
    writeln!(out, "t")?;
    for t in &record.times {
        writeln!(out, "{}", fmt_f64(*t))?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<ClickRecord> {
    let mut params: Option<AtomParams> = None;
    let mut seed = None;
    let mut stream = 0;
    let mut thinning_seed = None;
    let mut duration = None;
    let mut times = Vec::new();
    let bad = |msg: String| Error::Format(msg);
    for line in input.lines() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line == "t" {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once(':') else { continue };
            let value = value.trim();
            match key.trim() {
                "params" => params = Some(serde_json::from_str(value).map_err(|e| bad(e.to_string()))?),
                "seed" => seed = Some(value.parse().map_err(|_| bad(format!("bad seed {value}")))?),
                "stream" => stream = value.parse().map_err(|_| bad(format!("bad stream {value}")))?,
                "thinning_seed" => {
                    thinning_seed = Some(value.parse().map_err(|_| bad(format!("bad thinning seed {value}")))?)
                }
                "duration" => duration = Some(value.parse().map_err(|_| bad(format!("bad duration {value}")))?),
                _ => {}
            }
            continue;
        }
        times.push(line.parse::<f64>().map_err(|_| bad(format!("bad timestamp '{line}'")))?);
    }
    let params = params.ok_or_else(|| bad("missing params".into()))?;
    let duration = duration.ok_or_else(|| bad("missing duration".into()))?;
    let record = ClickRecord { params, seed: seed.unwrap_or(0), stream, thinning_seed, duration, times };
    record.validate()?;
    Ok(record)
}

pub fn to_json(record: &ClickRecord) -> String {
    serde_json::to_string_pretty(record).expect("record serialize")
}

pub fn from_json(s: &str) -> Result<ClickRecord> {
    let record: ClickRecord = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
    record.validate()?;
    Ok(record)
}

/// Load a record, choosing the format from the file extension (`.json` or CSV).
pub fn load(path: &Path) -> Result<ClickRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        from_json(&text)
    } else {
        read_csv(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{simulate_record, thin_record, StopCondition};
    use proptest::prelude::*;

    #[test]
    fn simulated_record_round_trips() {
        let p = AtomParams::new(3.0, 2.0, 1.0, 1.0).unwrap();
        let rec = simulate_record(&p, StopCondition::Clicks(51), 5).unwrap();
        let rec = thin_record(&rec, 0.7, 2).unwrap();
        let mut buf = Vec::new();
        write_csv(&rec, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rec);
        assert_eq!(from_json(&to_json(&rec)).unwrap(), rec);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_csv("t\n1.0\n".as_bytes()).is_err());
        let text = "# params: {\"omega\":1.0,\"delta\":0.0,\"gamma\":1.0,\"eta\":1.0}\n# duration: 2\nt\n1.5\n0.5\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_times_round_trip_bit_exactly(
            mut gaps in prop::collection::vec(1e-12f64..1e3, 0..40),
            extra in 0.0f64..10.0,
            seed in any::<u64>(),
        ) {
            let mut t = 0.0;
            for g in gaps.iter_mut() {
                t += *g;
                *g = t;
            }
            let p = AtomParams::new(1.7, -0.3, 1.0, 1.0).unwrap();
            let rec = ClickRecord::new(p, seed, t + extra, gaps).unwrap();
            let mut buf = Vec::new();
            write_csv(&rec, &mut buf).unwrap();
            let back = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &rec);
            prop_assert_eq!(from_json(&to_json(&rec)).unwrap(), rec);
        }
    }
}
