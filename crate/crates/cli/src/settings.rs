//! Resolution of options from flags, a config file and defaults.
//!
//! The config file holds one `key = value` per line; `#` starts a comment,
//! keys are long flag names (`-` and `_` are interchangeable), and lists are
//! comma separated. Flags win over the file, the file wins over defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    used: Vec<String>,
    resolved: BTreeMap<String, Value>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`, got '{raw}'", n + 1))?;
        if map.insert(normalize(k), v.trim().to_string()).is_some() {
            bail!("config line {}: duplicate key '{}'", n + 1, k.trim());
        }
    }
    Ok(map)
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self { file, ..Self::default() })
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let key = normalize(key);
        self.used.push(key.clone());
        match self.file.get(&key) {
            Some(v) => v.parse().map(Some).map_err(|e| anyhow!("config key '{key}': {e}")),
            None => Ok(None),
        }
    }

    /// A flag overrides the file; the file key is still accounted for.
    fn consume<T>(&mut self, key: &str, flag: T) -> T {
        self.used.push(normalize(key));
        flag
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T) {
        self.resolved.insert(normalize(key), serde_json::to_value(value).expect("setting serializes"));
    }

    /// Flag, then file, then `default`.
    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => self.consume(key, v),
            None => self.from_file(key)?.unwrap_or(default),
        };
        self.record(key, &v);
        Ok(v)
    }

    /// As [`Settings::value`] but without a default.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(self.consume(key, v)),
            None => self.from_file(key)?,
        };
        if let Some(x) = &v {
            self.record(key, x);
        }
        Ok(v)
    }

    /// Comma list; an empty flag list defers to the file.
    pub fn list<T>(&mut self, key: &str, flag: Vec<T>, default: Vec<T>) -> Result<Vec<T>>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let v = if !flag.is_empty() {
            self.consume(key, flag)
        } else {
            match self.from_file::<String>(key)? {
                Some(s) => s
                    .split(',')
                    .map(|x| x.trim().parse::<T>().map_err(|e| anyhow!("config key '{key}': {e}")))
                    .collect::<Result<Vec<_>>>()?,
                None => default,
            }
        };
        self.record(key, &v);
        Ok(v)
    }

    /// Value that only affects where output goes; read but not recorded.
    pub fn unrecorded<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(self.consume(key, v))),
            None => self.from_file(key),
        }
    }

    /// Fails on config-file keys that no option consumed.
    pub fn finish(&self) -> Result<()> {
        if let Some(k) = self.file.keys().find(|k| !self.used.contains(k)) {
            bail!("unknown config key '{k}'");
        }
        Ok(())
    }

    /// Every resolved setting, for output headers.
    pub fn resolved(&self) -> Value {
        serde_json::to_value(&self.resolved).expect("settings serialize")
    }
}

/// `lo:hi` or `lo:hi:points`.
pub fn parse_range(s: &str, default_points: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| anyhow!("bad range '{s}'"));
    let (lo, hi, n) = match parts.as_slice() {
        [lo, hi] => (num(lo)?, num(hi)?, default_points),
        [lo, hi, n] => (num(lo)?, num(hi)?, n.parse().map_err(|_| anyhow!("bad range '{s}'"))?),
        _ => bail!("bad range '{s}', expected lo:hi or lo:hi:points"),
    };
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) || n == 0 {
        bail!("bad range '{s}'");
    }
    Ok(photocount::bayes::linspace(lo, hi, n))
}
