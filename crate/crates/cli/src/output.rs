use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::Value;

use crate::settings::Settings;

pub const OUTPUT_DIR_ENV: &str = "PHOTOCOUNT_OUTPUT_DIR";

pub fn tool_version() -> String {
    format!("photocount {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => bail!("unknown format '{other}', expected csv or json"),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// Where and how a subcommand writes its artifacts.
#[derive(Debug, Clone)]
pub struct Sink {
    pub format: Format,
    /// `None` writes to stdout.
    pub path: Option<PathBuf>,
}

impl Sink {
    /// Format from the flag or file, else from the output extension, else CSV.
    pub fn resolve(settings: &mut Settings, flag_output: Option<PathBuf>, flag_format: Option<String>, stem: &str) -> Result<Self> {
        let output = settings.unrecorded::<PathBuf>("output", flag_output)?;
        let from_extension = output
            .as_ref()
            .and_then(|p| p.extension())
            .and_then(|e| Format::parse(&e.to_string_lossy()).ok())
            .unwrap_or(Format::Csv);
        let default = from_extension.extension().to_string();
        let format = Format::parse(&settings.value("format", flag_format, default)?)?;
        let path = match output {
            Some(p) if p.as_os_str() == "-" => None,
            Some(p) => Some(p),
            None => {
                let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
                Some(dir.join(format!("{stem}.{}", format.extension())))
            }
        };
        Ok(Self { format, path })
    }

    /// Path with `_{suffix}` inserted before the extension.
    pub fn with_suffix(&self, suffix: &str) -> Self {
        let path = self.path.as_ref().map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let name = match p.extension() {
                Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
                None => format!("{stem}_{suffix}"),
            };
            p.with_file_name(name)
        });
        Self { format: self.format, path }
    }

    pub fn write<F>(&self, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> io::Result<()>,
    {
        match &self.path {
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                body(&mut lock).context("writing to stdout")?;
                lock.flush()?;
            }
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                }
                let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                let mut w = BufWriter::new(file);
                body(&mut w).with_context(|| format!("writing {}", p.display()))?;
                w.flush().with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        self.path.as_deref().map_or_else(|| "stdout".to_string(), |p: &Path| p.display().to_string())
    }
}

/// `# tool:` and `# config:` lines opening every CSV artifact.
pub fn csv_header(out: &mut dyn Write, config: &Value) -> io::Result<()> {
    writeln!(out, "# tool: {}", tool_version())?;
    writeln!(out, "# config: {}", serde_json::to_string(config).expect("config serializes"))
}

/// JSON artifact with the same provenance fields as the CSV header.
pub fn json_document(config: &Value, key: &str, payload: Value) -> Value {
    let mut doc = serde_json::Map::new();
    doc.insert("tool".into(), Value::String(tool_version()));
    doc.insert("config".into(), config.clone());
    doc.insert(key.into(), payload);
    Value::Object(doc)
}

pub fn write_json(out: &mut dyn Write, doc: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, doc)?;
    writeln!(out)
}
