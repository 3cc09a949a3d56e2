use crate::{Cli, Format, OUTPUT_DIR_ENV};
use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use std::io::Write;
use std::path::{Path, PathBuf};

/// The fully resolved configuration embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub parameters: Value,
    pub seed: u64,
    pub output_path: Option<String>,
    pub format: Format,
    pub version: String,
}

impl RunConfig {
    pub fn new(cli: &Cli) -> Result<Self> {
        let command = cli.command.name().to_string();
        // the subcommand serializes as {"name": {...}}
        let parameters = match serde_json::to_value(&cli.command)? {
            Value::Object(mut m) => m.remove(&command).unwrap_or(Value::Null),
            other => other,
        };
        let output_path = destination(cli).map(|p| p.display().to_string());
        Ok(RunConfig { command, parameters, seed: cli.seed, output_path, format: cli.format, version: env!("CARGO_PKG_VERSION").to_string() })
    }
}

/// Where the primary artifact goes: --output, else the directory in the
/// environment variable, else standard output.
pub fn destination(cli: &Cli) -> Option<PathBuf> {
    if let Some(p) = &cli.output {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUTPUT_DIR_ENV)?;
    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    Some(Path::new(&dir).join(format!("{}.{ext}", cli.command.name())))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a RunConfig,
    result: &'a T,
}

pub fn json_bytes<T: Serialize>(config: &RunConfig, result: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(&Envelope { config, result })?;
    buf.push(b'\n');
    Ok(buf)
}

/// CSV body preceded by a `# run:` line holding the configuration.
pub fn csv_bytes(config: &RunConfig, body: &[u8]) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(body.len() + 256);
    writeln!(buf, "# run: {}", serde_json::to_string(config)?)?;
    buf.extend_from_slice(body);
    Ok(buf)
}

pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
