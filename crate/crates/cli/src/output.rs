use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::config::Context;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Rendered output of a command in both formats.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: String,
    pub csv: String,
    pub default_format: Format,
    pub pass: bool,
}

impl Report {
    pub fn new<J: Serialize, R: Serialize>(
        json: &J,
        rows: &[R],
        default_format: Format,
        pass: bool,
    ) -> Result<Self, CliError> {
        let mut text = serde_json::to_string_pretty(json)?;
        text.push('\n');
        Ok(Self {
            json: text,
            csv: csv_text(rows)?,
            default_format,
            pass,
        })
    }

    pub fn render(&self, format: Format) -> &str {
        match format {
            Format::Json => &self.json,
            Format::Csv => &self.csv,
        }
    }
}

/// Flat rows as CSV with a header taken from the field names.
pub fn csv_text<R: Serialize>(rows: &[R]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Encode(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Encode(e.to_string()))
}

pub fn emit(report: &Report, ctx: &Context) -> Result<(), CliError> {
    let text = report.render(ctx.format.unwrap_or(report.default_format));
    match &ctx.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Output {
                    path: "stdout".into(),
                    source,
                })
        }
    }
}

/// Writes to a temporary file next to `path` and renames it into place, so
/// `path` either keeps its old contents or holds the complete output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let err = |source| CliError::Output {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
