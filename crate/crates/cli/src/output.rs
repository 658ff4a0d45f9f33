//! CSV and JSON emission with a provenance line on every table.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Where a table goes.  `--out csv` / `--out json` redirect the format to
/// stdout; any other value is a file path.
#[derive(Debug, Clone)]
pub struct Sink {
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    pub fn new(out: Option<&str>, format: Option<Format>) -> Self {
        match out {
            Some("csv") => Sink { path: None, format: Format::Csv },
            Some("json") => Sink { path: None, format: Format::Json },
            Some(path) => {
                let fallback = if path.ends_with(".json") { Format::Json } else { Format::Csv };
                Sink { path: Some(PathBuf::from(path)), format: format.unwrap_or(fallback) }
            }
            None => Sink { path: None, format: format.unwrap_or(Format::Csv) },
        }
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => {
                Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)
            }
            None => Box::new(io::stdout().lock()),
        })
    }
}

/// Provenance recorded on every table: tool version, model spec hash, and
/// the tolerance that produced the numbers ("exact" when none applies).
pub struct Provenance {
    pub model_hash: String,
    pub tolerance: String,
}

impl Provenance {
    pub fn new(model_hash: String, tolerance: Option<f64>) -> Self {
        let tolerance = match tolerance {
            Some(t) => format!("{t:e}"),
            None => "exact".to_string(),
        };
        Provenance { model_hash, tolerance }
    }

    fn comment(&self) -> String {
        format!(
            "# qladder {} model sha256:{} tol {}",
            env!("CARGO_PKG_VERSION"),
            self.model_hash,
            self.tolerance
        )
    }
}

/// One tabular artifact; rows are already rendered to strings so CSV output
/// is bit-identical across runs.
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

pub fn emit(sink: &Sink, provenance: &Provenance, table: &Table) -> Result<()> {
    let mut w = sink.writer()?;
    match sink.format {
        Format::Csv => {
            writeln!(w, "{}", provenance.comment())?;
            writeln!(w, "{}", table.columns.join(","))?;
            for row in &table.rows {
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = table
                .rows
                .iter()
                .map(|row| {
                    table
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| ((*c).to_string(), cell_to_json(v)))
                        .collect::<serde_json::Map<_, _>>()
                        .into()
                })
                .collect();
            let doc = serde_json::json!({
                "tool": format!("qladder {}", env!("CARGO_PKG_VERSION")),
                "model": format!("sha256:{}", provenance.model_hash),
                "tol": provenance.tolerance,
                "rows": rows,
            });
            writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}

/// Numeric cells become JSON numbers when they round-trip exactly; exact
/// rationals and everything else stay strings.
fn cell_to_json(v: &str) -> serde_json::Value {
    if let Ok(i) = v.parse::<i64>() {
        return i.into();
    }
    if let Ok(f) = v.parse::<f64>() {
        if format!("{f}") == v || format!("{f:e}") == v {
            return f.into();
        }
    }
    v.to_string().into()
}
