use std::io::Write;

use anyhow::{Context, Result};
use iag_core::rational::{fmt_rational, to_f64};
use iag_core::Rational;
use serde::Serialize;

use crate::args::{Format, OutputArgs};

/// `19/20 (0.950000)`.
pub fn exact(r: &Rational) -> String {
    format!("{} ({:.6})", fmt_rational(r), to_f64(r))
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
}

pub fn emit(out: &OutputArgs, body: &str) -> Result<()> {
    match &out.output {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

/// Builds the body for the requested format; `csv` is `None` where CSV makes no sense.
pub fn pick(
    format: Format,
    text: impl FnOnce() -> String,
    json_body: impl FnOnce() -> Result<String>,
    csv_body: Option<&dyn Fn() -> Result<String>>,
) -> Result<String> {
    match format {
        Format::Text => Ok(text()),
        Format::Json => json_body(),
        Format::Csv => match csv_body {
            Some(f) => f(),
            None => anyhow::bail!("CSV output is not available for this command"),
        },
    }
}
