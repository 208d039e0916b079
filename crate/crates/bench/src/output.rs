//! CSV and JSON result files.
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64`. Missing values are empty CSV fields and JSON `null`s.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::value::RawValue;
use serde_json::Value;

use crate::config::OutputFormat;
use crate::experiment::{Row, RunResult};

pub const CSV_FILE: &str = "results.csv";
pub const JSON_FILE: &str = "results.json";
pub const METADATA_FILE: &str = "metadata.json";

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_number(x: Option<f64>) -> Result<Box<RawValue>> {
    let text = match x {
        Some(v) if v.is_finite() => format_number(v),
        _ => "null".to_string(),
    };
    Ok(RawValue::from_string(text)?)
}

fn columns(result: &RunResult) -> Vec<&'static str> {
    let mut c = vec!["step", "estimator", "mse", "cost_s", "efficiency"];
    if result.multi_target() {
        c.extend(["ospa_mean", "ospa_sd", "count_mean", "count_sd"]);
    }
    c
}

fn numeric(row: &Row, column: &str) -> Option<f64> {
    match column {
        "mse" => row.mse,
        "cost_s" => row.cost_s,
        "efficiency" => row.efficiency,
        "ospa_mean" => row.ospa_mean,
        "ospa_sd" => row.ospa_sd,
        "count_mean" => row.count_mean,
        "count_sd" => row.count_sd,
        _ => None,
    }
}

pub fn to_csv(result: &RunResult) -> Result<String> {
    let cols = columns(result);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&cols)?;
    for row in &result.rows {
        let rec: Vec<String> = cols
            .iter()
            .map(|c| match *c {
                "step" => row.step.to_string(),
                "estimator" => row.estimator.clone(),
                c => numeric(row, c).map(format_number).unwrap_or_default(),
            })
            .collect();
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn metadata_json(result: &RunResult) -> Result<Value> {
    Ok(serde_json::to_value(&result.metadata)?)
}

pub fn to_json(result: &RunResult) -> Result<String> {
    let cols = columns(result);
    let mut rows = Vec::with_capacity(result.rows.len());
    for row in &result.rows {
        let mut fields: Vec<(&str, Box<RawValue>)> = Vec::with_capacity(cols.len());
        for c in &cols {
            let v = match *c {
                "step" => RawValue::from_string(row.step.to_string())?,
                "estimator" => RawValue::from_string(serde_json::to_string(&row.estimator)?)?,
                c => json_number(numeric(row, c))?,
            };
            fields.push((c, v));
        }
        rows.push(JsonRow(fields));
    }
    let doc = JsonDoc {
        metadata: &result.metadata,
        columns: &cols,
        rows,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

#[derive(serde::Serialize)]
struct JsonDoc<'a> {
    metadata: &'a crate::experiment::Metadata,
    columns: &'a [&'static str],
    rows: Vec<JsonRow>,
}

/// Row object with its keys in column order.
struct JsonRow(Vec<(&'static str, Box<RawValue>)>);

impl serde::Serialize for JsonRow {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

/// Writes the result into `dir` and returns the paths written. CSV output
/// gets a `metadata.json` sidecar; JSON carries its metadata inline.
pub fn emit_results(result: &RunResult, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, body: String| -> Result<PathBuf> {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    };
    match format {
        OutputFormat::Csv => Ok(vec![
            write(CSV_FILE, to_csv(result)?)?,
            write(
                METADATA_FILE,
                serde_json::to_string_pretty(&metadata_json(result)?)? + "\n",
            )?,
        ]),
        OutputFormat::Json => Ok(vec![write(JSON_FILE, to_json(result)?)?]),
    }
}
