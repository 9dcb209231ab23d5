//! CSV traces plus a JSON sidecar.
//!
//! Floats are printed with Rust's shortest round-trip representation, so
//! parsing a written file gives back the exact values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::runner::{ExperimentResult, PolicyFailure, RunMetadata};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "policy,t,mean_regret,std_regret,optimal_action_freq";

fn quote(label: &str) -> String {
    if label.contains([',', '"', '\n']) {
        format!("\"{}\"", label.replace('"', "\"\""))
    } else {
        label.to_string()
    }
}

/// CSV body: one row per policy and logged slot.
pub fn csv_string(result: &ExperimentResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for tr in &result.traces {
        let name = quote(&tr.label);
        for i in 0..tr.t.len() {
            let _ = writeln!(
                out,
                "{name},{},{:?},{:?},{:?}",
                tr.t[i], tr.mean_regret[i], tr.std_regret[i], tr.optimal_action_freq[i]
            );
        }
    }
    out
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub policy: String,
    pub t: u64,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub optimal_action_freq: f64,
}

fn split_row(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("csv: unexpected header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| Error::Config(format!("csv line {}: bad {what}", i + 2));
            let f = split_row(line);
            if f.len() != 5 {
                return Err(bad("field count"));
            }
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
            Ok(CsvRow {
                policy: f[0].clone(),
                t: f[1].parse().map_err(|_| bad("t"))?,
                mean_regret: num(&f[2], "mean_regret")?,
                std_regret: num(&f[3], "std_regret")?,
                optimal_action_freq: num(&f[4], "optimal_action_freq")?,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct PolicySummary<'a> {
    label: &'a str,
    spec: &'a crate::policies::PolicySpec,
    final_mean_regret: f64,
    final_std_regret: f64,
    final_optimal_freq: f64,
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    metadata: &'a RunMetadata,
    created_unix: u64,
    policies: Vec<PolicySummary<'a>>,
    failures: &'a [PolicyFailure],
}

pub fn sidecar_json(result: &ExperimentResult) -> Result<String> {
    let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let sidecar = Sidecar {
        metadata: &result.metadata,
        created_unix,
        policies: result
            .traces
            .iter()
            .map(|t| PolicySummary {
                label: &t.label,
                spec: &t.spec,
                final_mean_regret: t.final_mean_regret(),
                final_std_regret: t.final_std_regret(),
                final_optimal_freq: t.final_optimal_freq,
            })
            .collect(),
        failures: &result.failures,
    };
    Ok(serde_json::to_string_pretty(&sidecar)?)
}

/// Path of the sidecar that accompanies `csv_path`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV at `path` and the sidecar next to it; returns the sidecar
/// path.
pub fn serialize_results(result: &ExperimentResult, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, csv_string(result))?;
    let side = sidecar_path(path);
    std::fs::write(&side, sidecar_json(result)?)?;
    Ok(side)
}
