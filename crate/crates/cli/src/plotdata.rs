//! Two-column plot series from result JSON, one file per curve named
//! `<figure-id>_<phy>_<series>.dat`.

use std::collections::BTreeMap;
use std::fmt::Write;

use ctlab::experiments::biterr::BITERR_SCHEMA;
use ctlab::experiments::sweep::{BASELINE, SWEEP_SCHEMA};
use ctlab::experiments::{BiterrResult, SweepResult};
use ctlab::floodsim::{FloodResult, FLOOD_SCHEMA};

use crate::error::CliError;

/// `(file name, contents)` pairs in name order.
pub type PlotFiles = Vec<(String, String)>;

fn tag(x: Option<f64>) -> String {
    match x {
        None => "x".to_string(),
        Some(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        Some(v) => format!("{v}"),
    }
}

fn input_error(msg: impl Into<String>) -> CliError {
    CliError::config("input", msg)
}

pub fn emit(json: &str) -> Result<PlotFiles, CliError> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| input_error(format!("not JSON: {e}")))?;
    let schema = value.get("schema").and_then(|s| s.as_str()).unwrap_or("");
    let files = match schema {
        SWEEP_SCHEMA => sweep(serde_json::from_value(value).map_err(|e| input_error(e.to_string()))?)?,
        BITERR_SCHEMA => biterr(serde_json::from_value(value).map_err(|e| input_error(e.to_string()))?)?,
        FLOOD_SCHEMA => flood(serde_json::from_value(value).map_err(|e| input_error(e.to_string()))?)?,
        other => return Err(input_error(format!("unsupported schema `{other}`"))),
    };
    Ok(files.into_iter().collect())
}

fn sweep(r: SweepResult) -> Result<BTreeMap<String, String>, CliError> {
    if r.points.is_empty() {
        return Err(input_error("result has no points"));
    }
    let mut out = BTreeMap::new();
    if r.experiment == "density" {
        for p in &r.points {
            let body = out
                .entry(format!("density_{}_{}.dat", p.phy, p.series))
                .or_insert_with(|| "# n_tx prr\n".to_string());
            let _ = writeln!(body, "{} {}", p.n_tx, p.prr);
        }
        return Ok(out);
    }
    let figure = if r.experiment == "per_sweep" { "per" } else { r.experiment.as_str() };
    let groups: std::collections::BTreeSet<(usize, String, String)> = r
        .points
        .iter()
        .filter(|p| p.series != BASELINE)
        .map(|p| (p.n_tx, tag(p.rfo_hz), tag(p.delta_p_db)))
        .collect();
    for p in &r.points {
        let series = if p.series == BASELINE || groups.len() <= 1 {
            p.series.clone()
        } else {
            format!("{}-n{}-rfo{}-dp{}", p.series, p.n_tx, tag(p.rfo_hz), tag(p.delta_p_db))
        };
        let body = out
            .entry(format!("{figure}_{}_{series}.dat", p.phy))
            .or_insert_with(|| "# snr_db per\n".to_string());
        let _ = writeln!(body, "{} {}", p.snr_db, p.per);
    }
    Ok(out)
}

fn biterr(r: BiterrResult) -> Result<BTreeMap<String, String>, CliError> {
    if r.histogram.counts.is_empty() {
        return Err(input_error("histogram is empty"));
    }
    let n = r.histogram.packets_observed.max(1) as f64;
    let mut body = String::from("# bit_index error_fraction\n");
    for (i, &c) in r.histogram.counts.iter().enumerate() {
        let _ = writeln!(body, "{i} {}", c as f64 / n);
    }
    Ok(BTreeMap::from([(format!("biterr_{}_errors.dat", r.phy), body)]))
}

fn flood(r: FloodResult) -> Result<BTreeMap<String, String>, CliError> {
    if r.cells.is_empty() {
        return Err(input_error("result has no cells"));
    }
    let mut out = BTreeMap::new();
    for c in &r.cells {
        let x = c.interference as usize;
        let series = format!("{}-{}b", c.protocol, c.payload_bytes);
        for (metric, y) in [("reliability", c.reliability), ("latency", c.latency_s), ("energy", c.energy_j)] {
            let body = out
                .entry(format!("flood-{metric}_{}_{series}.dat", c.phy))
                .or_insert_with(|| format!("# interference(0=none,1=mild,2=strong) {metric}\n"));
            let _ = writeln!(body, "{x} {y}");
        }
    }
    Ok(out)
}
