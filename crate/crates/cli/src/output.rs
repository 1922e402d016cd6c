//! CSV and JSON writers, and the CSV reader used by `fit`.
//!
//! Numbers are written with 17 significant digits so that every `f64`
//! survives a round trip. A non-converged cell leaves its field empty and
//! puts its status in the companion `<column>_flag` column, which exists only
//! for series with at least one such cell.

use std::io::{Read, Write};

use iontrap_cf::sweep::{Axis, Cell, CellStatus, Series, SweepKind, SweepMeta, SweepTable};
use iontrap_cf::CODE_VERSION;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed table: {0}")]
    Malformed(String),
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn flag(status: CellStatus) -> &'static str {
    match status {
        CellStatus::Converged => "",
        CellStatus::NotConverged => "not_converged",
        CellStatus::Lost => "lost",
    }
}

fn parse_flag(s: &str) -> Result<CellStatus, OutputError> {
    match s {
        "" => Ok(CellStatus::Converged),
        "not_converged" => Ok(CellStatus::NotConverged),
        "lost" => Ok(CellStatus::Lost),
        other => Err(OutputError::Malformed(format!("unknown flag {other:?}"))),
    }
}

pub fn write_table_csv<W: Write>(table: &SweepTable, w: W) -> Result<(), OutputError> {
    let flagged: Vec<bool> =
        table.series.iter().map(|s| s.cells.iter().any(|c| c.status != CellStatus::Converged)).collect();
    let mut out = csv_writer(w);
    let mut header = vec![table.axis.name.clone()];
    for (s, &f) in table.series.iter().zip(&flagged) {
        header.push(s.name.clone());
        if f {
            header.push(format!("{}_flag", s.name));
        }
    }
    out.write_record(&header)?;
    for (i, x) in table.axis.values.iter().enumerate() {
        let mut row = vec![fmt_f64(*x)];
        for (s, &f) in table.series.iter().zip(&flagged) {
            let cell = &s.cells[i];
            row.push(cell.value.map(fmt_f64).unwrap_or_default());
            if f {
                row.push(flag(cell.status).to_string());
            }
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Fixed parameters encoded in a series name such as `omega_E3_eta0.4`.
pub fn fixed_from_name(name: &str) -> Vec<(String, f64)> {
    name.split('_')
        .skip(1)
        .filter_map(|tok| {
            let split = tok.find(|c: char| !c.is_ascii_alphabetic())?;
            let (key, num) = tok.split_at(split);
            let value = num.parse::<f64>().ok()?;
            let key = match key {
                "E" => "energy",
                "" => "n",
                k => k,
            };
            Some((key.to_string(), value))
        })
        .collect()
}

fn infer_kind(axis: &str, series: &[Series]) -> SweepKind {
    let first = series.first().map(|s| s.name.as_str()).unwrap_or("");
    if first.starts_with("E_plus_") || first.starts_with("E_minus_") {
        SweepKind::Rwa
    } else if first.starts_with("omega_") {
        SweepKind::OmegaVsDelta
    } else if axis == "eta" {
        SweepKind::EnergyVsEta
    } else {
        SweepKind::EnergyVsDelta
    }
}

/// Reads a table written by [`write_table_csv`]. Values, statuses and names
/// are restored; residuals and branch metadata are not stored in CSV.
pub fn read_table_csv<R: Read>(r: R) -> Result<SweepTable, OutputError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let axis_name = header.first().cloned().ok_or_else(|| OutputError::Malformed("empty header".into()))?;
    // (name, value column, flag column)
    let mut columns: Vec<(String, usize, Option<usize>)> = Vec::new();
    for (j, h) in header.iter().enumerate().skip(1) {
        if let Some(base) = h.strip_suffix("_flag") {
            if let Some(c) = columns.iter_mut().find(|c| c.0 == base) {
                c.2 = Some(j);
                continue;
            }
        }
        columns.push((h.clone(), j, None));
    }
    let mut axis = Vec::new();
    let mut series: Vec<Series> = columns
        .iter()
        .map(|(name, _, _)| Series { name: name.clone(), fixed: fixed_from_name(name), cells: Vec::new() })
        .collect();
    let num = |s: &str| s.parse::<f64>().map_err(|e| OutputError::Malformed(format!("{s:?}: {e}")));
    for rec in rdr.records() {
        let rec = rec?;
        let field = |j: usize| rec.get(j).ok_or_else(|| OutputError::Malformed("short row".into()));
        axis.push(num(field(0)?)?);
        for ((_, vj, fj), s) in columns.iter().zip(series.iter_mut()) {
            let raw = field(*vj)?;
            let status = match fj {
                Some(j) => parse_flag(field(*j)?)?,
                None => CellStatus::Converged,
            };
            let value = if raw.is_empty() { None } else { Some(num(raw)?) };
            if (status == CellStatus::Converged) != value.is_some() {
                return Err(OutputError::Malformed(format!("cell of {} disagrees with its flag", s.name)));
            }
            s.cells.push(Cell { value, status, residual: None, estimate: value });
        }
    }
    let kind = infer_kind(&axis_name, &series);
    Ok(SweepTable {
        axis: Axis { name: axis_name, values: axis },
        series,
        meta: SweepMeta { kind, branch: None, cfg: None, code_version: CODE_VERSION.to_string() },
    })
}

/// Versioned JSON document carrying the resolved configuration and a result.
pub fn envelope<T: Serialize>(config: &RunConfig, result: &T) -> Result<Value, OutputError> {
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "code_version": CODE_VERSION,
        "command": config.command.name(),
        "config": config,
        "result": serde_json::to_value(result)?,
    }))
}

/// Extracts the sweep table from a JSON document written by a sweep command.
pub fn read_table_json<R: Read>(r: R) -> Result<SweepTable, OutputError> {
    let doc: Value = serde_json::from_reader(r)?;
    let result = doc.get("result").cloned().unwrap_or(doc);
    Ok(serde_json::from_value(result)?)
}
