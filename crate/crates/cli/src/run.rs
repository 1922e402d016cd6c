//! Command dispatch and exit statuses.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use iontrap_cf::model::{build_original_hamiltonian, build_transformed_hamiltonian};
use iontrap_cf::reference::{self, MatchReport};
use iontrap_cf::spectrum::{self, Spectrum};
use iontrap_cf::sweep::{self, CellStatus, SweepKind, SweepTable};
use iontrap_cf::Branch;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{self, Command, ConfigError, Format, Frame, RunConfig};
use crate::output::{self, OutputError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl From<OutputError> for RunError {
    fn from(e: OutputError) -> Self {
        RunError::Usage(format!("output: {e}"))
    }
}

fn numerical(e: impl Display) -> RunError {
    RunError::Numerical(e.to_string())
}

/// Result of a run whose output was written. A numerical problem found after
/// the output exists (unmatched roots, a failed spot check) still yields the
/// output, with exit status 2.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Success,
    NumericalFailure(String),
}

impl Status {
    pub fn code(&self) -> i32 {
        match self {
            Status::Success => EXIT_OK,
            Status::NumericalFailure(_) => EXIT_NUMERICAL,
        }
    }
}

/// Parses, echoes the resolved configuration to stderr, runs, and returns the
/// process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match config::parse_config(args) {
        Ok(cfg) => cfg,
        Err(ConfigError::Info(text)) => {
            print!("{text}");
            return EXIT_OK;
        }
        Err(ConfigError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    match serde_json::to_string(&cfg) {
        Ok(echo) => eprintln!("{echo}"),
        Err(e) => eprintln!("warning: could not echo configuration: {e}"),
    }
    match run(&cfg) {
        Ok(Status::Success) => EXIT_OK,
        Ok(Status::NumericalFailure(msg)) => {
            eprintln!("numerical failure: {msg}");
            EXIT_NUMERICAL
        }
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("{}", json!({ "schema_version": output::SCHEMA_VERSION, "error": msg }));
            EXIT_NUMERICAL
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Status, RunError> {
    match cfg.command {
        Command::Solve => solve(cfg),
        Command::Eigvec => eigvec(cfg),
        Command::Oracle => oracle(cfg),
        Command::Compare => compare(cfg),
        Command::SweepEd | Command::SweepEe | Command::SweepOd => sweep_cmd(cfg),
        Command::Rwa => {
            let table = sweep::rwa_sweep(&cfg.n_list, &cfg.eta_grid.values()).map_err(numerical)?;
            write_table(cfg, &table, None)?;
            Ok(Status::Success)
        }
        Command::Fit => fit(cfg),
    }
}

fn write_out(cfg: &RunConfig, bytes: &[u8]) -> Result<(), RunError> {
    let io = |path: &Path, e: std::io::Error| RunError::Usage(format!("--output {}: {e}", path.display()));
    match &cfg.output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| io(path, e))?;
            }
            std::fs::write(path, bytes).map_err(|e| io(path, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| io(Path::new("<stdout>"), e))
        }
    }
}

fn write_json(cfg: &RunConfig, doc: &Value) -> Result<(), RunError> {
    let mut bytes = serde_json::to_vec_pretty(doc).map_err(OutputError::from)?;
    bytes.push(b'\n');
    write_out(cfg, &bytes)
}

fn write_result<T: Serialize>(cfg: &RunConfig, result: &T) -> Result<(), RunError> {
    write_json(cfg, &output::envelope(cfg, result)?)
}

fn write_rows(cfg: &RunConfig, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), RunError> {
    let mut buf = Vec::new();
    {
        let mut w = output::csv_writer(&mut buf);
        w.write_record(header).map_err(OutputError::from)?;
        for row in rows {
            w.write_record(&row).map_err(OutputError::from)?;
        }
        w.flush().map_err(OutputError::from)?;
    }
    write_out(cfg, &buf)
}

fn solve(cfg: &RunConfig) -> Result<Status, RunError> {
    let params = cfg.params();
    let spectra: Vec<Spectrum> = cfg
        .branch
        .branches()
        .into_iter()
        .map(|b| spectrum::find_roots_with(b, &params, cfg.e_min, cfg.e_max, cfg.scan_step, &cfg.cf(), &cfg.search()))
        .collect::<Result<_, _>>()
        .map_err(numerical)?;
    match cfg.format {
        Format::Json => write_result(cfg, &spectra)?,
        Format::Csv => {
            let f = output::fmt_f64;
            let rows = spectra
                .iter()
                .flat_map(|s| s.roots.iter())
                .map(|r| {
                    vec![
                        r.branch.short_name().to_string(),
                        f(r.energy),
                        r.multiplicity.to_string(),
                        f(r.final_residual),
                        f(r.match_index_spread),
                        r.recurrence_residual.map(f).unwrap_or_default(),
                        r.flagged.to_string(),
                    ]
                })
                .collect();
            let header = [
                "branch",
                "energy",
                "multiplicity",
                "final_residual",
                "match_index_spread",
                "recurrence_residual",
                "flagged",
            ];
            write_rows(cfg, &header, rows)?;
        }
    }
    Ok(Status::Success)
}

fn eigvec(cfg: &RunConfig) -> Result<Status, RunError> {
    let params = cfg.params();
    let branch = cfg.single_branch();
    let target = cfg.energy.expect("validated");
    let half = 0.5;
    let spec = spectrum::find_roots_with(branch, &params, target - half, target + half, cfg.scan_step, &cfg.cf(), &cfg.search())
        .map_err(numerical)?;
    let root = spec
        .roots
        .iter()
        .min_by(|a, b| (a.energy - target).abs().total_cmp(&(b.energy - target).abs()))
        .ok_or_else(|| RunError::Numerical(format!("no {branch} root within {half} of {target}")))?;
    let sol = spectrum::series_solution(branch, root.energy, &params, cfg.n_max.max(60)).map_err(numerical)?;
    let psi = spectrum::to_fock(&sol, cfg.n_max).map_err(numerical)?;
    let (psi, h) = match cfg.frame {
        Frame::Transformed => (psi, build_transformed_hamiltonian(&params, cfg.n_max).map_err(numerical)?),
        Frame::Original => (
            spectrum::to_original_frame(&psi, &params, cfg.n_max).map_err(numerical)?,
            build_original_hamiltonian(&params, cfg.n_max).map_err(numerical)?,
        ),
    };
    let residual = spectrum::eigen_residual(&psi, &h, root.energy).map_err(numerical)?;
    eprintln!("{}", json!({ "energy": root.energy, "eigen_residual": residual, "tail_mass": psi.tail_mass }));
    match cfg.format {
        Format::Json => {
            write_result(cfg, &json!({ "root": root, "frame": cfg.frame, "eigen_residual": residual, "spinor": psi }))?
        }
        Format::Csv => {
            let f = output::fmt_f64;
            let rows = (0..psi.n_max())
                .map(|n| {
                    let (u, d) = (psi.up[n], psi.down[n]);
                    vec![n.to_string(), f(u.re), f(u.im), f(d.re), f(d.im)]
                })
                .collect();
            write_rows(cfg, &["n", "up_re", "up_im", "down_re", "down_im"], rows)?;
        }
    }
    Ok(Status::Success)
}

fn oracle(cfg: &RunConfig) -> Result<Status, RunError> {
    let spec = reference::oracle_diagonalize(&cfg.params(), cfg.n_max).map_err(numerical)?;
    match cfg.format {
        Format::Json => write_result(cfg, &spec)?,
        Format::Csv => {
            let rows = spec
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(k, e)| vec![k.to_string(), output::fmt_f64(*e), (k < spec.interior_len).to_string()])
                .collect();
            write_rows(cfg, &["index", "eigenvalue", "interior"], rows)?;
        }
    }
    Ok(Status::Success)
}

#[derive(Serialize)]
struct BranchReport {
    branch: Branch,
    roots: usize,
    flagged: usize,
    report: MatchReport,
}

fn compare(cfg: &RunConfig) -> Result<Status, RunError> {
    let params = cfg.params();
    let oracle = reference::oracle_diagonalize(&params, cfg.n_max).map_err(numerical)?;
    // Above the trusted part of the dense spectrum there is nothing to match.
    let top = oracle.interior().last().copied().unwrap_or(cfg.e_max);
    let window = (cfg.e_min, cfg.e_max.min(top));
    if window.0 >= window.1 {
        return Err(RunError::Usage(format!(
            "window [{}, {}] lies above the trusted dense spectrum (top {top}); raise --n-max",
            cfg.e_min, cfg.e_max
        )));
    }
    let mut reports = Vec::new();
    for branch in cfg.branch.branches() {
        let spec = spectrum::find_roots_with(branch, &params, window.0, window.1, cfg.scan_step, &cfg.cf(), &cfg.search())
            .map_err(numerical)?;
        reports.push(BranchReport {
            branch,
            roots: spec.roots.len(),
            flagged: spec.roots.iter().filter(|r| r.flagged).count(),
            report: reference::match_roots(&spec, &oracle, cfg.match_tol),
        });
    }
    write_result(cfg, &json!({ "window": window, "oracle_n_max": cfg.n_max, "reports": reports }))?;
    let unmatched: usize = reports.iter().map(|r| r.report.unmatched_cf.len()).sum();
    Ok(if unmatched == 0 {
        Status::Success
    } else {
        Status::NumericalFailure(format!("{unmatched} roots without a dense eigenvalue within {}", cfg.match_tol))
    })
}

fn write_table(cfg: &RunConfig, table: &SweepTable, validation: Option<&sweep::OracleValidation>) -> Result<(), RunError> {
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            output::write_table_csv(table, &mut buf)?;
            write_out(cfg, &buf)
        }
        Format::Json => {
            let mut doc = output::envelope(cfg, table)?;
            if let Some(v) = validation {
                doc["validation"] = serde_json::to_value(v).map_err(OutputError::from)?;
            }
            write_json(cfg, &doc)
        }
    }
}

fn sweep_cmd(cfg: &RunConfig) -> Result<Status, RunError> {
    let branch = cfg.single_branch();
    let opts = cfg.sweep_options();
    let table = match cfg.command {
        Command::SweepEd => {
            sweep::sweep_e_vs_delta(branch, &cfg.eta_list, &cfg.omega_list, &cfg.delta_grid.values(), &opts)
        }
        Command::SweepEe => sweep::sweep_e_vs_eta(branch, &cfg.delta_list, &cfg.omega_list, &cfg.eta_grid.values(), &opts),
        _ => sweep::sweep_omega_vs_delta(
            branch,
            &cfg.energy_list,
            &cfg.eta_list,
            &cfg.delta_grid.values(),
            (cfg.omega_min, cfg.omega_max),
            &opts,
        ),
    }
    .map_err(numerical)?;
    eprintln!(
        "{}",
        json!({
            "cells": table.cell_count(),
            "converged": table.count(CellStatus::Converged),
            "not_converged": table.count(CellStatus::NotConverged),
            "lost": table.count(CellStatus::Lost),
        })
    );
    let validation = if cfg.check_fraction > 0.0 {
        let v = sweep::validate_against_oracle(&table, cfg.check_fraction, cfg.sample_seed, cfg.n_max, cfg.match_tol)
            .map_err(numerical)?;
        eprintln!("{}", json!({ "validation": { "checks": v.checks.len(), "max_difference": v.max_difference, "passed": v.passed } }));
        Some(v)
    } else {
        None
    };
    write_table(cfg, &table, validation.as_ref())?;
    Ok(match validation {
        Some(v) if !v.passed => Status::NumericalFailure(format!(
            "oracle spot check off by {:.3e} (tol {:.1e})",
            v.max_difference, v.tol
        )),
        _ => Status::Success,
    })
}

fn fit(cfg: &RunConfig) -> Result<Status, RunError> {
    let path = cfg.input.as_ref().expect("validated");
    let file = std::fs::File::open(path).map_err(|e| RunError::Usage(format!("--input {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|x| x.eq_ignore_ascii_case("json"));
    let table = if is_json { output::read_table_json(file) } else { output::read_table_csv(file) }
        .map_err(|e| RunError::Usage(format!("--input {}: {e}", path.display())))?;
    let trend = sweep::trend_report(&table, 10.0 * cfg.root_tol);
    let (conjecture, conjecture_error) = if table.meta.kind == SweepKind::OmegaVsDelta {
        match sweep::fit_conjecture(&table) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    write_result(cfg, &json!({ "trend": trend, "conjecture": conjecture, "conjecture_error": conjecture_error }))?;
    Ok(match conjecture_error {
        Some(e) => Status::NumericalFailure(e),
        None => Status::Success,
    })
}
