//! Parameter sweeps with root continuation, implicit Ω(Δ) curves, the
//! `Ω = c₀(1 − c₁Δ²)` fit, and rotating-wave reference tables.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contfrac::{self, CfConfig};
use crate::model::{ModelError, ModelParams};
use crate::recurrence::Branch;
use crate::reference::{self, ReferenceError};
use crate::scan::{self, ScanSettings};
use crate::spectrum::{self, SearchOptions, SpectrumError};
use crate::CODE_VERSION;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("{0} grid is empty")]
    EmptyGrid(&'static str),
    #[error("{0} grid is not strictly monotone")]
    NotMonotone(&'static str),
    #[error("continuation lost in series {series} at grid index {grid_index}")]
    ContinuationLost { series: String, grid_index: usize },
    #[error("series {series} has {points} usable points, need at least 4")]
    InsufficientPoints { series: String, points: usize },
    #[error("invalid omega range [{0}, {1}]")]
    InvalidOmegaRange(f64, f64),
    #[error("operation needs a {expected} table")]
    WrongKind { expected: &'static str },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    EnergyVsDelta,
    EnergyVsEta,
    OmegaVsDelta,
    Rwa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Converged,
    NotConverged,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Tracked value, present only for converged cells.
    pub value: Option<f64>,
    pub status: CellStatus,
    pub residual: Option<f64>,
    /// Raw tracked value, also for non-converged cells.
    pub estimate: Option<f64>,
}

impl Cell {
    fn lost() -> Self {
        Cell { value: None, status: CellStatus::Lost, residual: None, estimate: None }
    }

    pub fn exact(value: f64) -> Self {
        Cell { value: Some(value), status: CellStatus::Converged, residual: Some(0.0), estimate: Some(value) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    /// Column name, e.g. `E_eta0.2_omega2`.
    pub name: String,
    /// Fixed parameters of the series, by name (`eta`, `omega`, `delta`, `energy`, `n`).
    pub fixed: Vec<(String, f64)>,
    pub cells: Vec<Cell>,
}

impl Series {
    pub fn fixed_value(&self, key: &str) -> Option<f64> {
        self.fixed.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub kind: SweepKind,
    pub branch: Option<Branch>,
    pub cfg: Option<CfConfig>,
    pub code_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: Axis,
    pub series: Vec<Series>,
    pub meta: SweepMeta,
}

impl SweepTable {
    pub fn column_names(&self) -> Vec<String> {
        std::iter::once(self.axis.name.clone()).chain(self.series.iter().map(|s| s.name.clone())).collect()
    }

    pub fn series_named(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Converged `(axis value, cell value)` pairs of one series.
    pub fn converged_points(&self, series: &Series) -> Vec<(f64, f64)> {
        self.axis.values.iter().zip(&series.cells).filter_map(|(x, c)| c.value.map(|v| (*x, v))).collect()
    }

    /// Value of a converged cell at the grid point closest to `x` (within 1e-9).
    pub fn value_at(&self, series: &Series, x: f64) -> Option<f64> {
        let i = self.axis.values.iter().position(|v| (v - x).abs() < 1e-9)?;
        series.cells[i].value
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.series.iter().flat_map(|s| &s.cells).filter(|c| c.status == status).count()
    }

    pub fn cell_count(&self) -> usize {
        self.series.iter().map(|s| s.cells.len()).sum()
    }
}

/// Settings shared by the continuation sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub cfg: CfConfig,
    pub search: SearchOptions,
    /// Track the root nearest this value at the first grid point. Defaults to
    /// the decoupled ground level (energy sweeps) or the lowest unpaired
    /// decoupled level's Ω (Ω sweeps).
    pub seed: Option<f64>,
    /// Half-width of the first search window around the seed.
    pub initial_window: f64,
    /// Minimum half-width of the follow-up search windows.
    pub follow_window: f64,
    pub scan_step: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            cfg: CfConfig::default(),
            search: SearchOptions::default(),
            seed: None,
            initial_window: 1.5,
            follow_window: 0.02,
            scan_step: 1e-3,
        }
    }
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<(), SweepError> {
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid(name));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) || grid.iter().any(|x| !x.is_finite()) {
        return Err(SweepError::NotMonotone(name));
    }
    Ok(())
}

fn check_list(name: &'static str, list: &[f64]) -> Result<(), SweepError> {
    if list.is_empty() {
        return Err(SweepError::EmptyGrid(name));
    }
    Ok(())
}

/// Follows one root along `grid`, each point seeded by a linear prediction
/// from the previous two converged-or-not estimates.
fn continue_roots<S>(grid: &[f64], seed: f64, opts: &SweepOptions, solve: S) -> Vec<Cell>
where
    S: Fn(f64, (f64, f64), bool, f64) -> Vec<(f64, Cell)>,
{
    let mut cells = Vec::with_capacity(grid.len());
    let mut history: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in grid.iter().enumerate() {
        let (target, mut half) = match history.as_slice() {
            [] => (seed, opts.initial_window),
            [(_, y0)] => (*y0, opts.follow_window),
            [.., (x1, y1), (x2, y2)] => {
                let slope = (y2 - y1) / (x2 - x1);
                let pred = y2 + slope * (x - x2);
                (pred, opts.follow_window.max(2.0 * (pred - y2).abs()))
            }
        };
        let mut picked = None;
        for _ in 0..4 {
            let step = opts.scan_step.min(half / 20.0);
            let found = solve(x, (target - half, target + half), i == 0, step);
            picked = found.into_iter().min_by(|a, b| (a.0 - target).abs().total_cmp(&(b.0 - target).abs()));
            if picked.is_some() || i == 0 {
                break;
            }
            half *= 4.0;
        }
        match picked {
            Some((y, cell)) => {
                history.push((x, y));
                cells.push(cell);
            }
            None => cells.push(Cell::lost()),
        }
    }
    cells
}

fn energy_cell(root: &spectrum::RootDiagnostics) -> Cell {
    let status = if root.flagged { CellStatus::NotConverged } else { CellStatus::Converged };
    Cell {
        value: (status == CellStatus::Converged).then_some(root.energy),
        status,
        residual: Some(root.final_residual.max(root.match_index_spread)),
        estimate: Some(root.energy),
    }
}

fn track_energy<P>(branch: Branch, grid: &[f64], seed: f64, opts: &SweepOptions, params_at: P) -> Vec<Cell>
where
    P: Fn(f64) -> Result<ModelParams, ModelError>,
{
    continue_roots(grid, seed, opts, |x, (lo, hi), _, step| {
        let Ok(params) = params_at(x) else { return vec![] };
        match spectrum::find_roots_with(branch, &params, lo, hi, step, &opts.cfg, &opts.search) {
            Ok(spec) => spec.roots.iter().map(|r| (r.energy, energy_cell(r))).collect(),
            Err(_) => vec![],
        }
    })
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn meta(kind: SweepKind, branch: Option<Branch>, cfg: Option<CfConfig>) -> SweepMeta {
    SweepMeta { kind, branch, cfg, code_version: CODE_VERSION.to_string() }
}

fn all_lost(table: &SweepTable) -> Result<(), SweepError> {
    if table.cell_count() > 0 && table.count(CellStatus::Lost) == table.cell_count() {
        return Err(SweepError::ContinuationLost { series: table.series[0].name.clone(), grid_index: 0 });
    }
    Ok(())
}

fn ground_seed(omega: f64, delta: f64) -> f64 {
    -(omega * omega / 4.0 + delta * delta / 4.0).sqrt()
}

/// Tracked `E(Δ)`, one series per `(η, Ω)` pair. Lost cells are marked; the
/// whole sweep fails only when every cell is lost.
pub fn sweep_e_vs_delta(
    branch: Branch,
    eta_list: &[f64],
    omega_list: &[f64],
    delta_grid: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable, SweepError> {
    check_grid("delta", delta_grid)?;
    check_list("eta", eta_list)?;
    check_list("omega", omega_list)?;
    let specs: Vec<(f64, f64)> = eta_list.iter().flat_map(|&e| omega_list.iter().map(move |&o| (e, o))).collect();
    for &(eta, omega) in &specs {
        ModelParams::new(omega, delta_grid[0], eta)?;
    }
    let series = specs
        .par_iter()
        .map(|&(eta, omega)| {
            let seed = opts.seed.unwrap_or_else(|| ground_seed(omega, delta_grid[0]));
            let cells = track_energy(branch, delta_grid, seed, opts, |d| ModelParams::new(omega, d, eta));
            Series {
                name: format!("E_eta{}_omega{}", fmt_num(eta), fmt_num(omega)),
                fixed: vec![("eta".into(), eta), ("omega".into(), omega)],
                cells,
            }
        })
        .collect();
    let table = SweepTable {
        axis: Axis { name: "delta".into(), values: delta_grid.to_vec() },
        series,
        meta: meta(SweepKind::EnergyVsDelta, Some(branch), Some(opts.cfg)),
    };
    all_lost(&table)?;
    Ok(table)
}

/// Tracked `E(η)`, one series per `(Δ, Ω)` pair.
pub fn sweep_e_vs_eta(
    branch: Branch,
    delta_list: &[f64],
    omega_list: &[f64],
    eta_grid: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable, SweepError> {
    check_grid("eta", eta_grid)?;
    check_list("delta", delta_list)?;
    check_list("omega", omega_list)?;
    let specs: Vec<(f64, f64)> = delta_list.iter().flat_map(|&d| omega_list.iter().map(move |&o| (d, o))).collect();
    for &(delta, omega) in &specs {
        ModelParams::new(omega, delta, eta_grid[0])?;
    }
    let series = specs
        .par_iter()
        .map(|&(delta, omega)| {
            let seed = opts.seed.unwrap_or_else(|| ground_seed(omega, delta));
            let cells = track_energy(branch, eta_grid, seed, opts, |eta| ModelParams::new(omega, delta, eta));
            Series {
                name: format!("E_delta{}_omega{}", fmt_num(delta), fmt_num(omega)),
                fixed: vec![("delta".into(), delta), ("omega".into(), omega)],
                cells,
            }
        })
        .collect();
    let table = SweepTable {
        axis: Axis { name: "eta".into(), values: eta_grid.to_vec() },
        series,
        meta: meta(SweepKind::EnergyVsEta, Some(branch), Some(opts.cfg)),
    };
    all_lost(&table)?;
    Ok(table)
}

/// An Ω at which `energy` is an eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaRoot {
    pub omega: f64,
    /// Newton step `|F/∂_Ω F|` of the characteristic function.
    pub residual: f64,
    pub multiplicity: u8,
}

fn omega_roots(
    branch: Branch,
    energy: f64,
    delta: f64,
    eta: f64,
    range: (f64, f64),
    step: f64,
    opts: &SweepOptions,
) -> Vec<OmegaRoot> {
    let settings = ScanSettings {
        lo: range.0,
        hi: range.1,
        step,
        root_tol: opts.search.root_tol,
        merge_tol: opts.search.merge_tol,
        touch_tol: opts.search.touch_tol,
    };
    let f = |om: f64| contfrac::characteristic_omega_slope(branch, energy, om, delta, eta, &opts.cfg);
    scan::find_zeros(f, &settings)
        .into_iter()
        .filter(|z| z.x >= 0.0)
        .map(|z| {
            let (v, dv) = f(z.x);
            let residual = if z.multiplicity > 1 { z.touch_gap } else if v == 0.0 { 0.0 } else { (v / dv).abs() };
            OmegaRoot { omega: z.x, residual, multiplicity: z.multiplicity }
        })
        .collect()
}

/// Decoupled `Ω = 2√((n − E)² − Δ²/4)` on the lowest level `n > 2E`. Levels
/// `n` and `2E − n` give the same curve, and for integer or half-integer `E`
/// such pairs anticross once `η > 0`; levels above `2E` have no partner.
fn omega_seed(energy: f64, delta: f64, omega_range: (f64, f64)) -> f64 {
    let n = (2.0 * energy).floor().max(-1.0) + 1.0;
    let s = (n - energy).powi(2) - delta * delta / 4.0;
    if s > 0.0 {
        2.0 * s.sqrt()
    } else {
        0.5 * (omega_range.0 + omega_range.1)
    }
}

fn check_omega_range(range: (f64, f64)) -> Result<(), SweepError> {
    if !(range.0 >= 0.0 && range.0 < range.1 && range.1.is_finite()) {
        return Err(SweepError::InvalidOmegaRange(range.0, range.1));
    }
    Ok(())
}

/// Values of Ω in `omega_range` for which `energy` is an eigenvalue at
/// fixed `(Δ, η)`, scanned with step `1e-3`.
pub fn solve_omega(
    branch: Branch,
    energy: f64,
    delta: f64,
    eta: f64,
    omega_range: (f64, f64),
    cfg: &CfConfig,
) -> Result<Vec<f64>, SweepError> {
    let opts = SweepOptions { cfg: *cfg, ..SweepOptions::default() };
    Ok(solve_omega_with(branch, energy, delta, eta, omega_range, &opts)?.into_iter().map(|r| r.omega).collect())
}

pub fn solve_omega_with(
    branch: Branch,
    energy: f64,
    delta: f64,
    eta: f64,
    omega_range: (f64, f64),
    opts: &SweepOptions,
) -> Result<Vec<OmegaRoot>, SweepError> {
    check_omega_range(omega_range)?;
    ModelParams::new(omega_range.0, delta, eta)?;
    opts.cfg.validate().map_err(SpectrumError::from)?;
    Ok(omega_roots(branch, energy, delta, eta, omega_range, opts.scan_step, opts))
}

/// Tracked `Ω(Δ)` at fixed energy, one series per `(E, η)` pair.
pub fn sweep_omega_vs_delta(
    branch: Branch,
    energy_list: &[f64],
    eta_list: &[f64],
    delta_grid: &[f64],
    omega_range: (f64, f64),
    opts: &SweepOptions,
) -> Result<SweepTable, SweepError> {
    check_grid("delta", delta_grid)?;
    check_list("energy", energy_list)?;
    check_list("eta", eta_list)?;
    check_omega_range(omega_range)?;
    opts.cfg.validate().map_err(SpectrumError::from)?;
    let specs: Vec<(f64, f64)> = energy_list.iter().flat_map(|&e| eta_list.iter().map(move |&h| (e, h))).collect();
    for &(_, eta) in &specs {
        ModelParams::new(omega_range.0, delta_grid[0], eta)?;
    }
    let tol = 10.0 * opts.search.root_tol;
    let series = specs
        .par_iter()
        .map(|&(energy, eta)| {
            let d0 = delta_grid[0];
            let seed = opts.seed.unwrap_or_else(|| omega_seed(energy, d0, omega_range));
            let cells = continue_roots(delta_grid, seed, opts, |delta, (lo, hi), first, step| {
                let (lo, hi) = if first {
                    omega_range
                } else {
                    (lo.max(omega_range.0), hi.min(omega_range.1))
                };
                if lo >= hi {
                    return vec![];
                }
                omega_roots(branch, energy, delta, eta, (lo, hi), step, opts)
                    .into_iter()
                    .map(|r| {
                        let ok = r.residual <= tol && r.multiplicity == 1;
                        let cell = Cell {
                            value: ok.then_some(r.omega),
                            status: if ok { CellStatus::Converged } else { CellStatus::NotConverged },
                            residual: Some(r.residual),
                            estimate: Some(r.omega),
                        };
                        (r.omega, cell)
                    })
                    .collect()
            });
            Series {
                name: format!("omega_E{}_eta{}", fmt_num(energy), fmt_num(eta)),
                fixed: vec![("energy".into(), energy), ("eta".into(), eta)],
                cells,
            }
        })
        .collect();
    let table = SweepTable {
        axis: Axis { name: "delta".into(), values: delta_grid.to_vec() },
        series,
        meta: meta(SweepKind::OmegaVsDelta, Some(branch), Some(opts.cfg)),
    };
    all_lost(&table)?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub name: String,
    pub energy: Option<f64>,
    pub eta: Option<f64>,
    /// Sample of `f(E)`.
    pub c0: f64,
    /// Sample of `h(η)`.
    pub c1: f64,
    pub max_relative_residual: f64,
    pub points: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureFit {
    pub series: Vec<SeriesFit>,
    /// Mean `c₀` per energy.
    pub f_by_energy: Vec<(f64, f64)>,
    /// Mean `c₁` per η.
    pub h_by_eta: Vec<(f64, f64)>,
    pub max_relative_residual: f64,
    pub all_positive: bool,
}

/// Least-squares `Ω(Δ) ≈ c₀(1 − c₁Δ²)` per series: a straight-line fit of Ω
/// against Δ², with `c₀` the intercept and `c₁ = −slope/c₀`.
pub fn fit_conjecture(table: &SweepTable) -> Result<ConjectureFit, SweepError> {
    if table.axis.name != "delta" {
        return Err(SweepError::WrongKind { expected: "omega-vs-delta" });
    }
    let mut fits = Vec::with_capacity(table.series.len());
    for s in &table.series {
        let pts = table.converged_points(s);
        if pts.len() < 4 {
            return Err(SweepError::InsufficientPoints { series: s.name.clone(), points: pts.len() });
        }
        let n = pts.len() as f64;
        let xs: Vec<f64> = pts.iter().map(|(d, _)| d * d).collect();
        let ys: Vec<f64> = pts.iter().map(|(_, o)| *o).collect();
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
        let c0 = ym - slope * xm;
        let c1 = -slope / c0;
        let max_relative_residual = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| ((c0 + slope * x) - y).abs() / y.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        fits.push(SeriesFit {
            name: s.name.clone(),
            energy: s.fixed_value("energy"),
            eta: s.fixed_value("eta"),
            c0,
            c1,
            max_relative_residual,
            points: pts.len(),
            positive: c0 > 0.0 && c1 > 0.0,
        });
    }
    let group = |key: fn(&SeriesFit) -> Option<f64>, val: fn(&SeriesFit) -> f64| {
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for f in &fits {
            let Some(k) = key(f) else { continue };
            match out.iter_mut().find(|(x, _, _)| *x == k) {
                Some(entry) => {
                    entry.1 += val(f);
                    entry.2 += 1;
                }
                None => out.push((k, val(f), 1)),
            }
        }
        out.into_iter().map(|(k, s, c)| (k, s / c as f64)).collect::<Vec<_>>()
    };
    let f_by_energy = group(|f| f.energy, |f| f.c0);
    let h_by_eta = group(|f| f.eta, |f| f.c1);
    let max_relative_residual = fits.iter().map(|f| f.max_relative_residual).fold(0.0, f64::max);
    let all_positive = fits.iter().all(|f| f.positive);
    Ok(ConjectureFit { series: fits, f_by_energy, h_by_eta, max_relative_residual, all_positive })
}

/// Rotating-wave `E±_n(η)` at `Ω = 2`, columns `E_plus_n`, `E_minus_n`.
pub fn rwa_sweep(n_list: &[usize], eta_grid: &[f64]) -> Result<SweepTable, SweepError> {
    check_grid("eta", eta_grid)?;
    if n_list.is_empty() {
        return Err(SweepError::EmptyGrid("n"));
    }
    let mut series = Vec::with_capacity(2 * n_list.len());
    for &n in n_list {
        let (plus, minus): (Vec<Cell>, Vec<Cell>) = eta_grid
            .iter()
            .map(|&eta| {
                let (p, m) = reference::rwa_energies(n, eta);
                (Cell::exact(p), Cell::exact(m))
            })
            .unzip();
        let fixed = vec![("n".to_string(), n as f64), ("omega".to_string(), 2.0)];
        series.push(Series { name: format!("E_plus_{n}"), fixed: fixed.clone(), cells: plus });
        series.push(Series { name: format!("E_minus_{n}"), fixed, cells: minus });
    }
    Ok(SweepTable {
        axis: Axis { name: "eta".into(), values: eta_grid.to_vec() },
        series,
        meta: meta(SweepKind::Rwa, None, None),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTrend {
    pub name: String,
    pub converged_cells: usize,
    /// Along increasing axis values, over converged cells.
    pub non_decreasing: bool,
    /// Axis values where the converged series steps down.
    pub decreases_at: Vec<f64>,
    /// Last minus first converged value (in increasing axis order).
    pub increment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub series: Vec<SeriesTrend>,
}

/// Monotonicity summary of every series. Steps smaller than `tol` in
/// magnitude do not count as decreases.
pub fn trend_report(table: &SweepTable, tol: f64) -> TrendReport {
    let series = table
        .series
        .iter()
        .map(|s| {
            let mut pts = table.converged_points(s);
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let decreases_at: Vec<f64> =
                pts.windows(2).filter(|w| w[1].1 < w[0].1 - tol).map(|w| w[1].0).collect();
            SeriesTrend {
                name: s.name.clone(),
                converged_cells: pts.len(),
                non_decreasing: decreases_at.is_empty(),
                decreases_at,
                increment: match (pts.first(), pts.last()) {
                    (Some(a), Some(b)) if pts.len() > 1 => Some(b.1 - a.1),
                    _ => None,
                },
            }
        })
        .collect();
    TrendReport { series }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub series: String,
    pub axis_value: f64,
    pub value: f64,
    pub nearest_eigenvalue: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValidation {
    pub checks: Vec<OracleCheck>,
    pub max_difference: f64,
    pub passed: bool,
    pub tol: f64,
}

/// Re-checks a seeded random `fraction` of converged cells (at least one)
/// against the dense oracle at truncation `n_max`.
pub fn validate_against_oracle(
    table: &SweepTable,
    fraction: f64,
    seed: u64,
    n_max: usize,
    tol: f64,
) -> Result<OracleValidation, SweepError> {
    let kind = table.meta.kind;
    if kind == SweepKind::Rwa {
        return Err(SweepError::WrongKind { expected: "continued-fraction" });
    }
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for (si, s) in table.series.iter().enumerate() {
        for (ci, c) in s.cells.iter().enumerate() {
            if c.value.is_some() {
                cells.push((si, ci));
            }
        }
    }
    if cells.is_empty() {
        return Ok(OracleValidation { checks: vec![], max_difference: 0.0, passed: true, tol });
    }
    let amount = ((cells.len() as f64 * fraction).ceil() as usize).clamp(1, cells.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, cells.len(), amount).into_vec();
    picked.sort_unstable();

    let checks: Result<Vec<OracleCheck>, SweepError> = picked
        .par_iter()
        .map(|&k| {
            let (si, ci) = cells[k];
            let s = &table.series[si];
            let x = table.axis.values[ci];
            let value = s.cells[ci].value.expect("converged cell");
            let get = |key: &str| s.fixed_value(key).unwrap_or(0.0);
            let (params, expected) = match kind {
                SweepKind::EnergyVsDelta => (ModelParams::new(get("omega"), x, get("eta"))?, value),
                SweepKind::EnergyVsEta => (ModelParams::new(get("omega"), get("delta"), x)?, value),
                SweepKind::OmegaVsDelta => (ModelParams::new(value, x, get("eta"))?, get("energy")),
                SweepKind::Rwa => unreachable!(),
            };
            let oracle = reference::oracle_diagonalize(&params, n_max)?;
            let nearest = oracle
                .interior()
                .iter()
                .copied()
                .min_by(|a, b| (a - expected).abs().total_cmp(&(b - expected).abs()))
                .unwrap_or(f64::NAN);
            Ok(OracleCheck {
                series: s.name.clone(),
                axis_value: x,
                value,
                nearest_eigenvalue: nearest,
                difference: (nearest - expected).abs(),
            })
        })
        .collect();
    let checks = checks?;
    let max_difference = checks.iter().map(|c| c.difference).fold(0.0, f64::max);
    Ok(OracleValidation { passed: max_difference <= tol, checks, max_difference, tol })
}

/// `start, start + step, …` up to `stop`, including `stop` when it is
/// reached within `1e-12`.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return if (stop - start).abs() <= 1e-12 { vec![start] } else { vec![] };
    }
    let count = ((stop - start) / step + 1e-12 / step).floor() as usize;
    (0..=count)
        .map(|i| {
            let x = start + i as f64 * step;
            if (x - stop).abs() <= 1e-12 {
                stop
            } else {
                x
            }
        })
        .collect()
}
