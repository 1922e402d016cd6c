//! Flags and config files, merged into a fully resolved [`RunConfig`].
//!
//! Precedence is flag, then config file, then the per-command default. The
//! config file is TOML with the flag names in snake_case (`tail_depth = 800`,
//! `eta_list = [0.2, 0.4]`, `delta_grid = "0:3:0.05"`); unknown keys are
//! rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, ValueEnum};
use iontrap_cf::contfrac::CfConfig;
use iontrap_cf::model::{ModelError, ModelParams};
use iontrap_cf::recurrence::Branch;
use iontrap_cf::spectrum::{SearchOptions, DEFAULT_SCAN_STEP, DEFAULT_WINDOW};
use iontrap_cf::sweep::{self, SweepOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Directory for output files when `--output` is not given.
pub const OUT_DIR_ENV: &str = "IONTRAP_CF_OUT_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    /// `--help` or `--version`; the text goes to stdout and the run succeeds.
    #[error("{0}")]
    Info(String),
    #[error("{0}")]
    Usage(String),
}

fn usage(msg: impl Into<String>) -> ConfigError {
    ConfigError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Roots of the continued fraction in an energy window.
    Solve,
    /// Eigenfunction at the root nearest `--energy`.
    Eigvec,
    /// Dense diagonalization of the truncated Hamiltonian.
    Oracle,
    /// Continued-fraction roots matched against the dense spectrum.
    Compare,
    /// Tracked energy against detuning.
    SweepEd,
    /// Tracked energy against Lamb-Dicke parameter.
    SweepEe,
    /// Rabi frequency against detuning at fixed energy.
    SweepOd,
    /// Rotating-wave reference energies.
    Rwa,
    /// Trend report and `Ω = c₀(1 − c₁Δ²)` fit of a sweep table.
    Fit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Eigvec => "eigvec",
            Command::Oracle => "oracle",
            Command::Compare => "compare",
            Command::SweepEd => "sweep-ed",
            Command::SweepEe => "sweep-ee",
            Command::SweepOd => "sweep-od",
            Command::Rwa => "rwa",
            Command::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BranchChoice {
    Minus,
    Plus,
    Both,
}

impl BranchChoice {
    pub fn branches(self) -> Vec<Branch> {
        match self {
            BranchChoice::Minus => vec![Branch::MinusExp],
            BranchChoice::Plus => vec![Branch::PlusExp],
            BranchChoice::Both => Branch::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Frame of the eigenfunction written by `eigvec`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Transformed,
    Original,
}

/// `start:stop:step`, inclusive of `stop` when reached within `1e-12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        sweep::grid(self.start, self.stop, self.step)
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        let g = GridSpec { start: num(start)?, stop: num(stop)?, step: num(step)? };
        if !(g.start.is_finite() && g.stop.is_finite() && g.step.is_finite()) {
            return Err(format!("grid {s:?} is not finite"));
        }
        if g.step <= 0.0 || g.stop < g.start {
            return Err(format!("grid {s:?} needs step > 0 and stop >= start"));
        }
        Ok(g)
    }
}

impl TryFrom<String> for GridSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

#[derive(Debug, Parser)]
#[command(name = "iontrap-cf", version, about = "Continued-fraction spectrum of a trapped ion beyond the rotating-wave approximation")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML file supplying defaults for any option below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub opts: Options,
}

/// Every knob, all optional so that flags, file and defaults can be layered.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Rabi frequency Ω.
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Detuning Δ.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Lamb-Dicke parameter η.
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    #[arg(long, value_enum)]
    pub branch: Option<BranchChoice>,
    #[arg(long, allow_negative_numbers = true)]
    pub e_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub e_max: Option<f64>,
    #[arg(long)]
    pub scan_step: Option<f64>,
    #[arg(long)]
    pub tail_depth: Option<usize>,
    #[arg(long)]
    pub match_index: Option<usize>,
    #[arg(long)]
    pub pole_guard: Option<f64>,
    /// Fock truncation of the dense matrices.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub root_tol: Option<f64>,
    /// Tolerance for matching roots against dense eigenvalues.
    #[arg(long)]
    pub match_tol: Option<f64>,
    /// Target energy for `eigvec`.
    #[arg(long, allow_negative_numbers = true)]
    pub energy: Option<f64>,
    #[arg(long, value_enum)]
    pub frame: Option<Frame>,
    /// Starting value tracked by a sweep.
    #[arg(long, allow_negative_numbers = true)]
    pub seed: Option<f64>,
    /// Share of converged sweep cells re-checked against the dense oracle.
    #[arg(long)]
    pub check_fraction: Option<f64>,
    /// RNG seed for picking the re-checked cells.
    #[arg(long)]
    pub sample_seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub eta_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub omega_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub energy_list: Option<Vec<f64>>,
    /// Fock levels for `rwa`.
    #[arg(long = "n", value_delimiter = ',')]
    #[serde(rename = "n")]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub delta_grid: Option<GridSpec>,
    #[arg(long)]
    pub eta_grid: Option<GridSpec>,
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// Sweep table read by `fit` (CSV or JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; defaults to `$IONTRAP_CF_OUT_DIR/<command>.<ext>`, else stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! layer {
    ($hi:expr, $lo:expr, $($f:ident),+ $(,)?) => {
        Options { $($f: $hi.$f.or($lo.$f)),+ }
    };
}

impl Options {
    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: Options) -> Options {
        layer!(
            self, lower, omega, delta, eta, branch, e_min, e_max, scan_step, tail_depth, match_index, pole_guard,
            n_max, root_tol, match_tol, energy, frame, seed, check_fraction, sample_seed, eta_list, omega_list,
            delta_list, energy_list, n_list, delta_grid, eta_grid, omega_min, omega_max, input, output, format,
        )
    }
}

/// Every setting of a run after layering and validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub omega: f64,
    pub delta: f64,
    pub eta: f64,
    pub branch: BranchChoice,
    pub e_min: f64,
    pub e_max: f64,
    pub scan_step: f64,
    pub tail_depth: usize,
    pub match_index: usize,
    pub pole_guard: f64,
    pub n_max: usize,
    pub root_tol: f64,
    pub match_tol: f64,
    pub energy: Option<f64>,
    pub frame: Frame,
    pub seed: Option<f64>,
    pub check_fraction: f64,
    pub sample_seed: u64,
    pub eta_list: Vec<f64>,
    pub omega_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub energy_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub delta_grid: GridSpec,
    pub eta_grid: GridSpec,
    pub omega_min: f64,
    pub omega_max: f64,
    pub input: Option<PathBuf>,
    /// `None` writes to stdout.
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.omega, self.delta, self.eta).expect("validated")
    }

    pub fn cf(&self) -> CfConfig {
        CfConfig { match_index: self.match_index, tail_depth: self.tail_depth, pole_guard: self.pole_guard }
    }

    pub fn search(&self) -> SearchOptions {
        SearchOptions { root_tol: self.root_tol, ..SearchOptions::default() }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            cfg: self.cf(),
            search: self.search(),
            seed: self.seed,
            scan_step: self.scan_step,
            ..SweepOptions::default()
        }
    }

    /// The single branch of a sweep or `eigvec`.
    pub fn single_branch(&self) -> Branch {
        self.branch.branches()[0]
    }
}

fn grid(s: &str) -> GridSpec {
    s.parse().expect("built-in grid")
}

/// Parses `args` (program name first), layers a config file named by
/// `--config` under the flags, and validates the result.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ConfigError::Info(e.to_string()),
            _ => usage(e.to_string()),
        }
    })?;
    let file = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => Options::default(),
    };
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    resolve(cli.command, cli.opts.over(file), out_dir.as_deref())
}

pub fn read_config_file(path: &Path) -> Result<Options, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("--config {}: {e}", path.display())))
}

fn model_error(e: ModelError) -> ConfigError {
    match e {
        ModelError::NonFinite { name, value } => usage(format!("--{name} must be finite, got {value}")),
        ModelError::Negative { name, value } => usage(format!("--{name} must be non-negative, got {value}")),
        other => usage(other.to_string()),
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(usage(msg()))
    }
}

fn positive(flag: &str, v: f64) -> Result<(), ConfigError> {
    check(v > 0.0 && v.is_finite(), || format!("--{flag} must be positive and finite, got {v}"))
}

fn list(flag: &str, v: &[f64], non_negative: bool) -> Result<(), ConfigError> {
    check(!v.is_empty(), || format!("--{flag} is empty"))?;
    for &x in v {
        check(x.is_finite(), || format!("--{flag} entry {x} is not finite"))?;
        check(!non_negative || x >= 0.0, || format!("--{flag} entries must be non-negative, got {x}"))?;
    }
    Ok(())
}

/// Fills defaults for `command`, validates, and resolves the output path
/// (`out_dir` stands in for the environment variable).
pub fn resolve(command: Command, o: Options, out_dir: Option<&Path>) -> Result<RunConfig, ConfigError> {
    use Command::*;
    let (default_eta, default_omega, default_delta, default_energy, default_delta_grid) = match command {
        SweepEd => (vec![0.2, 0.4, 0.6, 0.8], vec![2.0, 4.0, 6.0], vec![0.2], vec![3.0, 5.0], "0:3:0.05"),
        SweepEe => (vec![0.2], vec![2.0], vec![0.2, 1.6, 2.0, 3.0], vec![3.0, 5.0], "0:3:0.05"),
        _ => (vec![0.02, 0.4, 0.6], vec![2.0], vec![0.2], vec![3.0, 5.0], "0:2:0.1"),
    };
    let default_eta_grid = if command == Rwa { "0:0.8:0.02" } else { "0.2:0.8:0.02" };
    let default_format = if matches!(command, Compare | Fit) { Format::Json } else { Format::Csv };
    let cf = CfConfig::default();
    let search = SearchOptions::default();

    let cfg = RunConfig {
        command,
        omega: o.omega.unwrap_or(2.0),
        delta: o.delta.unwrap_or(0.2),
        eta: o.eta.unwrap_or(0.2),
        branch: o.branch.unwrap_or(if command == Compare { BranchChoice::Both } else { BranchChoice::Minus }),
        e_min: o.e_min.unwrap_or(DEFAULT_WINDOW.0),
        e_max: o.e_max.unwrap_or(DEFAULT_WINDOW.1),
        scan_step: o.scan_step.unwrap_or(DEFAULT_SCAN_STEP),
        tail_depth: o.tail_depth.unwrap_or(cf.tail_depth),
        match_index: o.match_index.unwrap_or(cf.match_index),
        pole_guard: o.pole_guard.unwrap_or(cf.pole_guard),
        n_max: o.n_max.unwrap_or(200),
        root_tol: o.root_tol.unwrap_or(search.root_tol),
        match_tol: o.match_tol.unwrap_or(1e-6),
        energy: o.energy,
        frame: o.frame.unwrap_or(Frame::Transformed),
        seed: o.seed,
        check_fraction: o.check_fraction.unwrap_or(0.0),
        sample_seed: o.sample_seed.unwrap_or(0),
        eta_list: o.eta_list.unwrap_or(default_eta),
        omega_list: o.omega_list.unwrap_or(default_omega),
        delta_list: o.delta_list.unwrap_or(default_delta),
        energy_list: o.energy_list.unwrap_or(default_energy),
        n_list: o.n_list.unwrap_or_else(|| (0..=5).collect()),
        delta_grid: o.delta_grid.unwrap_or_else(|| grid(default_delta_grid)),
        eta_grid: o.eta_grid.unwrap_or_else(|| grid(default_eta_grid)),
        omega_min: o.omega_min.unwrap_or(0.05),
        omega_max: o.omega_max.unwrap_or(20.0),
        input: o.input,
        output: None,
        format: o.format.unwrap_or(default_format),
    };

    ModelParams::new(cfg.omega, cfg.delta, cfg.eta).map_err(model_error)?;
    check(cfg.e_min.is_finite() && cfg.e_max.is_finite() && cfg.e_min < cfg.e_max, || {
        format!("--e-min ({}) must be below --e-max ({})", cfg.e_min, cfg.e_max)
    })?;
    positive("scan-step", cfg.scan_step)?;
    check(cfg.match_index >= 1, || format!("--match-index must be >= 1, got {}", cfg.match_index))?;
    check(cfg.tail_depth >= 10, || format!("--tail-depth must be >= 10, got {}", cfg.tail_depth))?;
    positive("pole-guard", cfg.pole_guard)?;
    positive("root-tol", cfg.root_tol)?;
    positive("match-tol", cfg.match_tol)?;
    check((0.0..=1.0).contains(&cfg.check_fraction), || {
        format!("--check-fraction must lie in [0, 1], got {}", cfg.check_fraction)
    })?;
    check(cfg.omega_min >= 0.0 && cfg.omega_min < cfg.omega_max && cfg.omega_max.is_finite(), || {
        format!("--omega-min ({}) must be non-negative and below --omega-max ({})", cfg.omega_min, cfg.omega_max)
    })?;
    if let Some(e) = cfg.energy {
        check(e.is_finite(), || format!("--energy must be finite, got {e}"))?;
    }
    if let Some(s) = cfg.seed {
        check(s.is_finite(), || format!("--seed must be finite, got {s}"))?;
    }

    match command {
        Oracle | Compare => check(cfg.n_max >= 32, || format!("--n-max must be >= 32, got {}", cfg.n_max))?,
        Eigvec => {
            check(cfg.n_max >= 2, || format!("--n-max must be >= 2, got {}", cfg.n_max))?;
            check(cfg.energy.is_some(), || "eigvec needs --energy".into())?;
        }
        SweepEd => {
            list("eta-list", &cfg.eta_list, true)?;
            list("omega-list", &cfg.omega_list, true)?;
        }
        SweepEe => {
            list("delta-list", &cfg.delta_list, false)?;
            list("omega-list", &cfg.omega_list, true)?;
        }
        SweepOd => {
            list("energy-list", &cfg.energy_list, false)?;
            list("eta-list", &cfg.eta_list, true)?;
        }
        Rwa => check(!cfg.n_list.is_empty(), || "--n is empty".into())?,
        Fit => check(cfg.input.is_some(), || "fit needs --input".into())?,
        Solve => {}
    }
    if matches!(command, SweepEe | Rwa) {
        check(cfg.eta_grid.start >= 0.0, || format!("--eta-grid must start at or above 0, got {}", cfg.eta_grid))?;
    }
    check(cfg.branch != BranchChoice::Both || matches!(command, Solve | Compare), || {
        format!("--branch both is only valid for solve and compare, not {}", command.name())
    })?;
    check(cfg.format == Format::Json || !matches!(command, Compare | Fit), || {
        format!("{} writes JSON only; drop --format csv", command.name())
    })?;

    let output = match (o.output, out_dir) {
        (Some(p), _) => Some(p),
        (None, Some(dir)) => Some(dir.join(format!("{}.{}", command.name(), cfg.format.extension()))),
        (None, None) => None,
    };
    Ok(RunConfig { output, ..cfg })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, ConfigError> {
        let cli = Cli::try_parse_from(std::iter::once("iontrap-cf").chain(args.iter().copied()))
            .map_err(|e| usage(e.to_string()))?;
        resolve(cli.command, cli.opts, None)
    }

    #[test]
    fn solve_flags_and_defaults() {
        let c = parse(&["solve", "--omega", "2", "--delta", "0.2", "--eta", "0.2", "--branch", "minus"]).unwrap();
        assert_eq!((c.omega, c.delta, c.eta), (2.0, 0.2, 0.2));
        assert_eq!(c.branch, BranchChoice::Minus);
        assert_eq!(c.tail_depth, 400);
        assert_eq!(c.match_index, 1);
        assert_eq!((c.e_min, c.e_max), DEFAULT_WINDOW);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.output, None);
    }

    #[test]
    fn negative_eta_names_the_flag() {
        let err = parse(&["solve", "--eta", "-1"]).unwrap_err();
        assert!(err.to_string().contains("--eta"), "{err}");
    }

    #[test]
    fn grid_spec_parsing() {
        let g: GridSpec = "0:0.8:0.02".parse().unwrap();
        assert_eq!(g.values().len(), 41);
        assert_eq!(*g.values().last().unwrap(), 0.8);
        assert!("0:1".parse::<GridSpec>().is_err());
        assert!("1:0:0.1".parse::<GridSpec>().is_err());
        assert!("0:1:0".parse::<GridSpec>().is_err());
        assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
    }

    #[test]
    fn flags_beat_file_beats_defaults() {
        let file: Options = toml::from_str("tail_depth = 800\nmatch_index = 2\ndelta_grid = \"0:1:0.5\"").unwrap();
        let flags = Options { tail_depth: Some(400), ..Options::default() };
        let c = resolve(Command::SweepEd, flags.over(file), None).unwrap();
        assert_eq!(c.tail_depth, 400);
        assert_eq!(c.match_index, 2);
        assert_eq!(c.delta_grid.values(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn unknown_file_key_is_rejected() {
        assert!(toml::from_str::<Options>("tail_dept = 800").is_err());
    }

    #[test]
    fn per_command_defaults() {
        let c = resolve(Command::SweepEe, Options::default(), None).unwrap();
        assert_eq!(c.delta_list, vec![0.2, 1.6, 2.0, 3.0]);
        assert_eq!(c.omega_list, vec![2.0]);
        let c = resolve(Command::Compare, Options::default(), None).unwrap();
        assert_eq!((c.branch, c.format), (BranchChoice::Both, Format::Json));
        let c = resolve(Command::Rwa, Options::default(), Some(Path::new("/tmp/out"))).unwrap();
        assert_eq!(c.eta_grid.start, 0.0);
        assert_eq!(c.output, Some(PathBuf::from("/tmp/out/rwa.csv")));
    }

    #[test]
    fn command_specific_checks() {
        assert!(resolve(Command::Eigvec, Options::default(), None).is_err());
        assert!(resolve(Command::Fit, Options::default(), None).is_err());
        let both = Options { branch: Some(BranchChoice::Both), ..Options::default() };
        assert!(resolve(Command::SweepEe, both, None).is_err());
        let csv = Options { format: Some(Format::Csv), ..Options::default() };
        assert!(resolve(Command::Compare, csv, None).is_err());
        let small = Options { n_max: Some(10), ..Options::default() };
        assert!(resolve(Command::Oracle, small, None).is_err());
    }
}
