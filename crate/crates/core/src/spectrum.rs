//! Eigenenergies as zeros of the continued-fraction condition, and the
//! corresponding eigenfunctions in the Fock basis of either frame.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contfrac::{self, CfConfig, CfError, CfEval};
use crate::model::{self, basis_index, FockSpinMatrix, ModelError, ModelParams, Spin};
use crate::recurrence::{self, Branch, ConvergenceReport, RecurrenceError};
use crate::scan::{self, ScanSettings};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("invalid energy window [{0}, {1}]")]
    InvalidRange(f64, f64),
    #[error("scan step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("invalid bracket: {0}")]
    BracketInvalid(String),
    #[error("the spinor construction divides by omega, which is zero")]
    OmegaZero,
    #[error("truncated tail carries {mass:e} of the norm (tolerance {tol:e})")]
    TailMassExceeded { mass: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Recurrence(#[from] RecurrenceError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Tolerances and diagnostics settings for root finding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchOptions {
    pub root_tol: f64,
    pub merge_tol: f64,
    /// A critical point of the characteristic function closer than this to
    /// zero counts as a double root.
    pub touch_tol: f64,
    /// Roots whose match-index spread exceeds this are flagged.
    pub spread_tol: f64,
    /// Length of the coefficient sequence behind each root's convergence report.
    pub series_terms: usize,
    pub xi_radius: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            root_tol: 1e-10,
            merge_tol: 1e-8,
            touch_tol: 1e-6,
            spread_tol: 1e-9,
            series_terms: 120,
            xi_radius: recurrence::DEFAULT_XI_RADIUS,
        }
    }
}

pub const DEFAULT_WINDOW: (f64, f64) = (-5.0, 12.0);
pub const DEFAULT_SCAN_STEP: f64 = 1e-3;
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootDiagnostics {
    pub energy: f64,
    /// Energy-equivalent residual: the Newton step `|F/F'|` of the pole-free
    /// characteristic function, or the touching distance for a double root.
    pub final_residual: f64,
    pub bracket: (f64, f64),
    /// Largest energy-equivalent residual `|f_m/f_m'|` over match indices 1..=3.
    pub match_index_spread: f64,
    pub convergence: Option<ConvergenceReport>,
    /// Relative recurrence residual of the minimal coefficient sequence.
    pub recurrence_residual: Option<f64>,
    pub branch: Branch,
    pub multiplicity: u8,
    pub cf: CfEval,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub roots: Vec<RootDiagnostics>,
    pub params: ModelParams,
    pub branch: Branch,
    pub scan_range: (f64, f64),
    pub cfg: CfConfig,
}

impl Spectrum {
    pub fn energies(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.energy).collect()
    }

    /// Energies with double roots listed twice.
    pub fn energies_with_multiplicity(&self) -> Vec<f64> {
        self.roots.iter().flat_map(|r| std::iter::repeat_n(r.energy, r.multiplicity as usize)).collect()
    }
}

fn check_window(e_min: f64, e_max: f64, step: f64) -> Result<(), SpectrumError> {
    if !(e_min.is_finite() && e_max.is_finite() && e_min < e_max) {
        return Err(SpectrumError::InvalidRange(e_min, e_max));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(SpectrumError::InvalidStep(step));
    }
    Ok(())
}

/// Roots in `[e_min, e_max]` with default [`SearchOptions`].
pub fn find_roots(
    branch: Branch,
    params: &ModelParams,
    e_min: f64,
    e_max: f64,
    scan_step: f64,
    cfg: &CfConfig,
) -> Result<Spectrum, SpectrumError> {
    find_roots_with(branch, params, e_min, e_max, scan_step, cfg, &SearchOptions::default())
}

/// Scans the pole-free characteristic function on a grid of spacing
/// `scan_step`, refines each bracket by bisection and attaches diagnostics.
/// Roots that fail a diagnostic are flagged, not dropped.
pub fn find_roots_with(
    branch: Branch,
    params: &ModelParams,
    e_min: f64,
    e_max: f64,
    scan_step: f64,
    cfg: &CfConfig,
    opts: &SearchOptions,
) -> Result<Spectrum, SpectrumError> {
    check_window(e_min, e_max, scan_step)?;
    cfg.validate()?;
    let settings = ScanSettings {
        lo: e_min,
        hi: e_max,
        step: scan_step,
        root_tol: opts.root_tol,
        merge_tol: opts.merge_tol,
        touch_tol: opts.touch_tol,
    };
    let zeros = scan::find_zeros(|e| contfrac::characteristic_with_slope(branch, e, params, cfg), &settings);
    let roots = zeros
        .iter()
        .map(|z| diagnose(branch, z.x, z.bracket, z.multiplicity, z.touch_gap, params, cfg, opts))
        .collect();
    Ok(Spectrum { roots, params: *params, branch, scan_range: (e_min, e_max), cfg: *cfg })
}

#[allow(clippy::too_many_arguments)]
fn diagnose(
    branch: Branch,
    energy: f64,
    bracket: (f64, f64),
    multiplicity: u8,
    touch_gap: f64,
    params: &ModelParams,
    cfg: &CfConfig,
    opts: &SearchOptions,
) -> RootDiagnostics {
    let final_residual = if multiplicity > 1 {
        touch_gap
    } else {
        let (f, df) = contfrac::characteristic_with_slope(branch, energy, params, cfg);
        if f == 0.0 {
            0.0
        } else {
            (f / df).abs()
        }
    };
    let match_index_spread = (1..=3)
        .map(|m| contfrac::energy_residual(branch, energy, params, &cfg.with_match_index(m)))
        .fold(0.0f64, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    let cf = contfrac::char_residual(branch, energy, params, cfg).expect("validated config");
    let seq = recurrence::minimal_solution(branch, energy, params, opts.series_terms, opts.series_terms).ok();
    let convergence = seq.as_ref().and_then(|s| recurrence::convergence_report(&s.c, opts.xi_radius).ok());
    let recurrence_residual = seq.as_ref().and_then(|s| recurrence::residual(s).ok());
    let flagged = match_index_spread > opts.spread_tol
        || final_residual > opts.root_tol
        || !convergence.as_ref().is_some_and(|c| c.converged);
    RootDiagnostics {
        energy,
        final_residual,
        bracket,
        match_index_spread,
        convergence,
        recurrence_residual,
        branch,
        multiplicity,
        cf,
        flagged,
    }
}

/// Refines a root inside `bracket` to width `tol`.
///
/// Neither end may sit on a pole of the continued-fraction residual, and the
/// pole-free characteristic function must change sign across the bracket.
/// A residual sign change without a characteristic sign change is a pole.
pub fn refine_root(
    branch: Branch,
    bracket: (f64, f64),
    params: &ModelParams,
    cfg: &CfConfig,
    tol: f64,
) -> Result<RootDiagnostics, SpectrumError> {
    let (a, b) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    let opts = SearchOptions { root_tol: tol.max(f64::EPSILON), ..SearchOptions::default() };
    let ra = contfrac::char_residual(branch, a, params, cfg)?;
    let rb = contfrac::char_residual(branch, b, params, cfg)?;
    if ra.pole_flag || rb.pole_flag {
        return Err(SpectrumError::BracketInvalid("pole at a bracket end".into()));
    }
    if b - a < tol {
        let mid = 0.5 * (a + b);
        return Ok(diagnose(branch, mid, (a, b), 1, 0.0, params, cfg, &opts));
    }
    let fa = contfrac::characteristic(branch, a, params, cfg);
    let fb = contfrac::characteristic(branch, b, params, cfg);
    if fa.signum() == fb.signum() {
        let reason = if ra.residual.signum() != rb.residual.signum() {
            "residual sign change comes from a pole"
        } else {
            "residual has the same sign at both ends"
        };
        return Err(SpectrumError::BracketInvalid(reason.into()));
    }
    let (x, br) = scan::bisect(|e| contfrac::characteristic(branch, e, params, cfg), a, b, fa, fb, tol);
    Ok(diagnose(branch, x, br, 1, 0.0, params, cfg, &opts))
}

/// Series eigenfunction at a refined root.
///
/// With `ξ = α + g` and `s = ∓1` for `MinusExp`/`PlusExp`, the two spinor
/// components in the Bargmann representation are
/// `Ψ_up(α) = e^{sgξ} Σ up[n] ξⁿ` and `Ψ_down(α) = e^{sgξ} Σ down[n] ξⁿ`,
/// with `up = (C + Φ₂)/2`, `down = (C − Φ₂)/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSolution {
    pub branch: Branch,
    pub energy: f64,
    pub params: ModelParams,
    pub c: Vec<f64>,
    pub phi2: Vec<f64>,
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub convergence: Option<ConvergenceReport>,
    pub recurrence_residual: f64,
}

/// Minimal coefficient sequence and spinor coefficients at `energy`.
///
/// `Φ₂` follows from the first-order equations: for `MinusExp`
/// `Φ₂ₙ = −(2/Ω)(n − E + ε) Cₙ`, for `PlusExp`
/// `Φ₂ₙ = −(2/Ω)[(n − E + ε) Cₙ + 2g Cₙ₋₁]`.
pub fn series_solution(
    branch: Branch,
    energy: f64,
    params: &ModelParams,
    n_terms: usize,
) -> Result<SeriesSolution, SpectrumError> {
    let omega = params.omega();
    if omega == 0.0 {
        return Err(SpectrumError::OmegaZero);
    }
    let seq = recurrence::minimal_solution(branch, energy, params, n_terms, (n_terms / 2).max(100))?;
    let (g, eps) = (params.g(), params.epsilon());
    let c = seq.c;
    let phi2: Vec<f64> = (0..c.len())
        .map(|n| {
            let mut v = (n as f64 - energy + eps) * c[n];
            if branch == Branch::PlusExp && n > 0 {
                v += 2.0 * g * c[n - 1];
            }
            -2.0 / omega * v
        })
        .collect();
    let up = c.iter().zip(&phi2).map(|(a, b)| 0.5 * (a + b)).collect();
    let down = c.iter().zip(&phi2).map(|(a, b)| 0.5 * (a - b)).collect();
    let check = recurrence::CoefficientSeq { c: c.clone(), branch, energy, params: *params };
    let recurrence_residual = if c.len() >= 3 { recurrence::residual(&check)? } else { 0.0 };
    let convergence = recurrence::convergence_report(&c, recurrence::DEFAULT_XI_RADIUS).ok();
    Ok(SeriesSolution { branch, energy, params: *params, c, phi2, up, down, convergence, recurrence_residual })
}

/// Two-component state in the Fock basis, one amplitude list per spin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockSpinor {
    pub up: Vec<Complex64>,
    pub down: Vec<Complex64>,
    pub energy: f64,
    /// Share of the norm discarded by truncation.
    pub tail_mass: f64,
}

impl FockSpinor {
    pub fn n_max(&self) -> usize {
        self.up.len()
    }

    pub fn norm(&self) -> f64 {
        self.up.iter().chain(&self.down).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Flat vector in the shared `2n + s` ordering.
    pub fn to_vector(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); 2 * self.n_max()];
        for n in 0..self.n_max() {
            v[basis_index(n, Spin::Up)] = self.up[n];
            v[basis_index(n, Spin::Down)] = self.down[n];
        }
        v
    }

    pub fn from_vector(v: &[Complex64], energy: f64) -> Self {
        let n_max = v.len() / 2;
        FockSpinor {
            up: (0..n_max).map(|n| v[basis_index(n, Spin::Up)]).collect(),
            down: (0..n_max).map(|n| v[basis_index(n, Spin::Down)]).collect(),
            energy,
            tail_mass: 0.0,
        }
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// `ψ = e^{sg²} e^{sg a†} e^{g a} Σ cₙ √(n!) |n⟩` for one spin component,
/// which is the Fock-space image of `e^{sg(α+g)} Σ cₙ (α+g)ⁿ` under
/// `αᵏ ↦ √(k!) |k⟩`. Returns amplitudes for `k < len`.
fn bargmann_to_fock(c: &[f64], g: f64, s: f64, len: usize, lnf: &[f64]) -> Vec<f64> {
    let terms = c.len();
    if g == 0.0 {
        return (0..len).map(|k| if k < terms { c[k] * (0.5 * lnf[k]).exp() } else { 0.0 }).collect();
    }
    let ln_g = g.ln();
    // w_j = Σ_{n≥j} g^{n−j}/(n−j)! · n!/√(j!) · c_n
    let w: Vec<f64> = (0..terms)
        .map(|j| {
            (j..terms)
                .filter(|&n| c[n] != 0.0)
                .map(|n| {
                    let ln = (n - j) as f64 * ln_g - lnf[n - j] + lnf[n] - 0.5 * lnf[j] + c[n].abs().ln();
                    c[n].signum() * ln.exp()
                })
                .sum()
        })
        .collect();
    let prefactor = (s * g * g).exp();
    (0..len)
        .map(|k| {
            let total: f64 = (0..=k.min(terms - 1))
                .filter(|&j| w[j] != 0.0)
                .map(|j| {
                    let d = k - j;
                    let sign = if s < 0.0 && d % 2 == 1 { -1.0 } else { 1.0 };
                    let ln = d as f64 * ln_g - lnf[d] + 0.5 * (lnf[k] - lnf[j]) + w[j].abs().ln();
                    sign * w[j].signum() * ln.exp()
                })
                .sum();
            prefactor * total
        })
        .collect()
}

/// [`to_fock_with`] at the default tail tolerance.
pub fn to_fock(sol: &SeriesSolution, n_max: usize) -> Result<FockSpinor, SpectrumError> {
    to_fock_with(sol, n_max, DEFAULT_TAIL_TOL)
}

/// Fock-basis amplitudes of the series eigenfunction, normalized over
/// `n < n_max`; the norm share beyond `n_max` is reported as `tail_mass`.
pub fn to_fock_with(sol: &SeriesSolution, n_max: usize, tail_tol: f64) -> Result<FockSpinor, SpectrumError> {
    if n_max == 0 {
        return Err(SpectrumError::DimensionMismatch { expected: 1, got: 0 });
    }
    let g = sol.params.g();
    let s = sol.branch.exp_sign();
    let extended = n_max.max(sol.up.len()) + 60;
    let lnf = ln_factorials(extended + sol.up.len());
    let up = bargmann_to_fock(&sol.up, g, s, extended, &lnf);
    let down = bargmann_to_fock(&sol.down, g, s, extended, &lnf);
    let mass = |range: std::ops::Range<usize>| -> f64 { range.map(|k| up[k] * up[k] + down[k] * down[k]).sum() };
    let kept = mass(0..n_max);
    let tail = mass(n_max..extended);
    let tail_mass = tail / (kept + tail);
    if tail_mass.is_nan() || tail_mass > tail_tol {
        return Err(SpectrumError::TailMassExceeded { mass: tail_mass, tol: tail_tol });
    }
    let scale = 1.0 / kept.sqrt();
    Ok(FockSpinor {
        up: up[..n_max].iter().map(|x| Complex64::new(x * scale, 0.0)).collect(),
        down: down[..n_max].iter().map(|x| Complex64::new(x * scale, 0.0)).collect(),
        energy: sol.energy,
        tail_mass,
    })
}

fn phase(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn pad(v: &[Complex64], n_max: usize) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_fn(n_max, |k, _| v.get(k).copied().unwrap_or_default())
}

/// Share of the norm in the top quarter of the Fock range.
fn edge_mass(up: &[Complex64], down: &[Complex64]) -> f64 {
    let n = up.len();
    let total: f64 = up.iter().chain(down).map(|z| z.norm_sqr()).sum();
    let edge: f64 = up[n - n / 4..].iter().chain(&down[n - n / 4..]).map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        0.0
    } else {
        edge / total
    }
}

fn frame_inputs(spinor: &FockSpinor, params: &ModelParams, n_max: usize) -> Result<DMatrix<Complex64>, SpectrumError> {
    if spinor.up.len() > n_max || spinor.down.len() != spinor.up.len() {
        return Err(SpectrumError::DimensionMismatch { expected: n_max, got: spinor.up.len() });
    }
    Ok(model::displacement_matrix(params.eta() / 2.0, n_max)?)
}

/// [`to_original_frame_with`] at the default tail tolerance.
pub fn to_original_frame(spinor: &FockSpinor, params: &ModelParams, n_max: usize) -> Result<FockSpinor, SpectrumError> {
    to_original_frame_with(spinor, params, n_max, DEFAULT_TAIL_TOL)
}

/// Applies `U†` to a transformed-frame spinor:
/// `up = D(P†ψ_up − P†ψ_down)/√2`, `down = D†(P†ψ_up + P†ψ_down)/√2`,
/// with `P = e^{iπa†a/2}` and `D = e^{iη x̂/2}` truncated to `n_max`.
/// The norm share in the top quarter of the Fock range is the tail diagnostic.
pub fn to_original_frame_with(
    spinor: &FockSpinor,
    params: &ModelParams,
    n_max: usize,
    tail_tol: f64,
) -> Result<FockSpinor, SpectrumError> {
    let d = frame_inputs(spinor, params, n_max)?;
    let up = pad(&spinor.up, n_max);
    let down = pad(&spinor.down, n_max);
    let norm = std::f64::consts::FRAC_1_SQRT_2;
    let diff = nalgebra::DVector::from_fn(n_max, |k, _| phase(k).conj() * (up[k] - down[k]) * norm);
    let sum = nalgebra::DVector::from_fn(n_max, |k, _| phase(k).conj() * (up[k] + down[k]) * norm);
    let new_up: Vec<Complex64> = (&d * diff).iter().copied().collect();
    let new_down: Vec<Complex64> = (d.adjoint() * sum).iter().copied().collect();
    finish(new_up, new_down, spinor, tail_tol)
}

/// Applies `U`, the inverse of [`to_original_frame`].
pub fn from_original_frame(
    spinor: &FockSpinor,
    params: &ModelParams,
    n_max: usize,
    tail_tol: f64,
) -> Result<FockSpinor, SpectrumError> {
    let d = frame_inputs(spinor, params, n_max)?;
    let up = pad(&spinor.up, n_max);
    let down = pad(&spinor.down, n_max);
    let d_dag_up = d.adjoint() * up;
    let d_down = &d * down;
    let norm = std::f64::consts::FRAC_1_SQRT_2;
    let new_up = (0..n_max).map(|k| phase(k) * (d_dag_up[k] + d_down[k]) * norm).collect();
    let new_down = (0..n_max).map(|k| phase(k) * (d_down[k] - d_dag_up[k]) * norm).collect();
    finish(new_up, new_down, spinor, tail_tol)
}

fn finish(up: Vec<Complex64>, down: Vec<Complex64>, src: &FockSpinor, tail_tol: f64) -> Result<FockSpinor, SpectrumError> {
    let edge = edge_mass(&up, &down);
    if edge.is_nan() || edge > tail_tol {
        return Err(SpectrumError::TailMassExceeded { mass: edge, tol: tail_tol });
    }
    Ok(FockSpinor { up, down, energy: src.energy, tail_mass: src.tail_mass.max(edge) })
}

/// `‖Hψ − Eψ‖₂ / ‖ψ‖₂`.
pub fn eigen_residual(spinor: &FockSpinor, h: &FockSpinMatrix, energy: f64) -> Result<f64, SpectrumError> {
    if spinor.up.len() != h.n_max() || spinor.down.len() != h.n_max() {
        return Err(SpectrumError::DimensionMismatch { expected: h.n_max(), got: spinor.up.len() });
    }
    let v = spinor.to_vector();
    let hv = h.apply(&v);
    let r: f64 = hv.iter().zip(&v).map(|(a, b)| (a - b * energy).norm_sqr()).sum::<f64>().sqrt();
    Ok(r / spinor.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::jacobi_eigen;
    use crate::model::{build_transformed_hamiltonian, displacement_matrix, transformed_hamiltonian_real};

    fn p(omega: f64, delta: f64, eta: f64) -> ModelParams {
        ModelParams::new(omega, delta, eta).unwrap()
    }

    fn oracle(params: &ModelParams, n_max: usize) -> Vec<f64> {
        jacobi_eigen(&transformed_hamiltonian_real(params, n_max).unwrap(), false, 30).unwrap().values
    }

    #[test]
    fn weak_coupling_roots_follow_special_case() {
        let params = p(2.0, 2.0, 1e-6);
        let spec = find_roots(Branch::MinusExp, &params, -3.0, 8.0, 1e-3, &CfConfig::default()).unwrap();
        let r = 2f64.sqrt();
        let mut expected: Vec<f64> =
            (0..12).flat_map(|n| [n as f64 - r, n as f64 + r]).filter(|e| (-3.0..=8.0).contains(e)).collect();
        expected.sort_by(f64::total_cmp);
        let got = spec.energies_with_multiplicity();
        assert_eq!(got.len(), expected.len(), "{got:?}");
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn roots_match_dense_diagonalization() {
        let params = p(2.0, 0.2, 0.2);
        let reference = oracle(&params, 120);
        for branch in Branch::ALL {
            let spec = find_roots(branch, &params, -2.0, 8.0, 1e-3, &CfConfig::default()).unwrap();
            assert!(spec.roots.len() >= 15);
            for w in spec.roots.windows(2) {
                assert!(w[1].energy - w[0].energy >= 1e-8);
            }
            for root in &spec.roots {
                let nearest = reference.iter().map(|e| (e - root.energy).abs()).fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-6, "{branch:?} root {} off by {nearest}", root.energy);
                assert!(root.final_residual <= 1e-10);
                assert!(root.bracket.0 <= root.energy && root.energy <= root.bracket.1);
            }
        }
    }

    #[test]
    fn empty_window() {
        let params = p(2.0, 0.2, 0.2);
        // Lowest eigenvalue is near −1; nothing below −3.
        let spec = find_roots(Branch::MinusExp, &params, -4.0, -3.0, 1e-3, &CfConfig::default()).unwrap();
        assert!(spec.roots.is_empty());
        assert!(find_roots(Branch::MinusExp, &params, 1.0, 1.0, 1e-3, &CfConfig::default()).is_err());
        assert!(find_roots(Branch::MinusExp, &params, 0.0, 1.0, 0.0, &CfConfig::default()).is_err());
    }

    #[test]
    fn scan_step_halving_keeps_root_set() {
        let params = p(4.0, 1.6, 0.4);
        let cfg = CfConfig::default();
        let a = find_roots(Branch::MinusExp, &params, -3.0, 5.0, 2e-3, &cfg).unwrap().energies();
        let b = find_roots(Branch::MinusExp, &params, -3.0, 5.0, 1e-3, &cfg).unwrap().energies();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn refine_special_case_bracket() {
        let params = p(2.0, 2.0, 1e-8);
        let target = 2.0 + 2f64.sqrt();
        let d = refine_root(Branch::MinusExp, (target - 0.05, target + 0.05), &params, &CfConfig::default(), 1e-12)
            .unwrap();
        assert!((d.energy - target).abs() < 1e-10);
    }

    #[test]
    fn refine_rejects_pole_and_same_sign() {
        let params = p(2.0, 0.2, 0.4);
        let cfg = CfConfig::default();
        let (g, eps) = (params.g(), params.epsilon());
        let b = -4.0 * g * g;
        let c = 4.0 * g * g * eps - eps * eps - 1.0;
        let pole = (-b + (b * b - 4.0 * c).sqrt()) / 2.0;
        let r = refine_root(Branch::MinusExp, (pole - 1e-4, pole + 1e-4), &params, &cfg, 1e-10);
        assert!(matches!(r, Err(SpectrumError::BracketInvalid(_))), "{r:?}");
        let r = refine_root(Branch::MinusExp, (-4.0, -3.5), &params, &cfg, 1e-10);
        assert!(matches!(r, Err(SpectrumError::BracketInvalid(_))));
    }

    #[test]
    fn refine_tight_bracket_returns_midpoint() {
        let params = p(2.0, 0.2, 0.2);
        let d = refine_root(Branch::MinusExp, (0.5, 0.5 + 1e-12), &params, &CfConfig::default(), 1e-10).unwrap();
        assert_eq!(d.energy, 0.5 + 0.5e-12);
    }

    #[test]
    fn series_rejects_zero_omega() {
        assert_eq!(series_solution(Branch::MinusExp, 0.0, &p(0.0, 0.2, 0.2), 50), Err(SpectrumError::OmegaZero));
    }

    #[test]
    fn eigenfunctions_solve_transformed_hamiltonian() {
        let params = p(2.0, 2.0, 0.2);
        let n_max = 80;
        let h = build_transformed_hamiltonian(&params, n_max).unwrap();
        for branch in Branch::ALL {
            let spec = find_roots(branch, &params, -2.0, 4.0, 1e-3, &CfConfig::default()).unwrap();
            assert!(!spec.roots.is_empty());
            for root in &spec.roots {
                let sol = series_solution(branch, root.energy, &params, 80).unwrap();
                assert!(sol.recurrence_residual <= 1e-10, "{}", sol.recurrence_residual);
                let psi = to_fock(&sol, n_max).unwrap();
                assert!((psi.norm() - 1.0).abs() < 1e-12);
                let r = eigen_residual(&psi, &h, root.energy).unwrap();
                assert!(r < 1e-8, "{branch:?} E={} residual {r}", root.energy);
                let off = eigen_residual(&psi, &h, root.energy + 0.1).unwrap();
                assert!(off >= 0.05);
            }
        }
    }

    #[test]
    fn undisplaced_single_term() {
        let params = p(2.0, 0.0, 0.0);
        let sol = SeriesSolution {
            branch: Branch::MinusExp,
            energy: 1.0,
            params,
            c: vec![1.0],
            phi2: vec![0.0],
            up: vec![3.0],
            down: vec![4.0],
            convergence: None,
            recurrence_residual: 0.0,
        };
        let psi = to_fock(&sol, 5).unwrap();
        assert!((psi.up[0].re - 0.6).abs() < 1e-15 && (psi.down[0].re - 0.8).abs() < 1e-15);
        assert!(psi.up[1..].iter().chain(&psi.down[1..]).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn exponential_prefactor_is_a_coherent_state() {
        // e^{sg(α+g)}·1 is a coherent state of real amplitude s·g, which equals
        // i^{−k}⟨k|exp(i s g x̂)|0⟩.
        let params = p(2.0, 0.0, 0.2);
        for branch in Branch::ALL {
            let s = branch.exp_sign();
            let sol = SeriesSolution {
                branch,
                energy: 0.0,
                params,
                c: vec![1.0],
                phi2: vec![1.0],
                up: vec![1.0],
                down: vec![0.0],
                convergence: None,
                recurrence_residual: 0.0,
            };
            let psi = to_fock(&sol, 30).unwrap();
            let d = displacement_matrix(s * params.g(), 60).unwrap();
            for k in 0..30 {
                let expected = phase(k).conj() * d[(k, 0)];
                assert!((psi.up[k] - expected).norm() < 1e-13, "{branch:?} k={k}");
            }
        }
    }

    #[test]
    fn frame_round_trip_and_carrier_spinor() {
        let params = p(2.0, 0.6, 0.3);
        let n_max = 60;
        let mut up = vec![Complex64::new(0.0, 0.0); n_max];
        let mut down = up.clone();
        up[2] = Complex64::new(0.6, 0.0);
        down[3] = Complex64::new(0.0, 0.8);
        let psi = FockSpinor { up, down, energy: 0.0, tail_mass: 0.0 };
        let there = to_original_frame(&psi, &params, n_max).unwrap();
        let back = from_original_frame(&there, &params, n_max, 1e-8).unwrap();
        for k in 0..n_max {
            assert!((back.up[k] - psi.up[k]).norm() < 1e-10);
            assert!((back.down[k] - psi.down[k]).norm() < 1e-10);
        }

        // Resonant, decoupled: transformed spinors (1 ± 1, 1 ∓ 1)|n⟩ map to (1, ±1)|n⟩.
        let params = p(2.0, 0.0, 0.0);
        for sign in [1.0, -1.0] {
            let n = 3;
            let mut up = vec![Complex64::new(0.0, 0.0); 10];
            let mut down = up.clone();
            up[n] = Complex64::new(1.0 + sign, 0.0);
            down[n] = Complex64::new(1.0 - sign, 0.0);
            let orig = to_original_frame(&FockSpinor { up, down, energy: 0.0, tail_mass: 0.0 }, &params, 10).unwrap();
            let ratio = orig.down[n] / orig.up[n];
            assert!((ratio - Complex64::new(sign, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn oracle_eigenvector_residual() {
        let params = p(2.0, 0.2, 0.2);
        let m = transformed_hamiltonian_real(&params, 40).unwrap();
        let eig = jacobi_eigen(&m, true, 30).unwrap();
        let v = eig.vectors.unwrap();
        let col: Vec<Complex64> = v.column(0).iter().map(|x| Complex64::new(*x, 0.0)).collect();
        let psi = FockSpinor::from_vector(&col, eig.values[0]);
        let h = build_transformed_hamiltonian(&params, 40).unwrap();
        assert!(eigen_residual(&psi, &h, eig.values[0]).unwrap() <= 1e-10);
        let short = FockSpinor { up: psi.up[..10].to_vec(), down: psi.down[..10].to_vec(), ..psi };
        assert!(eigen_residual(&short, &h, 0.0).is_err());
    }

    #[test]
    fn spread_is_small_at_low_roots() {
        let params = p(2.0, 0.2, 0.2);
        let spec = find_roots(Branch::MinusExp, &params, -2.0, 3.0, 1e-3, &CfConfig::default()).unwrap();
        for root in &spec.roots {
            assert!(root.match_index_spread <= 1e-9, "{} {}", root.energy, root.match_index_spread);
            assert!(!root.flagged);
        }
    }
}
