//! Three-term recurrence `α_n C_{n+1} + β_n C_n + γ_n C_{n−1} = 0` for the
//! power-series coefficients of the Bargmann-space wavefunction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::Real;
use crate::model::ModelParams;

/// Which exponential prefactor the first spinor combination carries:
/// `Φ₁ = e^{−gξ} φ` (`MinusExp`) or `Φ₁ = e^{+gξ} φ` (`PlusExp`), `ξ = α + g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    MinusExp,
    PlusExp,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::MinusExp, Branch::PlusExp];

    /// Sign `s` of the exponent in `e^{s g ξ}`.
    pub fn exp_sign(self) -> f64 {
        match self {
            Branch::MinusExp => -1.0,
            Branch::PlusExp => 1.0,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Branch::MinusExp => "minus",
            Branch::PlusExp => "plus",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Branch {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "minus" | "minus_exp" | "minusexp" | "-" => Ok(Branch::MinusExp),
            "plus" | "plus_exp" | "plusexp" | "+" => Ok(Branch::PlusExp),
            other => Err(format!("unknown branch '{other}' (expected 'minus' or 'plus')")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecurrenceError {
    #[error("alpha_{0} vanishes: the energy sits on the singular lattice E = eps + 1 + n")]
    AlphaVanishes(usize),
    #[error("gamma_{0} vanishes in the backward sweep")]
    GammaVanishes(usize),
    #[error("coefficient C_{0} overflowed")]
    Overflow(usize),
    #[error("sequence too short: need at least 3 coefficients, got {0}")]
    TooShort(usize),
    #[error("evaluation radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("n_terms must be positive")]
    NoTerms,
}

/// Branch coefficients generic over the scalar type, so that the same code
/// yields derivatives in `energy` or `omega` through dual numbers.
#[inline]
pub(crate) fn coeffs_at<T: Real>(branch: Branch, n: usize, energy: T, omega: T, g: f64, eps: f64) -> (T, T, T) {
    let c = T::constant;
    let nf = n as f64;
    let g2 = g * g;
    let common = energy * energy - c(eps * eps) - omega * omega * c(0.25);
    let alpha = c(2.0 * g * (nf + 1.0)) * (energy - c(eps + 1.0 + nf));
    match branch {
        Branch::MinusExp => {
            let beta = c(nf * nf + 4.0 * nf * g2 + 4.0 * g2 * eps) - energy * c(2.0 * nf + 4.0 * g2) + common;
            let gamma = c(2.0 * g) * (energy - c(eps + nf - 1.0));
            (alpha, beta, gamma)
        }
        Branch::PlusExp => {
            let beta = c(nf * nf - 4.0 * nf * g2 - 4.0 * g2) - energy * c(2.0 * nf) + common;
            let gamma = c(2.0 * g) * (c(nf - eps) - energy);
            (alpha, beta, gamma)
        }
    }
}

/// Coefficients `(α_n, β_n, γ_n)` at trial energy `energy`.
pub fn coeffs(branch: Branch, n: usize, energy: f64, params: &ModelParams) -> RecurrenceCoeffs {
    let (alpha, beta, gamma) = coeffs_at(branch, n, energy, params.omega(), params.g(), params.epsilon());
    RecurrenceCoeffs { alpha, beta, gamma, n, branch }
}

/// Series coefficients `C_0..C_{N−1}` with `C_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSeq {
    pub c: Vec<f64>,
    pub branch: Branch,
    pub energy: f64,
    pub params: ModelParams,
}

impl CoefficientSeq {
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

fn alpha_floor(energy: f64, n: usize) -> f64 {
    1e-13 * (1.0 + energy.abs() + n as f64)
}

/// Forward recurrence from `C_{−1} = 0`, `C_0 = 1`.
///
/// Away from an eigenvalue the forward direction is dominated by the
/// non-minimal solution; see [`minimal_solution`] for the stable variant.
pub fn run_recurrence(
    branch: Branch,
    energy: f64,
    params: &ModelParams,
    n_terms: usize,
) -> Result<CoefficientSeq, RecurrenceError> {
    if n_terms == 0 {
        return Err(RecurrenceError::NoTerms);
    }
    let mut c = Vec::with_capacity(n_terms);
    c.push(1.0);
    let mut prev = 0.0;
    for n in 0..n_terms - 1 {
        let k = coeffs(branch, n, energy, params);
        if k.alpha.abs() < alpha_floor(energy, n) {
            return Err(RecurrenceError::AlphaVanishes(n));
        }
        let cur = c[n];
        let next = -(k.beta * cur + k.gamma * prev) / k.alpha;
        if !next.is_finite() {
            return Err(RecurrenceError::Overflow(n + 1));
        }
        c.push(next);
        prev = cur;
    }
    Ok(CoefficientSeq { c, branch, energy, params: *params })
}

/// Largest relative three-term residual
/// `|α_n C_{n+1} + β_n C_n + γ_n C_{n−1}| / max(|α_n C_{n+1}|, |β_n C_n|, |γ_n C_{n−1}|)`
/// over every row whose three entries are available (row 0 uses `C_{−1} = 0`).
pub fn residual(seq: &CoefficientSeq) -> Result<f64, RecurrenceError> {
    let len = seq.c.len();
    if len < 3 {
        return Err(RecurrenceError::TooShort(len));
    }
    let mut worst = 0.0f64;
    for n in 0..len - 1 {
        let k = coeffs(seq.branch, n, seq.energy, &seq.params);
        let below = if n == 0 { 0.0 } else { seq.c[n - 1] };
        let terms = [k.alpha * seq.c[n + 1], k.beta * seq.c[n], k.gamma * below];
        let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        if scale == 0.0 {
            continue;
        }
        worst = worst.max((terms[0] + terms[1] + terms[2]).abs() / scale);
    }
    Ok(worst)
}

/// Ratio-test summary of a coefficient sequence at radius `ξ*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// `|C_{n+1}| ξ* / |C_n|`, `None` where `C_n = 0`.
    pub ratio_estimates: Vec<Option<f64>>,
    pub first_divergent_index: Option<usize>,
    /// `1 / max |C_{n+1}/C_n|` over the tail past the burn-in index.
    pub radius_estimate: f64,
    pub xi_radius: f64,
    pub burn_in: usize,
    pub margin: f64,
}

pub const DEFAULT_XI_RADIUS: f64 = 4.0;
pub const DEFAULT_MARGIN: f64 = 0.1;

/// [`convergence_report_with`] using margin 0.1 and burn-in at half the length.
pub fn convergence_report(c: &[f64], xi_radius: f64) -> Result<ConvergenceReport, RecurrenceError> {
    convergence_report_with(c, xi_radius, DEFAULT_MARGIN, c.len() / 2)
}

/// Converged iff every tail ratio at index `n ≥ burn_in` is below `1 − margin`.
pub fn convergence_report_with(
    c: &[f64],
    xi_radius: f64,
    margin: f64,
    burn_in: usize,
) -> Result<ConvergenceReport, RecurrenceError> {
    if !(xi_radius > 0.0 && xi_radius.is_finite()) {
        return Err(RecurrenceError::InvalidRadius(xi_radius));
    }
    let ratios: Vec<Option<f64>> = c
        .windows(2)
        .map(|w| if w[0] == 0.0 { None } else { Some(w[1].abs() * xi_radius / w[0].abs()) })
        .collect();
    let limit = 1.0 - margin;
    let mut first_divergent_index = None;
    let mut tail_max = 0.0f64;
    for (n, r) in ratios.iter().enumerate().skip(burn_in) {
        if let Some(r) = *r {
            if (r >= limit || !r.is_finite()) && first_divergent_index.is_none() {
                first_divergent_index = Some(n);
            }
            tail_max = tail_max.max(r / xi_radius);
        }
    }
    let radius_estimate = if tail_max > 0.0 { 1.0 / tail_max } else { f64::INFINITY };
    Ok(ConvergenceReport {
        converged: first_divergent_index.is_none(),
        ratio_estimates: ratios,
        first_divergent_index,
        radius_estimate,
        xi_radius,
        burn_in,
        margin,
    })
}

/// Minimal (entire) solution of the recurrence, `C_0 = 1`, length `n_terms`.
///
/// Forward recurrence is used up to a join index `j`; above it the solution
/// comes from a backward (Miller) sweep started at `n_terms + extra` and
/// rescaled to match at `j`. The join is the first local maximum of the
/// backward solution seen from the top. At an eigenvalue both pieces are the
/// same solution, so the stitched sequence satisfies every row of the
/// recurrence; away from one the rows next to `j` fail, which makes
/// [`residual`] on this sequence a direct eigenvalue test.
pub fn minimal_solution(
    branch: Branch,
    energy: f64,
    params: &ModelParams,
    n_terms: usize,
    extra: usize,
) -> Result<CoefficientSeq, RecurrenceError> {
    if n_terms == 0 {
        return Err(RecurrenceError::NoTerms);
    }
    let top = n_terms + extra.max(10);
    let mut back = vec![0.0f64; top + 1];
    back[top - 1] = 1.0;
    for k in (1..top).rev() {
        let q = coeffs(branch, k, energy, params);
        if q.gamma.abs() < 1e-300 {
            return Err(RecurrenceError::GammaVanishes(k));
        }
        let value = -(q.alpha * back[k + 1] + q.beta * back[k]) / q.gamma;
        back[k - 1] = value;
        if value.abs() > 1e100 {
            for b in &mut back[k - 1..] {
                *b *= 1e-100;
            }
        }
    }
    let mut join = 0;
    for k in (1..top).rev() {
        if back[k - 1].abs() < back[k].abs() {
            join = k;
            break;
        }
    }

    let forward = run_recurrence(branch, energy, params, join.min(n_terms - 1) + 1)?;
    let mut c = forward.c;
    if join + 1 < n_terms {
        let scale = c[join] / back[join];
        if !scale.is_finite() {
            return Err(RecurrenceError::Overflow(join));
        }
        c.extend(back[join + 1..n_terms].iter().map(|b| b * scale));
    }
    Ok(CoefficientSeq { c, branch, energy, params: *params })
}
