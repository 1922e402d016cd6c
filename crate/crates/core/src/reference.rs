//! Closed-form reference results and the dense-diagonalization oracle.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::model::{self, ModelError, ModelParams};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceError {
    #[error("omega must be positive for the special-case eigenvector")]
    OmegaZero,
    #[error("oracle truncation must be at least 32, got {0}")]
    TruncationTooSmall(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Decoupled (`g = 0`) levels `(n + R, n − R)` with `R = √(Ω²/4 + ε²)`.
pub fn special_case_energies(n: usize, omega: f64, epsilon: f64) -> (f64, f64) {
    let r = (omega * omega / 4.0 + epsilon * epsilon).sqrt();
    (n as f64 + r, n as f64 - r)
}

/// Decoupled eigenvector for the `E = n ± R` level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialCaseEigenvector {
    /// Transformed-frame (up, down) amplitudes of `|n⟩`, unnormalized.
    pub a: f64,
    pub b: f64,
    /// Original-frame (up, down) amplitudes, normalized, up to the phase `i^{−n}`.
    pub original: [f64; 2],
}

/// With `R = √(Ω²/4 + ε²)` and sign `σ = ±1`:
/// `A = 1 + σ 2R/Ω − 2ε/Ω`, `B = 1 − σ 2R/Ω + 2ε/Ω`, which is the series
/// spinor at `g = 0` and an exact eigenvector of the 2×2 block
/// `[[n + Ω/2, ε], [ε, n − Ω/2]]`. In the original frame this is
/// `∝ ((2/Ω)(σR − ε), 1)`.
pub fn special_case_eigenvector(omega: f64, epsilon: f64, sign: f64) -> Result<SpecialCaseEigenvector, ReferenceError> {
    if omega == 0.0 {
        return Err(ReferenceError::OmegaZero);
    }
    let s = if sign < 0.0 { -1.0 } else { 1.0 };
    let r = (omega * omega / 4.0 + epsilon * epsilon).sqrt();
    let a = 1.0 + s * 2.0 * r / omega - 2.0 * epsilon / omega;
    let b = 1.0 - s * 2.0 * r / omega + 2.0 * epsilon / omega;
    let (up, down) = (a - b, a + b);
    let norm = (up * up + down * down).sqrt();
    Ok(SpecialCaseEigenvector { a, b, original: [up / norm, down / norm] })
}

/// `E±_n = (2n+1)/4 + η²/4 ± (1/4)√(4η²(n+1) + 1)`.
///
/// Rotating-wave levels of the transformed model, valid only at `Ω = 2`.
pub fn rwa_energies(n: usize, eta: f64) -> (f64, f64) {
    let base = (2 * n + 1) as f64 / 4.0 + eta * eta / 4.0;
    let split = 0.25 * (4.0 * eta * eta * (n + 1) as f64 + 1.0).sqrt();
    (base + split, base - split)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSpectrum {
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Number of leading eigenvalues trusted against truncation (`n_max / 4`).
    pub interior_len: usize,
    pub n_max: usize,
    pub params: ModelParams,
    #[serde(skip)]
    pub vectors: Option<DMatrix<f64>>,
    pub sweeps: usize,
}

impl OracleSpectrum {
    pub fn interior(&self) -> &[f64] {
        &self.eigenvalues[..self.interior_len]
    }
}

fn oracle(params: &ModelParams, n_max: usize, with_vectors: bool) -> Result<OracleSpectrum, ReferenceError> {
    if n_max < 32 {
        return Err(ReferenceError::TruncationTooSmall(n_max));
    }
    let m = model::transformed_hamiltonian_real(params, n_max)?;
    let eig = linalg::jacobi_eigen(&m, with_vectors, linalg::DEFAULT_MAX_SWEEPS)?;
    Ok(OracleSpectrum {
        eigenvalues: eig.values,
        interior_len: n_max / 4,
        n_max,
        params: *params,
        vectors: eig.vectors,
        sweeps: eig.sweeps,
    })
}

/// Eigenvalues of the truncated transformed Hamiltonian.
pub fn oracle_diagonalize(params: &ModelParams, n_max: usize) -> Result<OracleSpectrum, ReferenceError> {
    oracle(params, n_max, false)
}

/// As [`oracle_diagonalize`], keeping the eigenvectors (columns, `2n + s` rows).
pub fn oracle_eigensystem(params: &ModelParams, n_max: usize) -> Result<OracleSpectrum, ReferenceError> {
    oracle(params, n_max, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub cf_root: f64,
    pub oracle_eigenvalue: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchReport {
    pub pairs: Vec<MatchPair>,
    pub unmatched_cf: Vec<f64>,
    /// Interior oracle eigenvalues inside the scan window left without a partner.
    pub unmatched_oracle_interior: Vec<f64>,
    pub tol: f64,
}

impl MatchReport {
    pub fn max_difference(&self) -> f64 {
        self.pairs.iter().fold(0.0, |m, p| m.max(p.difference))
    }
}

/// Greedy one-to-one matching, closest pairs first. A root of multiplicity
/// `k` may take up to `k` oracle partners.
pub fn match_roots(spectrum: &Spectrum, oracle: &OracleSpectrum, tol: f64) -> MatchReport {
    let roots: Vec<(f64, usize)> = spectrum.roots.iter().map(|r| (r.energy, r.multiplicity as usize)).collect();
    let (lo, hi) = spectrum.scan_range;
    match_values(&roots, oracle.interior(), (lo, hi), tol)
}

/// [`match_roots`] on plain values: `(root, multiplicity)` against a sorted
/// reference list, restricted to `window` for the unmatched-reference report.
pub fn match_values(roots: &[(f64, usize)], reference: &[f64], window: (f64, f64), tol: f64) -> MatchReport {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &(x, _)) in roots.iter().enumerate() {
        for (j, &y) in reference.iter().enumerate() {
            let d = (x - y).abs();
            if d <= tol {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut capacity: Vec<usize> = roots.iter().map(|r| r.1.max(1)).collect();
    let mut used_ref = vec![false; reference.len()];
    let mut matched_root = vec![false; roots.len()];
    let mut pairs = Vec::new();
    for (d, i, j) in candidates {
        if capacity[i] == 0 || used_ref[j] {
            continue;
        }
        capacity[i] -= 1;
        used_ref[j] = true;
        matched_root[i] = true;
        pairs.push(MatchPair { cf_root: roots[i].0, oracle_eigenvalue: reference[j], difference: d });
    }
    pairs.sort_by(|a, b| a.cf_root.total_cmp(&b.cf_root));
    let unmatched_cf = roots.iter().zip(&matched_root).filter(|(_, m)| !**m).map(|(r, _)| r.0).collect();
    let unmatched_oracle_interior = reference
        .iter()
        .zip(&used_ref)
        .filter(|(y, u)| !**u && **y >= window.0 - tol && **y <= window.1 + tol)
        .map(|(y, _)| *y)
        .collect();
    MatchReport { pairs, unmatched_cf, unmatched_oracle_interior, tol }
}
