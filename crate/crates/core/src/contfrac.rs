//! Both sides of the continued-fraction eigenvalue condition
//!
//! ```text
//! β_m − γ_m α_{m−1} / (β_{m−1} − γ_{m−1} α_{m−2} / (… − γ_1 α_0 / β_0))
//!     = α_m γ_{m+1} / (β_{m+1} − α_{m+1} γ_{m+2} / (β_{m+2} − …))
//! ```
//!
//! balanced at the match index `m`, plus a pole-free characteristic
//! function with the same zeros, used for bracketing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::{Dual, Real};
use crate::model::ModelParams;
use crate::recurrence::{coeffs_at, Branch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfConfig {
    /// Level at which the two fractions are balanced (≥ 1).
    pub match_index: usize,
    /// Number of levels kept in the ascending fraction (≥ 10); deeper tail set to zero.
    pub tail_depth: usize,
    /// Denominators with magnitude at or below this count as poles.
    pub pole_guard: f64,
}

impl Default for CfConfig {
    fn default() -> Self {
        CfConfig { match_index: 1, tail_depth: 400, pole_guard: 1e-12 }
    }
}

impl CfConfig {
    pub fn validate(&self) -> Result<(), CfError> {
        if self.match_index < 1 {
            return Err(CfError::InvalidConfig(format!("match_index must be >= 1, got {}", self.match_index)));
        }
        if self.tail_depth < 10 {
            return Err(CfError::InvalidConfig(format!("tail_depth must be >= 10, got {}", self.tail_depth)));
        }
        if !(self.pole_guard > 0.0 && self.pole_guard.is_finite()) {
            return Err(CfError::InvalidConfig(format!("pole_guard must be > 0, got {}", self.pole_guard)));
        }
        Ok(())
    }

    pub fn with_match_index(&self, match_index: usize) -> Self {
        CfConfig { match_index, ..*self }
    }

    pub fn with_tail_depth(&self, tail_depth: usize) -> Self {
        CfConfig { tail_depth, ..*self }
    }

    fn top(&self) -> usize {
        self.match_index + self.tail_depth
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfError {
    #[error("invalid continued-fraction configuration: {0}")]
    InvalidConfig(String),
    #[error("pole encountered at level {level}")]
    PoleEncountered { level: usize },
}

/// One side of the balance, with the smallest denominator met on the way.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfSide {
    pub value: f64,
    pub min_denominator: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfEval {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub pole_flag: bool,
    pub min_denominator: f64,
}

struct Raw<T> {
    value: T,
    min_den: f64,
    min_level: usize,
}

fn lhs_raw<T: Real>(branch: Branch, m: usize, e: T, omega: T, g: f64, eps: f64) -> Raw<T> {
    let (mut alpha_prev, beta0, _) = coeffs_at(branch, 0, e, omega, g, eps);
    let mut d = beta0;
    let mut min_den = f64::INFINITY;
    let mut min_level = 0;
    for k in 1..=m {
        if d.value().abs() < min_den {
            min_den = d.value().abs();
            min_level = k - 1;
        }
        let (alpha, beta, gamma) = coeffs_at(branch, k, e, omega, g, eps);
        d = beta - gamma * alpha_prev / d;
        alpha_prev = alpha;
    }
    Raw { value: d, min_den, min_level }
}

fn rhs_raw<T: Real>(branch: Branch, m: usize, top: usize, e: T, omega: T, g: f64, eps: f64) -> Raw<T> {
    let (_, beta_top, mut gamma_up) = coeffs_at(branch, top, e, omega, g, eps);
    let mut t = beta_top;
    let mut min_den = f64::INFINITY;
    let mut min_level = top;
    for k in (m..top).rev() {
        if t.value().abs() < min_den {
            min_den = t.value().abs();
            min_level = k + 1;
        }
        let (alpha, beta, gamma) = coeffs_at(branch, k, e, omega, g, eps);
        t = if k == m { alpha * gamma_up / t } else { beta - alpha * gamma_up / t };
        gamma_up = gamma;
    }
    Raw { value: t, min_den, min_level }
}

/// Descending fraction from `β_0` up to level `match_index`.
pub fn eval_lhs(branch: Branch, energy: f64, params: &ModelParams, cfg: &CfConfig) -> Result<CfSide, CfError> {
    cfg.validate()?;
    let raw = lhs_raw(branch, cfg.match_index, energy, params.omega(), params.g(), params.epsilon());
    if raw.min_den <= cfg.pole_guard {
        return Err(CfError::PoleEncountered { level: raw.min_level });
    }
    Ok(CfSide { value: raw.value, min_denominator: raw.min_den })
}

/// Ascending fraction from level `match_index + 1` down from `match_index + tail_depth`.
pub fn eval_rhs(branch: Branch, energy: f64, params: &ModelParams, cfg: &CfConfig) -> Result<CfSide, CfError> {
    cfg.validate()?;
    let raw = rhs_raw(branch, cfg.match_index, cfg.top(), energy, params.omega(), params.g(), params.epsilon());
    if raw.min_den <= cfg.pole_guard {
        return Err(CfError::PoleEncountered { level: raw.min_level });
    }
    Ok(CfSide { value: raw.value, min_denominator: raw.min_den })
}

/// `lhs − rhs` with merged pole diagnostics. Poles are reported, not raised.
pub fn char_residual(branch: Branch, energy: f64, params: &ModelParams, cfg: &CfConfig) -> Result<CfEval, CfError> {
    cfg.validate()?;
    let (omega, g, eps) = (params.omega(), params.g(), params.epsilon());
    let l = lhs_raw(branch, cfg.match_index, energy, omega, g, eps);
    let r = rhs_raw(branch, cfg.match_index, cfg.top(), energy, omega, g, eps);
    let min_denominator = l.min_den.min(r.min_den);
    Ok(CfEval {
        lhs: l.value,
        rhs: r.value,
        residual: l.value - r.value,
        pole_flag: min_denominator <= cfg.pole_guard,
        min_denominator,
    })
}

/// `(residual, d residual / dE)` at the configured match index.
pub(crate) fn residual_with_slope(branch: Branch, energy: f64, params: &ModelParams, cfg: &CfConfig) -> (f64, f64) {
    let e = Dual::variable(energy);
    let omega = Dual::constant(params.omega());
    let (g, eps) = (params.g(), params.epsilon());
    let l = lhs_raw(branch, cfg.match_index, e, omega, g, eps);
    let r = rhs_raw(branch, cfg.match_index, cfg.top(), e, omega, g, eps);
    let f = l.value - r.value;
    (f.re, f.du)
}

/// Residual converted to an energy offset, `|f / f'|` (one Newton step).
pub fn energy_residual(branch: Branch, energy: f64, params: &ModelParams, cfg: &CfConfig) -> f64 {
    let (f, df) = residual_with_slope(branch, energy, params, cfg);
    if f == 0.0 {
        0.0
    } else {
        (f / df).abs()
    }
}

/// Scaled tridiagonal determinant of levels `0..=top`.
///
/// With continuants `P_k` (bottom-up) and `Q_k` (top-down) the balance reads
/// `P_m/P_{m−1} = α_m γ_{m+1} Q_{m+2}/Q_{m+1}`; clearing denominators gives
/// `F = P_m Q_{m+1} − α_m γ_{m+1} P_{m−1} Q_{m+2}`, which has the zeros of the
/// residual but none of its poles and does not depend on `m`. Each level is
/// divided by `w_k = (k − E)² + 1 > 0` to keep the magnitude bounded without
/// changing the sign.
fn characteristic_kernel<T: Real>(branch: Branch, m: usize, top: usize, e: T, omega: T, g: f64, eps: f64) -> T {
    let one = T::constant(1.0);
    let weight = |k: usize| {
        let d = T::constant(k as f64) - e;
        d * d + one
    };
    // Bottom-up: p_prev = P̃_{k−1}, p = P̃_k.
    let (mut alpha_prev, beta0, _) = coeffs_at(branch, 0, e, omega, g, eps);
    let mut w_prev = weight(0);
    let mut p_prev = one;
    let mut p = beta0 / w_prev;
    for k in 1..=m {
        let (alpha, beta, gamma) = coeffs_at(branch, k, e, omega, g, eps);
        let w = weight(k);
        let next = (beta * p - gamma * alpha_prev * p_prev / w_prev) / w;
        p_prev = p;
        p = next;
        alpha_prev = alpha;
        w_prev = w;
    }
    // Top-down: q_up = Q̃_{k+1}, q = Q̃_k, stopping at k = m + 1.
    let (_, beta_top, mut gamma_up) = coeffs_at(branch, top, e, omega, g, eps);
    let mut w_up = weight(top);
    let mut q_up = one;
    let mut q = beta_top / w_up;
    for k in (m + 1..top).rev() {
        let (alpha, beta, gamma) = coeffs_at(branch, k, e, omega, g, eps);
        let w = weight(k);
        let next = (beta * q - alpha * gamma_up * q_up / w_up) / w;
        q_up = q;
        q = next;
        gamma_up = gamma;
        w_up = w;
    }
    // Here q = Q̃_{m+1}, q_up = Q̃_{m+2}, gamma_up = γ_{m+1}, w_up = w_{m+1}.
    let (alpha_m, _, _) = coeffs_at(branch, m, e, omega, g, eps);
    p * q - alpha_m * gamma_up * p_prev * q_up / (weight(m) * w_up)
}

/// Pole-free characteristic function of the energy.
pub fn characteristic(branch: Branch, energy: f64, params: &ModelParams, cfg: &CfConfig) -> f64 {
    characteristic_kernel(branch, cfg.match_index, cfg.top(), energy, params.omega(), params.g(), params.epsilon())
}

/// Characteristic function and its energy derivative.
pub(crate) fn characteristic_with_slope(
    branch: Branch,
    energy: f64,
    params: &ModelParams,
    cfg: &CfConfig,
) -> (f64, f64) {
    let f = characteristic_kernel(
        branch,
        cfg.match_index,
        cfg.top(),
        Dual::variable(energy),
        Dual::constant(params.omega()),
        params.g(),
        params.epsilon(),
    );
    (f.re, f.du)
}

/// Characteristic function and its derivative with respect to Ω at fixed energy.
pub(crate) fn characteristic_omega_slope(
    branch: Branch,
    energy: f64,
    omega: f64,
    delta: f64,
    eta: f64,
    cfg: &CfConfig,
) -> (f64, f64) {
    let f = characteristic_kernel(
        branch,
        cfg.match_index,
        cfg.top(),
        Dual::constant(energy),
        Dual::variable(omega),
        eta / 2.0,
        -delta / 2.0,
    );
    (f.re, f.du)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::coeffs;

    fn p(omega: f64, delta: f64, eta: f64) -> ModelParams {
        ModelParams::new(omega, delta, eta).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(CfConfig::default().validate().is_ok());
        assert!(CfConfig { match_index: 0, ..CfConfig::default() }.validate().is_err());
        assert!(CfConfig { tail_depth: 9, ..CfConfig::default() }.validate().is_err());
        assert!(CfConfig { pole_guard: 0.0, ..CfConfig::default() }.validate().is_err());
        let params = p(2.0, 0.0, 0.2);
        let bad = CfConfig { match_index: 0, ..CfConfig::default() };
        assert!(matches!(char_residual(Branch::MinusExp, 0.0, &params, &bad), Err(CfError::InvalidConfig(_))));
    }

    #[test]
    fn shortest_lhs() {
        let params = p(2.0, 2.0, 0.2);
        let e = 0.37;
        let k0 = coeffs(Branch::MinusExp, 0, e, &params);
        let k1 = coeffs(Branch::MinusExp, 1, e, &params);
        let lhs = eval_lhs(Branch::MinusExp, e, &params, &CfConfig::default()).unwrap();
        assert!((lhs.value - (k1.beta - k1.gamma * k0.alpha / k0.beta)).abs() < 1e-14);
    }

    #[test]
    fn decoupled_sides() {
        let params = p(2.0, 2.0, 0.0);
        for m in 1..4 {
            let cfg = CfConfig::default().with_match_index(m);
            let e = 0.3;
            let lhs = eval_lhs(Branch::MinusExp, e, &params, &cfg).unwrap();
            let rhs = eval_rhs(Branch::MinusExp, e, &params, &cfg).unwrap();
            assert_eq!(lhs.value, coeffs(Branch::MinusExp, m, e, &params).beta);
            assert_eq!(rhs.value, 0.0);
        }
    }

    #[test]
    fn decoupled_residual_zeros_are_special_case() {
        // g = 0: residual = β_m, vanishing at E = m ± √(Ω²/4 + ε²)
        let params = p(2.0, 2.0, 0.0);
        let r = 2f64.sqrt();
        for m in 1..4 {
            let cfg = CfConfig::default().with_match_index(m);
            for e in [m as f64 + r, m as f64 - r] {
                let ev = char_residual(Branch::MinusExp, e, &params, &cfg).unwrap();
                assert!(ev.residual.abs() < 1e-13, "m={m} e={e}: {}", ev.residual);
            }
        }
    }

    #[test]
    fn far_below_spectrum_is_large_and_signed() {
        let params = p(2.0, 0.2, 0.2);
        let cfg = CfConfig::default();
        let values: Vec<f64> = (0..21)
            .map(|i| char_residual(Branch::MinusExp, -100.0 + 0.1 * i as f64, &params, &cfg).unwrap().residual)
            .collect();
        assert!(values.iter().all(|v| v.abs() > 1e3));
        assert!(values.windows(2).all(|w| w[0].signum() == w[1].signum()));
    }

    #[test]
    fn deterministic_evaluation() {
        let params = p(4.0, 1.6, 0.6);
        let cfg = CfConfig::default();
        let a = char_residual(Branch::PlusExp, 2.2, &params, &cfg).unwrap();
        let b = char_residual(Branch::PlusExp, 2.2, &params, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.residual, a.lhs - a.rhs);
    }

    #[test]
    fn pole_is_reported() {
        // At match index 1 the only lhs denominator is β_0; sit on its zero.
        let params = p(2.0, 0.2, 0.4);
        let (g, eps) = (params.g(), params.epsilon());
        // β_0 (MinusExp) = E² − 4g²E + 4g²ε − ε² − Ω²/4
        let b = -4.0 * g * g;
        let c = 4.0 * g * g * eps - eps * eps - 1.0;
        let e0 = (-b + (b * b - 4.0 * c).sqrt()) / 2.0;
        assert!(coeffs(Branch::MinusExp, 0, e0, &params).beta.abs() < 1e-13);
        let cfg = CfConfig::default();
        assert_eq!(eval_lhs(Branch::MinusExp, e0, &params, &cfg), Err(CfError::PoleEncountered { level: 0 }));
        let ev = char_residual(Branch::MinusExp, e0, &params, &cfg).unwrap();
        assert!(ev.pole_flag);
        assert!(ev.min_denominator <= cfg.pole_guard);
        // The characteristic function stays finite there.
        assert!(characteristic(Branch::MinusExp, e0, &params, &cfg).is_finite());
    }

    #[test]
    fn depth_doubling_is_stable() {
        let params = p(2.0, 0.2, 0.2);
        let cfg = CfConfig::default();
        let deep = cfg.with_tail_depth(2 * cfg.tail_depth);
        for i in 0..40 {
            let e = -2.0 + 0.2537 * i as f64;
            let a = char_residual(Branch::MinusExp, e, &params, &cfg).unwrap();
            let b = char_residual(Branch::MinusExp, e, &params, &deep).unwrap();
            if a.pole_flag || b.pole_flag {
                continue;
            }
            assert!((a.residual - b.residual).abs() <= 1e-9 * (1.0 + a.lhs.abs()), "E={e}");
        }
    }

    #[test]
    fn weak_coupling_continuity() {
        let cfg = CfConfig::default();
        let tiny = p(2.0, 1.0, 2e-8);
        let zero = p(2.0, 1.0, 0.0);
        for i in 0..50 {
            let e = -2.9 + 0.2113 * i as f64;
            let a = char_residual(Branch::MinusExp, e, &tiny, &cfg).unwrap();
            let b = char_residual(Branch::MinusExp, e, &zero, &cfg).unwrap();
            assert!((a.residual - b.residual).abs() <= 1e-6, "E={e}");
        }
    }

    #[test]
    fn characteristic_shares_residual_zeros() {
        // F = P_{m−1} Q_{m+1} f, so F/f has no sign flip where neither vanishes.
        let params = p(2.0, 0.2, 0.2);
        let cfg = CfConfig::default();
        let (f, df) = characteristic_with_slope(Branch::MinusExp, 0.5, &params, &cfg);
        let h = 1e-6;
        let fd = (characteristic(Branch::MinusExp, 0.5 + h, &params, &cfg)
            - characteristic(Branch::MinusExp, 0.5 - h, &params, &cfg))
            / (2.0 * h);
        assert!((df - fd).abs() < 1e-6 * (1.0 + df.abs()));
        assert!(f.is_finite());
        for m in 1..4 {
            let c = cfg.with_match_index(m);
            let a = characteristic(Branch::MinusExp, 0.5, &params, &c);
            // Independent of the balance level; only the truncation top moves with m.
            assert!((a - f).abs() < 1e-4 * f.abs(), "m={m}: {a} vs {f}");
            assert_eq!(a.signum(), f.signum());
        }
    }
}
