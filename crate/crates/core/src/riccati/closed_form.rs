//! Closed-form Riccati solution with constant forcing and the a-priori
//! bound sequence for the cascade.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// `k(x) = sqrt(a^2 + 2 (1 + b x) sigma^2)`.
pub fn k_of(x: f64, params: &ModelParams) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Precondition(format!("k(x) needs x >= 0, got {x}")));
    }
    Ok(k_unchecked(x, params))
}

#[inline]
fn k_unchecked(x: f64, p: &ModelParams) -> f64 {
    (p.a * p.a + 2.0 * (1.0 + p.b * x) * p.sigma * p.sigma).sqrt()
}

/// Positive stationary point `(k(x) - a) / sigma^2` of the Riccati flow
/// with constant forcing `x`, written without cancellation.
#[inline]
pub(crate) fn stationary_point(x: f64, p: &ModelParams) -> f64 {
    2.0 * (1.0 + p.b * x) / (k_unchecked(x, p) + p.a)
}

/// Solution at `t` of `phi' = sigma^2/2 phi^2 + a phi - (1 + b gamma_c)`,
/// `phi(maturity) = psi`.
pub fn phi_closed_form(
    t: f64,
    maturity: f64,
    psi: f64,
    gamma_c: f64,
    params: &ModelParams,
) -> Result<f64> {
    if t > maturity {
        return Err(Error::Precondition(format!(
            "closed form needs t <= T (t = {t}, T = {maturity})"
        )));
    }
    if !(psi >= 0.0) || !(gamma_c >= 0.0) {
        return Err(Error::Precondition(
            "closed form needs nonnegative terminal value and forcing".into(),
        ));
    }
    Ok(phi_unchecked(maturity - t, psi, gamma_c, params))
}

pub(crate) fn phi_unchecked(horizon: f64, psi: f64, gamma_c: f64, p: &ModelParams) -> f64 {
    if horizon == 0.0 {
        return psi;
    }
    let s2 = p.sigma * p.sigma;
    let k = k_unchecked(gamma_c, p);
    let plus = stationary_point(gamma_c, p);
    let minus = (p.a + k) / s2;
    let e = (-k * horizon).exp();
    (plus * (psi + minus) + minus * (psi - plus) * e) / ((psi + minus) + (plus - psi) * e)
}

/// Nondecreasing upper bounds `w_bar_j` for `alpha_r` on each cascade
/// interval, plus their limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSequence {
    /// `w_bar[0..=J]` with `J = ceil((T - t0) / tau)`.
    pub w_bar: Vec<f64>,
    /// Fixed point of `x -> max(x, (k(x) - a) / sigma^2)` reached from `w_bar[0]`.
    pub limit: f64,
}

impl BoundSequence {
    /// Bound valid on interval `[T - (j+1) tau, T - j tau]`.
    pub fn upper_for_interval(&self, j: usize) -> f64 {
        self.w_bar[(j + 1).min(self.w_bar.len() - 1)]
    }
}

/// Builds `w_bar_0 = max((k(0) - a)/sigma^2, gamma_sup)`,
/// `w_bar_{j+1} = max(w_bar_j, (k(w_bar_j) - a)/sigma^2)`.
pub fn bounds(
    params: &ModelParams,
    maturity: f64,
    w: f64,
    gamma_sup: f64,
) -> Result<BoundSequence> {
    let w_max = params.w_max();
    if !(w >= 0.0 && w < w_max) {
        return Err(Error::WDomain { w, w_max });
    }
    let step = |x: f64| x.max(stationary_point(x, params));
    let intervals = (((maturity - params.t0) / params.tau) - 1e-9).ceil().max(1.0) as usize;
    let mut w_bar = Vec::with_capacity(intervals + 1);
    w_bar.push(stationary_point(0.0, params).max(gamma_sup));
    for j in 0..intervals {
        w_bar.push(step(w_bar[j]));
    }
    let mut limit = w_bar[intervals];
    for _ in 0..100_000 {
        let next = step(limit);
        let done = (next - limit).abs() <= 1e-12 * (1.0 + limit);
        limit = next;
        if done {
            break;
        }
    }
    Ok(BoundSequence { w_bar, limit })
}
