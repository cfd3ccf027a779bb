//! Market price of risk and the physical-to-risk-neutral change of measure.
//!
//! The premium `(psi0, psi1, psi2)` maps physical coefficients to
//! `a^Q = a + psi0`, `gamma^Q = (a gamma - psi1) / (a + psi0)`,
//! `b^Q = b - psi2`. Along a path the density is
//!
//! ```text
//! Z_T = exp(-sum xi_n dW_n - 1/2 sum xi_n^2 dt),
//! xi  = (mu^P - mu^Q) / (sigma sqrt(r))
//! ```
//!
//! with `xi` taken at left endpoints, so `Z` is an exact discrete martingale
//! under the simulation measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Measure, ModelParams};
use crate::sdde::RatePath;

/// Floor applied to the rate inside [`rn_weight`] where a path touches zero.
pub const EPS_Z: f64 = 1e-12;

/// Market-price-of-risk coefficients. Only `psi0` is nonzero in the
/// single-parameter specification `xi = psi0 sqrt(r) / sigma`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskPremium {
    #[serde(default)]
    pub psi0: f64,
    #[serde(default)]
    pub psi1: f64,
    #[serde(default)]
    pub psi2: f64,
}

impl RiskPremium {
    pub fn single(psi0: f64) -> Self {
        RiskPremium {
            psi0,
            ..Default::default()
        }
    }

    /// `psi1 = psi2 = 0` and `psi0 >= 0`: risk-neutral Feller then follows
    /// from physical Feller.
    pub fn is_single(&self) -> bool {
        self.psi1 == 0.0 && self.psi2 == 0.0 && self.psi0 >= 0.0
    }
}

/// Risk-neutral coefficients implied by `premium`.
pub fn to_risk_neutral(params: &ModelParams, premium: &RiskPremium, horizon: f64) -> Result<ModelParams> {
    params.expect_measure(Measure::Physical)?;
    params.ensure_feller(horizon)?;
    let a_q = params.a + premium.psi0;
    if !(a_q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "risk-neutral a^Q = a + psi0 = {a_q} must be positive"
        )));
    }
    let b_q = params.b - premium.psi2;
    if !(b_q >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "risk-neutral b^Q = b - psi2 = {b_q} must be nonnegative"
        )));
    }
    let a = params.a;
    let gamma_q = params.gamma.map(|g| (a * g - premium.psi1) / a_q);
    let q = ModelParams::risk_neutral(a_q, gamma_q, b_q, params.sigma, params.tau, params.t0);
    if premium.is_single() {
        return Ok(q);
    }
    let lo = q.gamma.inf_on(q.t0, horizon);
    if !(lo > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "risk-neutral gamma^Q = (a gamma - psi1)/(a + psi0) must be positive (min {lo})"
        )));
    }
    let report = q.validate(horizon);
    if let Some(e) = report.errors.into_iter().next() {
        return Err(Error::InvalidParameter(format!("risk-neutral {e}")));
    }
    if !report.feller_ok {
        return Err(Error::InvalidParameter(
            "risk-neutral Feller condition sigma^2 <= 2 a^Q gamma^Q(t) fails".into(),
        ));
    }
    Ok(q)
}

/// Per-step coefficients of `xi` for one (P, Q) pair on a grid.
struct XiKernel {
    level: Vec<f64>,
    c_r: f64,
    c_lag: f64,
    sigma: f64,
}

impl XiKernel {
    fn new(p: &ModelParams, q: &ModelParams, times: impl Iterator<Item = f64>) -> Result<Self> {
        if p.sigma != q.sigma || p.tau != q.tau || p.t0 != q.t0 {
            return Err(Error::Precondition(
                "measure change needs common sigma, tau and t0".into(),
            ));
        }
        let level = times
            .map(|t| Ok(p.a * p.gamma.value_at(t)? - q.a * q.gamma.value_at(t)?))
            .collect::<Result<_>>()?;
        Ok(XiKernel {
            level,
            c_r: p.a - q.a,
            c_lag: p.b - q.b,
            sigma: p.sigma,
        })
    }

    #[inline]
    fn xi(&self, k: usize, r: f64, r_lag: f64) -> f64 {
        (self.level[k] - self.c_r * r + self.c_lag * r_lag) / (self.sigma * r.sqrt())
    }
}

/// Market price of risk `(mu^P - mu^Q) / (sigma sqrt(r_t))` at time `t`.
pub fn xi_at(p: &ModelParams, q: &ModelParams, r_t: f64, r_lag: f64, t: f64) -> Result<f64> {
    if r_t == 0.0 {
        return Err(Error::ZeroRate);
    }
    if !(r_t > 0.0) || !(r_lag >= 0.0) {
        return Err(Error::Precondition(format!(
            "market price of risk needs r(t) > 0 and r(t - tau) >= 0 (got {r_t}, {r_lag})"
        )));
    }
    Ok(XiKernel::new(p, q, std::iter::once(t))?.xi(0, r_t, r_lag))
}

/// Log density of the target measure against the simulation measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RnWeight {
    pub log_z: f64,
    /// Steps where the rate was floored at [`EPS_Z`].
    pub truncations: usize,
}

impl RnWeight {
    pub fn value(&self) -> f64 {
        self.log_z.exp()
    }
}

/// `Z_T` for a path simulated under `from` with recorded increments,
/// towards the coefficients `to`.
pub fn rn_weight(path: &RatePath, from: &ModelParams, to: &ModelParams) -> Result<RnWeight> {
    let dw = path.noise().ok_or(Error::MissingNoise)?;
    let g = path.grid();
    let dt = g.dt();
    let kernel = XiKernel::new(from, to, (0..g.n_steps()).map(|k| g.node(k)))?;
    let nodes = path.all_nodes();
    let lag = g.lag();
    let mut log_z = 0.0;
    let mut truncations = 0;
    for (k, dw) in dw.iter().enumerate() {
        let mut r = nodes[lag + k];
        if r < EPS_Z {
            r = EPS_Z;
            truncations += 1;
        }
        let xi = kernel.xi(k, r, nodes[k].max(0.0));
        log_z += -xi * dw - 0.5 * xi * xi * dt;
    }
    Ok(RnWeight { log_z, truncations })
}

/// The same path with its increments re-expressed under `to`:
/// `dW^to = dW + xi dt`.
pub fn shift_noise(path: &RatePath, from: &ModelParams, to: &ModelParams) -> Result<RatePath> {
    let dw = path.noise().ok_or(Error::MissingNoise)?;
    let g = path.grid();
    let kernel = XiKernel::new(from, to, (0..g.n_steps()).map(|k| g.node(k)))?;
    let nodes = path.all_nodes();
    let lag = g.lag();
    let shifted = dw
        .iter()
        .enumerate()
        .map(|(k, w)| w + kernel.xi(k, nodes[lag + k].max(EPS_Z), nodes[k].max(0.0)) * g.dt())
        .collect();
    Ok(path.clone().with_noise(shifted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialSegment, LevelCurve};
    use crate::sdde::{simulate_path, NoiseStream};

    fn p() -> ModelParams {
        ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.1, 0.25, 0.0)
    }

    #[test]
    fn identity_premium() {
        let q = to_risk_neutral(&p(), &RiskPremium::default(), 1.0).unwrap();
        assert!(q.same_coefficients(&p()));
        assert_eq!(q.measure, Measure::RiskNeutral);
    }

    #[test]
    fn canonical_mapping() {
        let q = to_risk_neutral(&p(), &RiskPremium::single(0.5), 1.0).unwrap();
        assert_eq!(q.a, 1.5);
        assert!((q.gamma_at(0.3).unwrap() - 1.0 / 30.0).abs() < 1e-16);
        assert_eq!(q.b, 0.2);
        let no_delay = RiskPremium { psi2: 0.2, ..Default::default() };
        assert_eq!(to_risk_neutral(&p(), &no_delay, 1.0).unwrap().b, 0.0);
    }

    #[test]
    fn general_premium_failures_name_the_constraint() {
        let bad_b = RiskPremium { psi2: 0.3, ..Default::default() };
        let e = to_risk_neutral(&p(), &bad_b, 1.0).unwrap_err().to_string();
        assert!(e.contains("b^Q"), "{e}");
        let bad_gamma = RiskPremium { psi1: 0.06, ..Default::default() };
        let e = to_risk_neutral(&p(), &bad_gamma, 1.0).unwrap_err().to_string();
        assert!(e.contains("gamma^Q"), "{e}");
        let bad_feller = RiskPremium { psi1: 0.046, ..Default::default() };
        let e = to_risk_neutral(&p(), &bad_feller, 1.0).unwrap_err().to_string();
        assert!(e.contains("Feller"), "{e}");
        let q = to_risk_neutral(&p(), &RiskPremium::single(0.5), 1.0).unwrap();
        assert!(matches!(to_risk_neutral(&q, &RiskPremium::default(), 1.0), Err(Error::MeasureMismatch { .. })));
    }

    #[test]
    fn xi_single_parameter_closed_form() {
        let q = to_risk_neutral(&p(), &RiskPremium::single(0.5), 1.0).unwrap();
        for &r in &[1e-6, 0.01, 0.04, 0.3] {
            let xi = xi_at(&p(), &q, r, 0.07, 0.5).unwrap();
            assert!((xi - 0.5 * r.sqrt() / 0.1).abs() < 1e-14);
        }
        assert_eq!(xi_at(&p(), &p(), 0.04, 0.03, 0.1).unwrap(), 0.0);
        assert_eq!(xi_at(&p(), &q, 0.0, 0.03, 0.1), Err(Error::ZeroRate));
    }

    #[test]
    fn weight_is_one_for_equal_measures() {
        let seg = InitialSegment::constant(0.0, 0.25, 0.04).unwrap();
        let path = simulate_path(&p(), &seg, 1.0, 1e-3, &NoiseStream::new(5, 2)).unwrap();
        let w = rn_weight(&path, &p(), &p()).unwrap();
        assert_eq!(w.value(), 1.0);
        assert_eq!(w.truncations, 0);
    }

    #[test]
    fn reverse_weights_cancel() {
        let seg = InitialSegment::constant(0.0, 0.25, 0.04).unwrap();
        let q = to_risk_neutral(&p(), &RiskPremium::single(0.5), 1.0).unwrap();
        let path = simulate_path(&p(), &seg, 1.0, 1e-3, &NoiseStream::new(5, 3)).unwrap();
        let fwd = rn_weight(&path, &p(), &q).unwrap();
        let back = rn_weight(&shift_noise(&path, &p(), &q).unwrap(), &q, &p()).unwrap();
        assert!((fwd.log_z + back.log_z).abs() < 1e-12);
    }
}
