use crate::error::{Error, Result};
use crate::model::{Measure, ModelParams, TimeGrid};

use super::{hermite, hermite_mid, AlphaSolution};

/// Gridded solution of the linearised system `beta = d alpha / d w` on the
/// grid of the alpha solution it was built from.
#[derive(Debug, Clone)]
pub struct BetaSolution {
    pub(crate) alpha: AlphaSolution,
    pub(crate) beta_r: Vec<f64>,
    pub(crate) beta_0: Vec<f64>,
}

impl BetaSolution {
    pub fn alpha(&self) -> &AlphaSolution {
        &self.alpha
    }

    pub fn grid(&self) -> &TimeGrid {
        self.alpha.grid()
    }

    pub fn maturity(&self) -> f64 {
        self.alpha.maturity()
    }

    pub fn w(&self) -> f64 {
        self.alpha.w()
    }

    pub fn beta_r(&self) -> &[f64] {
        &self.beta_r
    }

    pub fn beta_0(&self) -> &[f64] {
        &self.beta_0
    }

    pub fn times(&self) -> Vec<f64> {
        self.alpha.times()
    }

    #[inline]
    fn slope(&self, m: usize, delayed: bool) -> f64 {
        let p = &self.alpha.params;
        let lag = self.grid().lag();
        let forcing = if delayed { p.b * self.beta_r[m + lag] } else { 0.0 };
        (p.sigma * p.sigma * self.alpha.alpha_r[m] + p.a) * self.beta_r[m] - forcing
    }

    fn mid_r(&self, cell: usize) -> f64 {
        let fl = self.alpha.cell_delayed(cell);
        hermite_mid(
            self.beta_r[cell],
            self.beta_r[cell + 1],
            self.slope(cell, fl),
            self.slope(cell + 1, fl),
            self.grid().dt(),
        )
    }

    /// `beta_r(t)` by cubic Hermite interpolation between nodes.
    pub fn beta_r_at(&self, t: f64) -> Result<f64> {
        let g = self.grid();
        if let Some(i) = g.index_of(t) {
            return Ok(self.beta_r[i]);
        }
        let (lo, hi) = (g.t_start(), g.t_end());
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let x = (t - lo) / g.dt();
        let cell = (x.floor() as usize).min(g.n_steps() - 1);
        let fl = self.alpha.cell_delayed(cell);
        Ok(hermite(
            self.beta_r[cell],
            self.beta_r[cell + 1],
            self.slope(cell, fl),
            self.slope(cell + 1, fl),
            g.dt(),
            x - cell as f64,
        ))
    }

    /// Delayed weight of the forward-rate functional, `b beta_r(t + tau)`
    /// for `t <= T - tau` and zero afterwards.
    pub fn gamma_tilde(&self, t: f64) -> Result<f64> {
        let p = &self.alpha.params;
        let (lo, hi) = (p.t0 - p.tau, self.maturity());
        if !(t >= lo - 1e-12 && t <= hi + 1e-12) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        if p.b == 0.0 {
            return Ok(0.0);
        }
        if t + p.tau < hi {
            Ok(p.b * self.beta_r_at(t + p.tau)?)
        } else {
            Ok(p.b)
        }
    }
}

/// Solves `beta_r' = (sigma^2 alpha_r + a) beta_r - b beta_r(t + tau)`,
/// `beta_r(T) = 1`, and `beta_0 = a int gamma beta_r` on the grid of `alpha`.
///
/// On `[T - tau, T]` the exponential formula is evaluated by quadrature;
/// earlier intervals use the RK4 and Hermite treatment of the alpha solver,
/// so `beta` agrees with a finite difference of `alpha` in `w` to `O(dt^4)`.
pub fn solve_beta(params: &ModelParams, alpha: &AlphaSolution) -> Result<BetaSolution> {
    params.expect_measure(Measure::RiskNeutral)?;
    if !params.same_coefficients(alpha.params()) {
        return Err(Error::Precondition(
            "beta must be solved with the coefficients of its alpha solution".into(),
        ));
    }
    let grid = *alpha.grid();
    let n = grid.n_steps();
    let lag = grid.lag();
    let h = grid.dt();
    let (s2, a, b) = (params.sigma * params.sigma, params.a, params.b);

    let mut sol = BetaSolution {
        alpha: alpha.clone(),
        beta_r: vec![0.0; n + 1],
        beta_0: vec![0.0; n + 1],
    };
    sol.beta_r[n] = 1.0;

    // Last interval: beta_r = exp(-int_t^T (sigma^2 alpha_r + a)), exponent by
    // the endpoint-corrected trapezoid rule (fourth order, uses alpha_r').
    let last = n.saturating_sub(lag);
    let mut expo = 0.0;
    for cell in (last..n).rev() {
        let (g0, g1) = (s2 * alpha.alpha_r[cell] + a, s2 * alpha.alpha_r[cell + 1] + a);
        let (d0, d1) = (s2 * alpha.slope(cell, false), s2 * alpha.slope(cell + 1, false));
        expo += 0.5 * h * (g0 + g1) - h * h / 12.0 * (d1 - d0);
        sol.beta_r[cell] = (-expo).exp();
    }

    let f = |y: f64, ar: f64, g: f64| (s2 * ar + a) * y - b * g;
    for cell in (0..last).rev() {
        let (g1, gm, g0) = if alpha.cell_delayed(cell) {
            (sol.beta_r[cell + 1 + lag], sol.mid_r(cell + lag), sol.beta_r[cell + lag])
        } else {
            (0.0, 0.0, 0.0)
        };
        let (a1, am, a0) = (alpha.alpha_r[cell + 1], alpha.mid_r(cell), alpha.alpha_r[cell]);
        let y1 = sol.beta_r[cell + 1];
        let k1 = f(y1, a1, g1);
        let k2 = f(y1 - 0.5 * h * k1, am, gm);
        let k3 = f(y1 - 0.5 * h * k2, am, gm);
        let k4 = f(y1 - h * k3, a0, g0);
        sol.beta_r[cell] = y1 - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    for cell in (0..n).rev() {
        let inc = params.gamma.integrate_linear(
            grid.node(cell),
            grid.node(cell + 1),
            sol.beta_r[cell],
            sol.beta_r[cell + 1],
        );
        sol.beta_0[cell] = sol.beta_0[cell + 1] + a * inc;
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevelCurve;
    use crate::riccati::{phi_closed_form, solve_alpha};

    fn q(b: f64) -> ModelParams {
        ModelParams::risk_neutral(1.5, LevelCurve::constant(0.05 / 1.5), b, 0.1, 0.25, 0.0)
    }

    fn solve(b: f64, w: f64, t: f64, dt: f64) -> BetaSolution {
        let p = q(b);
        let al = solve_alpha(&p, t, w, dt).unwrap();
        solve_beta(&p, &al).unwrap()
    }

    #[test]
    fn terminal_values() {
        let s = solve(0.2, 0.2, 1.0, 1e-3);
        let n = s.grid().n_steps();
        assert_eq!(s.beta_r()[n], 1.0);
        assert_eq!(s.beta_0()[n], 0.0);
    }

    #[test]
    fn beta_is_positive() {
        let s = solve(0.2, 0.3, 2.5, 1e-3);
        assert!(s.beta_r().iter().all(|&x| x > 0.0));
        assert!(s.beta_0().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn without_delay_equals_derivative_of_closed_form() {
        let p = q(0.0);
        let w = 0.25;
        let s = solve(0.0, w, 1.5, 1e-3);
        let eps = 1e-6;
        for i in (0..=s.grid().n_steps()).step_by(100) {
            let t = s.grid().node(i);
            let d = (phi_closed_form(t, 1.5, w + eps, 0.0, &p).unwrap()
                - phi_closed_form(t, 1.5, w - eps, 0.0, &p).unwrap())
                / (2.0 * eps);
            assert!((s.beta_r()[i] - d).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn last_interval_matches_exponential_formula() {
        // beta_r(t) = exp(-int_t^T sigma^2 alpha_r + a), with a fine Simpson rule.
        let p = q(0.2);
        let s = solve(0.2, 0.4, 1.0, 1e-4);
        let al = s.alpha();
        let n = s.grid().n_steps();
        let i = n - s.grid().lag();
        let t = s.grid().node(i);
        let m = 2000;
        let hh = (1.0 - t) / m as f64;
        let g = |u: f64| p.sigma * p.sigma * al.alpha_r_at(u).unwrap() + p.a;
        let mut acc = g(t) + g(1.0);
        for k in 1..m {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(t + k as f64 * hh);
        }
        let want = (-acc * hh / 3.0).exp();
        assert!((s.beta_r()[i] - want).abs() < 1e-10);
    }

    #[test]
    fn matches_finite_difference_of_alpha() {
        let p = q(0.2);
        let (w, h) = (0.2, 1e-5);
        let lo = solve_alpha(&p, 1.0, w, 1e-3).unwrap();
        let hi = solve_alpha(&p, 1.0, w + h, 1e-3).unwrap();
        let s = solve_beta(&p, &lo).unwrap();
        for i in 0..=s.grid().n_steps() {
            let fd = (hi.alpha_r()[i] - lo.alpha_r()[i]) / h;
            assert!((fd - s.beta_r()[i]).abs() < 1e-4);
            let fd0 = (hi.alpha_0()[i] - lo.alpha_0()[i]) / h;
            assert!((fd0 - s.beta_0()[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_foreign_alpha() {
        let al = solve_alpha(&q(0.2), 1.0, 0.1, 1e-3).unwrap();
        assert!(solve_beta(&q(0.1), &al).is_err());
    }
}
