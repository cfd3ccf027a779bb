use crate::error::{Error, Result};
use crate::model::{Measure, ModelParams, TimeGrid};

use super::{hermite, hermite_mid};

/// Gridded solution of the alpha system on `[t0, T]` for one terminal
/// weight `w`. Knots `T - j tau` are grid nodes.
#[derive(Debug, Clone)]
pub struct AlphaSolution {
    pub(crate) params: ModelParams,
    pub(crate) maturity: f64,
    pub(crate) w: f64,
    pub(crate) grid: TimeGrid,
    pub(crate) alpha_r: Vec<f64>,
    pub(crate) alpha_0: Vec<f64>,
}

impl AlphaSolution {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn alpha_r(&self) -> &[f64] {
        &self.alpha_r
    }

    pub fn alpha_0(&self) -> &[f64] {
        &self.alpha_0
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// Cascade interval `j` containing node `i`, i.e. the node lies in
    /// `[T - (j+1) tau, T - j tau]`. Knots are assigned to the earlier interval.
    pub fn interval_of(&self, i: usize) -> usize {
        (self.grid.n_steps() - i) / self.grid.lag()
    }

    /// Whether the cell `[i, i+1]` carries the delayed term.
    #[inline]
    pub(crate) fn cell_delayed(&self, cell: usize) -> bool {
        cell + 1 + self.grid.lag() <= self.grid.n_steps()
    }

    /// Time derivative of `alpha_r` at node `m`, taken inside a cell whose
    /// delay flag is `delayed`.
    #[inline]
    pub(crate) fn slope(&self, m: usize, delayed: bool) -> f64 {
        let p = &self.params;
        let y = self.alpha_r[m];
        let forcing = if delayed {
            p.b * self.alpha_r[m + self.grid.lag()]
        } else {
            0.0
        };
        0.5 * p.sigma * p.sigma * y * y + p.a * y - 1.0 - forcing
    }

    /// `alpha_r` at the midpoint of cell `[i, i+1]`.
    pub(crate) fn mid_r(&self, cell: usize) -> f64 {
        let fl = self.cell_delayed(cell);
        hermite_mid(
            self.alpha_r[cell],
            self.alpha_r[cell + 1],
            self.slope(cell, fl),
            self.slope(cell + 1, fl),
            self.grid.dt(),
        )
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let (lo, hi) = (self.grid.t_start(), self.grid.t_end());
        if let Some(i) = self.grid.index_of(t) {
            return Ok((i, 0.0));
        }
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let x = (t - lo) / self.grid.dt();
        let cell = (x.floor() as usize).min(self.grid.n_steps() - 1);
        Ok((cell, x - cell as f64))
    }

    /// `alpha_r(t)` by cubic Hermite interpolation between nodes.
    pub fn alpha_r_at(&self, t: f64) -> Result<f64> {
        let (cell, s) = self.locate(t)?;
        if s == 0.0 {
            return Ok(self.alpha_r[cell]);
        }
        let fl = self.cell_delayed(cell);
        Ok(hermite(
            self.alpha_r[cell],
            self.alpha_r[cell + 1],
            self.slope(cell, fl),
            self.slope(cell + 1, fl),
            self.grid.dt(),
            s,
        ))
    }

    /// `alpha_0(t)`, consistent with the trapezoidal accumulation at nodes.
    pub fn alpha_0_at(&self, t: f64) -> Result<f64> {
        let (cell, s) = self.locate(t)?;
        if s == 0.0 {
            return Ok(self.alpha_0[cell]);
        }
        let hi = self.grid.node(cell + 1);
        let a_t = self.alpha_r_at(t)?;
        Ok(self.alpha_0[cell + 1]
            + self.params.a * self.params.gamma.integrate_linear(t, hi, a_t, self.alpha_r[cell + 1]))
    }

    /// Delayed-drift weight `Gamma(t) = b alpha_r(t + tau)` for
    /// `t <= T - tau`, `b w` on `[T - tau, T]`.
    pub fn gamma_q(&self, t: f64) -> Result<f64> {
        let lo = self.params.t0 - self.params.tau;
        let hi = self.maturity;
        if !(t >= lo - 1e-12 && t <= hi + 1e-12) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let b = self.params.b;
        if b == 0.0 {
            return Ok(0.0);
        }
        if t + self.params.tau < self.maturity {
            Ok(b * self.alpha_r_at(t + self.params.tau)?)
        } else {
            Ok(b * self.w)
        }
    }
}

/// Free-function form of [`AlphaSolution::gamma_q`]; `Gamma^Q(t, T; w)`.
pub fn gamma_q_fn(t: f64, alpha: &AlphaSolution) -> Result<f64> {
    alpha.gamma_q(t)
}

/// Solves the alpha system backwards from `maturity` with classical RK4 on
/// the delay-aligned grid of step `dt`.
///
/// The delayed term `alpha_r(t + tau)` at RK4 midpoints is a cubic Hermite
/// interpolant of the already solved interval, whose node slopes follow from
/// the right-hand side, so the fourth-order accuracy is kept across knots.
pub fn solve_alpha(params: &ModelParams, maturity: f64, w: f64, dt: f64) -> Result<AlphaSolution> {
    params.expect_measure(Measure::RiskNeutral)?;
    params.ensure_feller(maturity)?;
    let w_max = params.w_max();
    if !(w >= 0.0 && w < w_max) {
        return Err(Error::WDomain { w, w_max });
    }
    let grid = TimeGrid::new(params.t0, maturity, dt, params.tau)?;
    let n = grid.n_steps();
    let h = grid.dt();
    let half_s2 = 0.5 * params.sigma * params.sigma;
    let (a, b) = (params.a, params.b);

    let mut sol = AlphaSolution {
        params: params.clone(),
        maturity,
        w,
        grid,
        alpha_r: vec![0.0; n + 1],
        alpha_0: vec![0.0; n + 1],
    };
    sol.alpha_r[n] = w;

    let f = |y: f64, g: f64| half_s2 * y * y + a * y - 1.0 - b * g;
    let lag = grid.lag();

    // One delay interval at a time, latest first.
    let mut hi = n;
    while hi > 0 {
        let lo = hi.saturating_sub(lag);
        for cell in (lo..hi).rev() {
            let (g1, gm, g0) = if sol.cell_delayed(cell) {
                (sol.alpha_r[cell + 1 + lag], sol.mid_r(cell + lag), sol.alpha_r[cell + lag])
            } else {
                (0.0, 0.0, 0.0)
            };
            let y1 = sol.alpha_r[cell + 1];
            let k1 = f(y1, g1);
            let k2 = f(y1 - 0.5 * h * k1, gm);
            let k3 = f(y1 - 0.5 * h * k2, gm);
            let k4 = f(y1 - h * k3, g0);
            sol.alpha_r[cell] = y1 - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        hi = lo;
    }

    for cell in (0..n).rev() {
        let inc = params.gamma.integrate_linear(
            sol.grid.node(cell),
            sol.grid.node(cell + 1),
            sol.alpha_r[cell],
            sol.alpha_r[cell + 1],
        );
        sol.alpha_0[cell] = sol.alpha_0[cell + 1] + a * inc;
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevelCurve;
    use crate::riccati::{bounds, phi_closed_form};

    fn q(b: f64) -> ModelParams {
        ModelParams::risk_neutral(1.5, LevelCurve::constant(0.05 / 1.5), b, 0.1, 0.25, 0.0)
    }

    /// `int_t^T Phi(u, T; w, 0) du = (2 / sigma^2) ln z(T - t)` with `z` the
    /// linear second-order solution; independent of the Phi formula.
    fn phi_integral(p: &ModelParams, s: f64, w: f64) -> f64 {
        let s2 = p.sigma * p.sigma;
        let k = (p.a * p.a + 2.0 * s2).sqrt();
        let z = (s2 * w + p.a + k) / (2.0 * k) * ((k - p.a) / 2.0 * s).exp()
            + (-s2 * w - p.a + k) / (2.0 * k) * (-(k + p.a) / 2.0 * s).exp();
        2.0 / s2 * z.ln()
    }

    #[test]
    fn boundary_conditions_hold_exactly() {
        let sol = solve_alpha(&q(0.2), 1.0, 0.3, 1e-3).unwrap();
        let n = sol.grid().n_steps();
        assert_eq!(sol.alpha_r()[n], 0.3);
        assert_eq!(sol.alpha_0()[n], 0.0);
    }

    #[test]
    fn last_interval_matches_closed_form() {
        let p = q(0.2);
        let sol = solve_alpha(&p, 1.0, 0.4, 1e-4).unwrap();
        let n = sol.grid().n_steps();
        let lag = sol.grid().lag();
        for i in (n - lag..=n).step_by(37) {
            let t = sol.grid().node(i);
            let want = phi_closed_form(t, 1.0, 0.4, 0.0, &p).unwrap();
            assert!((sol.alpha_r()[i] - want).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn without_delay_matches_classical_cir_everywhere() {
        let p = q(0.0);
        for &w in &[0.0, 0.35] {
            let sol = solve_alpha(&p, 2.0, w, 1e-3).unwrap();
            for i in (0..=sol.grid().n_steps()).step_by(50) {
                let t = sol.grid().node(i);
                let phi = phi_closed_form(t, 2.0, w, 0.0, &p).unwrap();
                let a0 = p.a * (0.05 / 1.5) * phi_integral(&p, 2.0 - t, w);
                assert!((sol.alpha_r()[i] - phi).abs() < 1e-10);
                assert!((sol.alpha_0()[i] - a0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sandwich_bounds_hold() {
        let p = q(0.2);
        let w = 0.5;
        let sol = solve_alpha(&p, 2.5, w, 1e-3).unwrap();
        let bs = bounds(&p, 2.5, w, 0.05 / 1.5).unwrap();
        for i in 0..=sol.grid().n_steps() {
            let t = sol.grid().node(i);
            let lower = phi_closed_form(t, 2.5, w, 0.0, &p).unwrap();
            let upper = bs.upper_for_interval(sol.interval_of(i));
            assert!(sol.alpha_r()[i] >= lower - 1e-8);
            assert!(sol.alpha_r()[i] <= upper + 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = q(0.2);
        assert!(matches!(solve_alpha(&p, 1.0, p.w_max(), 1e-3), Err(Error::WDomain { .. })));
        assert!(solve_alpha(&p, 1.0, -0.01, 1e-3).is_err());
        assert!(matches!(solve_alpha(&p, 1.0, 0.0, 0.3), Err(Error::Grid(_))));
        let mut phys = p.clone();
        phys.measure = Measure::Physical;
        assert!(matches!(solve_alpha(&phys, 1.0, 0.0, 1e-3), Err(Error::MeasureMismatch { .. })));
    }

    #[test]
    fn gamma_q_is_continuous_at_last_knot() {
        let p = q(0.2);
        let sol = solve_alpha(&p, 1.0, 0.3, 1e-3).unwrap();
        assert_eq!(sol.gamma_q(1.0).unwrap(), 0.2 * 0.3);
        let at_knot = sol.gamma_q(0.75).unwrap();
        let before = sol.gamma_q(0.75 - 1e-9).unwrap();
        assert!((at_knot - 0.06).abs() < 1e-12);
        assert!((before - 0.06).abs() < 1e-8);
        assert!(sol.gamma_q(-0.3).is_err());
        assert!(sol.gamma_q(1.1).is_err());
        let flat = solve_alpha(&q(0.0), 1.0, 0.3, 1e-3).unwrap();
        assert_eq!(flat.gamma_q(0.1).unwrap(), 0.0);
    }

    #[test]
    fn interpolation_agrees_with_nodes() {
        let sol = solve_alpha(&q(0.2), 1.0, 0.1, 1e-3).unwrap();
        let i = 333;
        let t = sol.grid().node(i);
        assert_eq!(sol.alpha_r_at(t).unwrap(), sol.alpha_r()[i]);
        let mid = sol.alpha_r_at(t + 5e-4).unwrap();
        let fine = solve_alpha(&q(0.2), 1.0, 0.1, 5e-4).unwrap();
        assert!((mid - fine.alpha_r()[2 * i + 1]).abs() < 1e-11);
        let a0 = sol.alpha_0_at(t + 5e-4).unwrap();
        assert!((a0 - fine.alpha_0()[2 * i + 1]).abs() < 1e-8);
    }
}
