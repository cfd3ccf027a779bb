//! Exponential-affine bond prices, yields and instantaneous forward rates.
//!
//! With `alpha = alpha(., T; 0)` and `beta = beta(., T; 0)` solved on `[t0, T]`,
//!
//! ```text
//! B(t, T) = exp(-alpha_0(t) - alpha_r(t) r(t) - y(t))
//! f(t, T) = beta_0(t) + beta_r(t) r(t) + y~(t)
//! y(t)    = int_{t-tau}^{t} 1{u <= T - tau} b alpha_r(u + tau) r(u) du
//! ```
//!
//! and `y~` is `y` with `beta_r` in place of `alpha_r`. All integrals are
//! trapezoidal on the delay-aligned grid of the Riccati solution.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{same_time, InitialSegment, Measure, ModelParams};
use crate::riccati::{solve_alpha, solve_beta, AlphaSolution, BetaSolution};
use crate::sdde::{num, RatePath};

/// Current time, rate and delay-window history `r` on `[t - tau, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateState {
    t: f64,
    dt: f64,
    lookback: Vec<f64>,
}

impl RateState {
    /// `lookback[k] = r(t - tau + k dt)`; the last entry is `r(t)`.
    pub fn new(t: f64, dt: f64, lookback: Vec<f64>) -> Result<Self> {
        if lookback.len() < 2 {
            return Err(Error::Precondition("lookback needs at least two nodes".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Grid(format!("step must be positive, got {dt}")));
        }
        if lookback.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::Precondition("lookback rates must be nonnegative".into()));
        }
        Ok(RateState { t, dt, lookback })
    }

    /// State at `t0`, with the initial segment as history.
    pub fn from_segment(segment: &InitialSegment, params: &ModelParams, dt: f64) -> Result<Self> {
        segment.check_against(params)?;
        let grid = crate::model::TimeGrid::new(params.t0, params.t0 + params.tau, dt, params.tau)?;
        let values = segment.resample(params.t0, grid.lag(), grid.dt())?;
        Self::new(params.t0, grid.dt(), values)
    }

    /// State at grid node `i` of a simulated path.
    pub fn from_path(path: &RatePath, i: usize) -> Result<Self> {
        let g = path.grid();
        if i > g.n_steps() {
            return Err(Error::OutOfRange {
                t: g.t_start() + i as f64 * g.dt(),
                lo: g.t_start(),
                hi: g.t_end(),
            });
        }
        Self::new(g.node(i), g.dt(), path.lookback(i).to_vec())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn r(&self) -> f64 {
        self.lookback[self.lookback.len() - 1]
    }

    pub fn lookback(&self) -> &[f64] {
        &self.lookback
    }
}

/// One point of the term structure at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub maturity: f64,
    pub bond: f64,
    /// `None` at `T = t`, where the yield is undefined.
    pub yield_: Option<f64>,
    pub forward: f64,
}

/// Node of `state.t` on the Riccati grid, after checking the steps agree.
fn anchor(state: &RateState, alpha: &AlphaSolution) -> Result<usize> {
    let g = alpha.grid();
    if !same_time(state.dt, g.dt()) || state.lookback.len() != g.lag() + 1 {
        return Err(Error::Grid(format!(
            "rate history step {} does not match the Riccati grid step {}",
            state.dt,
            g.dt()
        )));
    }
    g.index_of(state.t).ok_or_else(|| {
        Error::Grid(format!(
            "evaluation time {} is not a node of the Riccati grid on [{}, {}]",
            state.t,
            g.t_start(),
            g.t_end()
        ))
    })
}

/// `int b kernel(u + tau) r(u) du` over `[t - tau, t]` clipped at `T - tau`.
fn delayed_integral(state: &RateState, alpha: &AlphaSolution, kernel: &[f64]) -> Result<f64> {
    let i = anchor(state, alpha)?;
    let b = alpha.params().b;
    let n = alpha.grid().n_steps();
    let last = (n - i).min(alpha.grid().lag());
    if b == 0.0 || last == 0 {
        return Ok(0.0);
    }
    let r = &state.lookback;
    let g = |k: usize| kernel[i + k] * r[k];
    let inner: f64 = (1..last).map(g).sum();
    Ok(b * state.dt * (0.5 * (g(0) + g(last)) + inner))
}

fn check_q(params: &ModelParams, alpha: &AlphaSolution) -> Result<()> {
    params.expect_measure(Measure::RiskNeutral)?;
    if !params.same_coefficients(alpha.params()) {
        return Err(Error::Precondition(
            "Riccati solution was built from different coefficients".into(),
        ));
    }
    Ok(())
}

/// `y^Q(t, T; w)`.
pub fn y_q(state: &RateState, alpha: &AlphaSolution, params: &ModelParams) -> Result<f64> {
    check_q(params, alpha)?;
    delayed_integral(state, alpha, alpha.alpha_r())
}

/// `y~^Q(t, T; w)`, the `beta_r`-weighted counterpart of [`y_q`].
pub fn y_tilde_q(state: &RateState, beta: &BetaSolution, params: &ModelParams) -> Result<f64> {
    check_q(params, beta.alpha())?;
    delayed_integral(state, beta.alpha(), beta.beta_r())
}

fn check_w(w: f64, alpha: &AlphaSolution, maturity: f64, t: f64) -> Result<()> {
    if w != alpha.w() || maturity != alpha.maturity() {
        return Err(Error::Precondition(format!(
            "Riccati solution is for (T = {}, w = {}), asked for (T = {maturity}, w = {w})",
            alpha.maturity(),
            alpha.w()
        )));
    }
    if t > maturity {
        return Err(Error::Precondition(format!("t = {t} exceeds T = {maturity}")));
    }
    Ok(())
}

/// `v^Q = exp(-alpha_0 - alpha_r r - y)`, and `exp(-w r - y)` at `t = T`.
pub fn v_q(t: f64, maturity: f64, r: f64, y: f64, w: f64, alpha: &AlphaSolution) -> Result<f64> {
    check_w(w, alpha, maturity, t)?;
    if t == maturity {
        return Ok((-w * r - y).exp());
    }
    Ok((-alpha.alpha_0_at(t)? - alpha.alpha_r_at(t)? * r - y).exp())
}

/// `v~^Q = (beta_0 + r beta_r + y~) exp(-alpha_0 - alpha_r r - y)`, and
/// `(r + y~) exp(-w r - y)` at `t = T`.
#[allow(clippy::too_many_arguments)]
pub fn v_tilde_q(
    t: f64,
    maturity: f64,
    r: f64,
    y: f64,
    y_tilde: f64,
    w: f64,
    alpha: &AlphaSolution,
    beta: &BetaSolution,
) -> Result<f64> {
    check_w(w, alpha, maturity, t)?;
    check_w(w, beta.alpha(), maturity, t)?;
    if t == maturity {
        return Ok((r + y_tilde) * (-w * r - y).exp());
    }
    let g = beta.grid();
    let (b0, br) = match g.index_of(t) {
        Some(i) => (beta.beta_0()[i], beta.beta_r()[i]),
        None => {
            return Err(Error::Grid(format!("t = {t} is not a node of the beta grid")));
        }
    };
    Ok((b0 + r * br + y_tilde) * v_q(t, maturity, r, y, w, alpha)?)
}

fn check_zero_w(alpha: &AlphaSolution) -> Result<()> {
    if alpha.w() != 0.0 {
        return Err(Error::Precondition(format!(
            "bond pricing needs the w = 0 solution, got w = {}",
            alpha.w()
        )));
    }
    Ok(())
}

/// Zero-coupon bond price `B(t, T)`.
pub fn bond_price(state: &RateState, alpha0: &AlphaSolution, params: &ModelParams) -> Result<f64> {
    check_zero_w(alpha0)?;
    Ok((-log_discount(state, alpha0, params)?).exp())
}

/// `alpha_0 + alpha_r r + y = -ln B`.
fn log_discount(state: &RateState, alpha0: &AlphaSolution, params: &ModelParams) -> Result<f64> {
    let y = y_q(state, alpha0, params)?;
    let i = anchor(state, alpha0)?;
    Ok(alpha0.alpha_0()[i] + alpha0.alpha_r()[i] * state.r() + y)
}

/// Yield to maturity `-ln B / (T - t)`.
pub fn yield_to_maturity(bond: f64, t: f64, maturity: f64) -> Result<f64> {
    if !(maturity > t) {
        return Err(Error::Precondition(format!(
            "yield undefined for T = {maturity} <= t = {t}"
        )));
    }
    if !(bond > 0.0) {
        return Err(Error::Precondition(format!("yield needs a positive price, got {bond}")));
    }
    Ok(-bond.ln() / (maturity - t))
}

/// Yield from the affine representation `(alpha_0 + alpha_r r + y) / (T - t)`.
pub fn yield_affine(state: &RateState, alpha0: &AlphaSolution, params: &ModelParams) -> Result<f64> {
    check_zero_w(alpha0)?;
    let maturity = alpha0.maturity();
    if !(maturity > state.t) {
        return Err(Error::Precondition(format!(
            "yield undefined for T = {maturity} <= t = {}",
            state.t
        )));
    }
    Ok(log_discount(state, alpha0, params)? / (maturity - state.t))
}

/// Instantaneous forward rate `f(t, T) = beta_0 + beta_r r + y~`; equals
/// `r(T)` at `t = T`.
pub fn forward_rate(
    state: &RateState,
    alpha0: &AlphaSolution,
    beta0: &BetaSolution,
    params: &ModelParams,
) -> Result<f64> {
    check_zero_w(alpha0)?;
    if beta0.w() != 0.0 || beta0.maturity() != alpha0.maturity() {
        return Err(Error::Precondition(
            "forward rate needs alpha and beta for the same maturity at w = 0".into(),
        ));
    }
    let yt = y_tilde_q(state, beta0, params)?;
    let i = anchor(state, alpha0)?;
    Ok(beta0.beta_0()[i] + beta0.beta_r()[i] * state.r() + yt)
}

/// Bond price, yield and forward rate at `state.t` for one maturity.
pub fn curve_point(
    params: &ModelParams,
    state: &RateState,
    maturity: f64,
    dt: f64,
) -> Result<CurvePoint> {
    let alpha = solve_alpha(params, maturity, 0.0, dt)?;
    let beta = solve_beta(params, &alpha)?;
    let bond = bond_price(state, &alpha, params)?;
    let yield_ = if maturity > state.t {
        Some(yield_affine(state, &alpha, params)?)
    } else {
        None
    };
    Ok(CurvePoint {
        maturity,
        bond,
        yield_,
        forward: forward_rate(state, &alpha, &beta, params)?,
    })
}

/// [`curve_point`] for each maturity, in the given order.
pub fn term_structure(
    params: &ModelParams,
    state: &RateState,
    maturities: &[f64],
    dt: f64,
) -> Result<Vec<CurvePoint>> {
    maturities
        .iter()
        .map(|&m| curve_point(params, state, m, dt))
        .collect()
}

/// CSV with columns `T, B, R, f`; an undefined yield is written as `—`.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], mut out: W) -> Result<()> {
    writeln!(out, "T,B,R,f")?;
    for p in points {
        let r = p.yield_.map_or_else(|| "—".to_string(), num);
        writeln!(out, "{},{},{},{}", num(p.maturity), num(p.bond), r, num(p.forward))?;
    }
    Ok(())
}

/// `u -> f(t, u)` sampled on increasing maturities starting at `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardCurve {
    pub t: f64,
    pub maturities: Vec<f64>,
    pub forwards: Vec<f64>,
}

impl ForwardCurve {
    /// CSV with columns `T, f`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "T,f")?;
        for (m, f) in self.maturities.iter().zip(&self.forwards) {
            writeln!(out, "{},{}", num(*m), num(*f))?;
        }
        Ok(())
    }
}

/// `t, t + spacing, ..., t_end`; `t_end - t` must be a multiple of `spacing`.
pub fn uniform_maturities(t: f64, t_end: f64, spacing: f64) -> Result<Vec<f64>> {
    let n_f = ((t_end - t) / spacing).round();
    if !(spacing > 0.0) || n_f < 0.0 || !same_time(t + n_f * spacing, t_end) {
        return Err(Error::Grid(format!(
            "[{t}, {t_end}] is not a whole number of steps of {spacing}"
        )));
    }
    let n = n_f as usize;
    Ok((0..=n)
        .map(|k| if k == n { t_end } else { t + k as f64 * spacing })
        .collect())
}

/// Forward rates `f(t, u)` at the given maturities (each solved separately).
pub fn forward_curve(
    params: &ModelParams,
    state: &RateState,
    maturities: &[f64],
    dt: f64,
) -> Result<ForwardCurve> {
    let forwards = maturities
        .iter()
        .map(|&m| {
            let alpha = solve_alpha(params, m, 0.0, dt)?;
            let beta = solve_beta(params, &alpha)?;
            forward_rate(state, &alpha, &beta, params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForwardCurve {
        t: state.t,
        maturities: maturities.to_vec(),
        forwards,
    })
}

/// `exp(-int_t^T f(t, u) du)` by the trapezoidal rule on the curve samples.
pub fn bond_from_forward(state: &RateState, curve: &ForwardCurve) -> Result<f64> {
    let m = &curve.maturities;
    if m.is_empty() || m.len() != curve.forwards.len() {
        return Err(Error::Precondition("forward curve is empty".into()));
    }
    if !same_time(m[0], state.t) || !same_time(curve.t, state.t) {
        return Err(Error::Precondition(format!(
            "forward curve starts at {} but the state is at {}",
            m[0], state.t
        )));
    }
    let integral: f64 = m
        .windows(2)
        .zip(curve.forwards.windows(2))
        .map(|(u, f)| 0.5 * (u[1] - u[0]) * (f[0] + f[1]))
        .sum();
    Ok((-integral).exp())
}
