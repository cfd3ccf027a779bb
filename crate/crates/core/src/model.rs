//! Model coefficients, initial rate history and delay-aligned time grids.
//!
//! The fixed-delay CIR short rate follows
//!
//! ```text
//! dr(t) = [a (gamma(t) - r(t)) + b r(t - tau)] dt + sigma sqrt(r(t)) dW(t),   t >= t0
//! r(t)  = r0(t),                                                           t0 - tau <= t <= t0
//! ```
//!
//! [`ModelParams`] carries one coefficient set together with the measure it
//! lives under, so physical and risk-neutral coefficients cannot be mixed by
//! accident. The long-term level `gamma` is piecewise constant
//! ([`LevelCurve`]), which keeps Feller checks and quadratures exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when matching times against grid nodes.
pub(crate) const TIME_EPS: f64 = 1e-9;

pub(crate) fn same_time(x: f64, y: f64) -> bool {
    (x - y).abs() <= TIME_EPS * (1.0 + x.abs().max(y.abs()))
}

/// Probability measure a coefficient set is expressed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    Physical,
    RiskNeutral,
}

/// Right-continuous piecewise-constant function of time.
///
/// Piece `i` covers `[edge_i, edge_{i+1})`; the last piece is closed at the
/// right end of the declared horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCurve {
    start: f64,
    end: f64,
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl LevelCurve {
    /// A constant level defined for every time.
    pub fn constant(value: f64) -> Self {
        LevelCurve {
            start: f64::NEG_INFINITY,
            end: f64::INFINITY,
            breaks: Vec::new(),
            values: vec![value],
        }
    }

    /// Builds a level from `values.len() + 1` strictly increasing edges.
    pub fn piecewise(edges: &[f64], values: &[f64]) -> Result<Self> {
        if values.is_empty() || edges.len() != values.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "gamma needs one more breakpoint than values (got {} breakpoints, {} values)",
                edges.len(),
                values.len()
            )));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| e.is_nan()) {
            return Err(Error::InvalidParameter(
                "gamma breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("gamma values must be finite".into()));
        }
        Ok(LevelCurve {
            start: edges[0],
            end: edges[edges.len() - 1],
            breaks: edges[1..edges.len() - 1].to_vec(),
            values: values.to_vec(),
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    /// Interior breakpoints.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        self.values.len() == 1
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        (lo >= self.start || same_time(lo, self.start)) && (hi <= self.end || same_time(hi, self.end))
    }

    /// Value at `t`; right-continuous at breakpoints.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if t.is_nan() || (t < self.start && !same_time(t, self.start)) || (t > self.end && !same_time(t, self.end)) {
            return Err(Error::OutOfRange {
                t,
                lo: self.start,
                hi: self.end,
            });
        }
        Ok(self.value_unchecked(t))
    }

    pub(crate) fn value_unchecked(&self, t: f64) -> f64 {
        let idx = self.breaks.partition_point(|&b| b <= t);
        self.values[idx]
    }

    /// Pieces `(from, to, value)` clipped to `[lo, hi]`, in time order.
    pub fn pieces_on(&self, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(1);
        let mut from = lo;
        let first = self.breaks.partition_point(|&b| b <= lo);
        for (k, &br) in self.breaks[first..].iter().enumerate() {
            if br >= hi {
                break;
            }
            out.push((from, br, self.values[first + k]));
            from = br;
        }
        let last = self.breaks.partition_point(|&b| b <= from);
        out.push((from, hi, self.values[last]));
        out
    }

    /// Supremum over `[lo, hi]`.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        self.pieces_on(lo, hi)
            .iter()
            .map(|p| p.2)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Infimum over `[lo, hi]`.
    pub fn inf_on(&self, lo: f64, hi: f64) -> f64 {
        self.pieces_on(lo, hi)
            .iter()
            .map(|p| p.2)
            .fold(f64::INFINITY, f64::min)
    }

    /// Applies `f` to every piece value, keeping breakpoints.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> LevelCurve {
        LevelCurve {
            start: self.start,
            end: self.end,
            breaks: self.breaks.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `∫_lo^hi level(u) g(u) du` where `g` is the linear interpolant of
    /// `g_lo` at `lo` and `g_hi` at `hi`. Exact for that interpolant.
    pub(crate) fn integrate_linear(&self, lo: f64, hi: f64, g_lo: f64, g_hi: f64) -> f64 {
        let width = hi - lo;
        if width <= 0.0 {
            return 0.0;
        }
        if self.breaks.is_empty() {
            return self.values[0] * 0.5 * width * (g_lo + g_hi);
        }
        let lerp = |u: f64| g_lo + (g_hi - g_lo) * (u - lo) / width;
        self.pieces_on(lo, hi)
            .into_iter()
            .map(|(from, to, v)| v * 0.5 * (to - from) * (lerp(from) + lerp(to)))
            .sum()
    }

    /// `∫_lo^hi exp(-k (hi - u)) level(u) du`, exact.
    pub(crate) fn integrate_exp_kernel(&self, lo: f64, hi: f64, k: f64) -> f64 {
        self.pieces_on(lo, hi)
            .into_iter()
            .map(|(from, to, v)| v * ((-k * (hi - to)).exp() - (-k * (hi - from)).exp()) / k)
            .sum()
    }
}

/// One coefficient set of the delay CIR model under a single measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Mean-reversion speed.
    pub a: f64,
    /// Long-term level.
    pub gamma: LevelCurve,
    /// Weight of the delayed rate in the drift.
    pub b: f64,
    pub sigma: f64,
    /// Fixed delay.
    pub tau: f64,
    pub t0: f64,
    pub measure: Measure,
}

/// Outcome of [`ModelParams::validate`]: hard errors plus the Feller flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    /// `sigma^2 <= 2 a gamma(t)` for every `t` in `[t0, horizon]`.
    pub feller_ok: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl ModelParams {
    pub fn new(
        a: f64,
        gamma: LevelCurve,
        b: f64,
        sigma: f64,
        tau: f64,
        t0: f64,
        measure: Measure,
    ) -> Self {
        ModelParams {
            a,
            gamma,
            b,
            sigma,
            tau,
            t0,
            measure,
        }
    }

    pub fn physical(a: f64, gamma: LevelCurve, b: f64, sigma: f64, tau: f64, t0: f64) -> Self {
        Self::new(a, gamma, b, sigma, tau, t0, Measure::Physical)
    }

    pub fn risk_neutral(a: f64, gamma: LevelCurve, b: f64, sigma: f64, tau: f64, t0: f64) -> Self {
        Self::new(a, gamma, b, sigma, tau, t0, Measure::RiskNeutral)
    }

    /// Checks sign constraints and the Feller condition on `[t0, horizon]`.
    /// Never fails; problems are collected in the report.
    pub fn validate(&self, horizon: f64) -> ValidationReport {
        let mut errors = Vec::new();
        if !(self.a > 0.0 && self.a.is_finite()) {
            errors.push("a must be positive".to_string());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            errors.push("sigma must be positive".to_string());
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            errors.push("b must be nonnegative".to_string());
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            errors.push("tau must be positive".to_string());
        }
        if !self.t0.is_finite() {
            errors.push("t0 must be finite".to_string());
        }
        let mut gamma_ok = true;
        if !(horizon >= self.t0) {
            errors.push(format!("horizon {horizon} precedes t0 = {}", self.t0));
            gamma_ok = false;
        } else if !self.gamma.covers(self.t0, horizon) {
            errors.push(format!(
                "gamma is only defined on [{}, {}], horizon needs [{}, {}]",
                self.gamma.start(),
                self.gamma.end(),
                self.t0,
                horizon
            ));
            gamma_ok = false;
        } else if !(self.gamma.inf_on(self.t0, horizon) > 0.0) {
            errors.push("gamma must be positive".to_string());
            gamma_ok = false;
        }

        let feller_ok = gamma_ok
            && errors.is_empty()
            && self
                .gamma
                .pieces_on(self.t0, horizon)
                .iter()
                .all(|&(_, _, g)| self.sigma * self.sigma <= 2.0 * self.a * g);
        ValidationReport { errors, feller_ok }
    }

    /// Fails with the first hard error of [`validate`](Self::validate).
    pub fn ensure_valid(&self, horizon: f64) -> Result<()> {
        match self.validate(horizon).errors.into_iter().next() {
            Some(e) => Err(Error::InvalidParameter(e)),
            None => Ok(()),
        }
    }

    /// Like [`ensure_valid`](Self::ensure_valid) but also requires Feller.
    pub fn ensure_feller(&self, horizon: f64) -> Result<()> {
        let report = self.validate(horizon);
        if let Some(e) = report.errors.into_iter().next() {
            return Err(Error::InvalidParameter(e));
        }
        if !report.feller_ok {
            return Err(Error::InvalidParameter(format!(
                "Feller condition sigma^2 <= 2 a gamma(t) fails on [{}, {horizon}]",
                self.t0
            )));
        }
        Ok(())
    }

    pub fn expect_measure(&self, expected: Measure) -> Result<()> {
        if self.measure != expected {
            return Err(Error::MeasureMismatch {
                expected,
                found: self.measure,
            });
        }
        Ok(())
    }

    /// Exclusive upper bound of the admissible terminal weights,
    /// `(sqrt(a^2 + 2 sigma^2) - a) / sigma^2`.
    pub fn w_max(&self) -> f64 {
        // (k - a)/s^2 == 2/(k + a); the second form avoids cancellation.
        2.0 / ((self.a * self.a + 2.0 * self.sigma * self.sigma).sqrt() + self.a)
    }

    pub fn gamma_at(&self, t: f64) -> Result<f64> {
        self.gamma.value_at(t)
    }

    /// True when the two sets agree on every coefficient except `b`.
    pub fn differs_only_in_b(&self, other: &ModelParams) -> bool {
        self.a == other.a
            && self.gamma == other.gamma
            && self.sigma == other.sigma
            && self.tau == other.tau
            && self.t0 == other.t0
            && self.measure == other.measure
    }

    /// True when the drift coefficients coincide (measure tag ignored).
    pub fn same_coefficients(&self, other: &ModelParams) -> bool {
        self.a == other.a
            && self.gamma == other.gamma
            && self.b == other.b
            && self.sigma == other.sigma
            && self.tau == other.tau
            && self.t0 == other.t0
    }
}

/// Deterministic positive rate history on `[t0 - tau, t0]`, linearly
/// interpolated between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSegment {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl InitialSegment {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::InvalidSegment(
                "need at least two samples and as many values as times".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSegment(
                "sample times must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidSegment(
                "segment values must be finite and strictly positive".into(),
            ));
        }
        Ok(InitialSegment { times, values })
    }

    /// Flat history `value` on `[t0 - tau, t0]`.
    pub fn constant(t0: f64, tau: f64, value: f64) -> Result<Self> {
        Self::new(vec![t0 - tau, t0], vec![value, value])
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Supremum of the segment (attained at a sample).
    pub fn sup(&self) -> f64 {
        let s = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(s.is_finite());
        s
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.start(), self.end());
        if t.is_nan() || (t < lo && !same_time(t, lo)) || (t > hi && !same_time(t, hi)) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let t = t.clamp(lo, hi);
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return Ok(self.values[0]);
        }
        if i >= self.times.len() {
            return Ok(self.values[self.values.len() - 1]);
        }
        let (t1, t2) = (self.times[i - 1], self.times[i]);
        let (v1, v2) = (self.values[i - 1], self.values[i]);
        Ok(v1 + (v2 - v1) * (t - t1) / (t2 - t1))
    }

    /// Checks that the segment spans exactly `[t0 - tau, t0]` of `params`.
    pub fn check_against(&self, params: &ModelParams) -> Result<()> {
        let (lo, hi) = (params.t0 - params.tau, params.t0);
        if !same_time(self.start(), lo) || !same_time(self.end(), hi) {
            return Err(Error::InvalidSegment(format!(
                "segment spans [{}, {}] but the model needs [{lo}, {hi}]",
                self.start(),
                self.end()
            )));
        }
        Ok(())
    }

    /// Samples the segment at `t0 - tau + k dt`, `k = 0..=lag`.
    pub fn resample(&self, t0: f64, lag: usize, dt: f64) -> Result<Vec<f64>> {
        (0..=lag)
            .map(|k| {
                let t = if k == lag { t0 } else { t0 - (lag - k) as f64 * dt };
                self.value_at(t)
            })
            .collect()
    }
}

/// Uniform grid whose step divides the delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    dt: f64,
    n_steps: usize,
    lag: usize,
}

impl TimeGrid {
    /// Grid on `[t_start, t_end]` with `tau / dt` and `(t_end - t_start) / dt`
    /// both integers (to a relative tolerance of 1e-9).
    pub fn new(t_start: f64, t_end: f64, dt: f64, tau: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Grid(format!("step must be positive, got {dt}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Grid(format!("delay must be positive, got {tau}")));
        }
        if !(t_end >= t_start) {
            return Err(Error::Grid(format!("empty interval [{t_start}, {t_end}]")));
        }
        let lag_f = (tau / dt).round();
        if lag_f < 1.0 || ((lag_f * dt - tau).abs() > TIME_EPS * tau) {
            return Err(Error::Grid(format!(
                "delay {tau} is not an integer multiple of dt = {dt}"
            )));
        }
        let lag = lag_f as usize;
        let dt = exact_divisor(tau, lag);
        let span = t_end - t_start;
        let n_f = (span / dt).round();
        if (n_f * dt - span).abs() > TIME_EPS * (1.0 + span) {
            return Err(Error::Grid(format!(
                "interval length {span} is not an integer multiple of dt = {dt}"
            )));
        }
        Ok(TimeGrid {
            t_start,
            t_end,
            dt,
            n_steps: n_f as usize,
            lag,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of steps spanning one delay.
    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            self.t_start + i as f64 * self.dt
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.node(i)).collect()
    }

    /// Index of the node at time `t`, if `t` sits on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t_start) / self.dt;
        let i = x.round();
        if i < 0.0 || i > self.n_steps as f64 || (x - i).abs() > 1e-6 {
            return None;
        }
        Some(i as usize)
    }
}

/// `tau / lag`, nudged by a few ulps when that makes `lag * dt == tau` exact.
fn exact_divisor(tau: f64, lag: usize) -> f64 {
    let base = tau / lag as f64;
    let n = lag as f64;
    if base * n == tau {
        return base;
    }
    let mut up = base;
    let mut down = base;
    for _ in 0..8 {
        up = next_toward(up, f64::INFINITY);
        down = next_toward(down, f64::NEG_INFINITY);
        if up * n == tau {
            return up;
        }
        if down * n == tau {
            return down;
        }
    }
    base
}

fn next_toward(x: f64, dir: f64) -> f64 {
    let bits = x.to_bits();
    if dir > x {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn canonical() -> ModelParams {
        ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.1, 0.25, 0.0)
    }

    #[test]
    fn feller_holds_for_canonical_params() {
        let r = canonical().validate(1.0);
        assert!(r.is_valid());
        assert!(r.feller_ok);
    }

    #[test]
    fn feller_boundary_is_included() {
        let p = ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.1f64.sqrt(), 0.25, 0.0);
        // sigma^2 rounds to exactly 2 a gamma or just below; both sides are 0.1
        assert!(p.sigma * p.sigma <= 0.1 + 1e-17);
        assert!(p.validate(1.0).feller_ok);
    }

    #[test]
    fn feller_fails_when_sigma_too_large() {
        let p = ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.5, 0.25, 0.0);
        let r = p.validate(1.0);
        assert!(r.is_valid());
        assert!(!r.feller_ok);
    }

    #[test]
    fn negative_b_is_a_hard_error() {
        let mut p = canonical();
        p.b = -0.1;
        let r = p.validate(1.0);
        assert_eq!(r.errors, vec!["b must be nonnegative".to_string()]);
        assert!(!r.feller_ok);
    }

    #[test]
    fn validate_is_idempotent() {
        let p = canonical();
        assert_eq!(p.validate(2.0), p.validate(2.0));
    }

    #[test]
    fn feller_uses_every_piece_on_the_horizon() {
        let gamma = LevelCurve::piecewise(&[0.0, 1.0, 2.0], &[0.05, 0.004]).unwrap();
        let p = ModelParams::physical(1.0, gamma, 0.0, 0.1, 0.25, 0.0);
        assert!(p.validate(0.9).feller_ok);
        assert!(!p.validate(1.5).feller_ok);
        assert!(!p.validate(3.0).is_valid());
    }

    #[test]
    fn w_max_matches_extended_precision() {
        let p = ModelParams::risk_neutral(1.5, LevelCurve::constant(0.05), 0.2, 0.1, 0.25, 0.0);
        // (sqrt(2.27) - 1.5) / 0.01 evaluated with 40 digits
        assert_relative_eq!(p.w_max(), 0.665_191_733_193_636_2, max_relative = 1e-14);
        let p = ModelParams::risk_neutral(1.0, LevelCurve::constant(0.05), 0.0, 2f64.sqrt(), 0.25, 0.0);
        assert_relative_eq!(p.w_max(), (5f64.sqrt() - 1.0) / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn w_max_decreases_in_a_and_tends_to_sqrt2_over_sigma() {
        let mut last = f64::INFINITY;
        for i in 1..200 {
            let p = ModelParams::risk_neutral(0.05 * i as f64, LevelCurve::constant(0.05), 0.0, 0.3, 1.0, 0.0);
            assert!(p.w_max() < last);
            last = p.w_max();
        }
        let p = ModelParams::risk_neutral(1.0, LevelCurve::constant(0.05), 0.0, 1e6, 1.0, 0.0);
        assert_relative_eq!(p.w_max() * p.sigma, 2f64.sqrt(), max_relative = 1e-5);
    }

    #[test]
    fn gamma_lookup_is_right_continuous() {
        assert_eq!(canonical().gamma_at(123.0).unwrap(), 0.05);
        let g = LevelCurve::piecewise(&[0.0, 1.0, 2.0], &[0.05, 0.06]).unwrap();
        assert_eq!(g.value_at(0.999).unwrap(), 0.05);
        assert_eq!(g.value_at(1.0).unwrap(), 0.06);
        assert_eq!(g.value_at(2.0).unwrap(), 0.06);
        assert!(matches!(g.value_at(2.5), Err(Error::OutOfRange { .. })));
        assert!(g.value_at(-0.1).is_err());
    }

    #[test]
    fn level_integrals_split_at_breaks() {
        let g = LevelCurve::piecewise(&[0.0, 1.0, 2.0], &[1.0, 3.0]).unwrap();
        // ∫_0.5^1.5 g(u) du with g(u)*1
        assert_relative_eq!(g.integrate_linear(0.5, 1.5, 1.0, 1.0), 2.0, epsilon = 1e-15);
        // ∫_0.5^1.5 g(u) u du = 0.375*1 + 0.625*3
        assert_relative_eq!(g.integrate_linear(0.5, 1.5, 0.5, 1.5), 0.375 + 1.875, epsilon = 1e-15);
        let k = 0.7;
        let want = ((-k * 0.5f64).exp() - (-k * 1.0f64).exp()) / k + 3.0 * (1.0 - (-k * 0.5f64).exp()) / k;
        assert_relative_eq!(g.integrate_exp_kernel(0.5, 1.5, k), want, epsilon = 1e-15);
    }

    #[test]
    fn segment_interpolates_and_checks_span() {
        let s = InitialSegment::new(vec![-0.25, 0.0], vec![0.02, 0.04]).unwrap();
        assert_relative_eq!(s.value_at(-0.125).unwrap(), 0.03, epsilon = 1e-15);
        assert_eq!(s.sup(), 0.04);
        assert!(s.check_against(&canonical()).is_ok());
        let bad = InitialSegment::constant(0.0, 0.5, 0.04).unwrap();
        assert!(bad.check_against(&canonical()).is_err());
        assert!(InitialSegment::new(vec![0.0, 1.0], vec![0.1, 0.0]).is_err());
        assert!(InitialSegment::new(vec![0.0, 0.0], vec![0.1, 0.1]).is_err());
    }

    #[test]
    fn grid_requires_delay_alignment() {
        let g = TimeGrid::new(0.0, 1.0, 1e-3, 0.25).unwrap();
        assert_eq!(g.lag(), 250);
        assert_eq!(g.n_steps(), 1000);
        assert_eq!(g.lag() as f64 * g.dt(), 0.25);
        assert_eq!(g.node(1000), 1.0);
        assert_eq!(g.index_of(0.5), Some(500));
        assert!(TimeGrid::new(0.0, 1.0, 0.3, 0.25).is_err());
        assert!(TimeGrid::new(0.0, 1.0001, 1e-3, 0.25).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.0, 0.25).is_err());
    }

    #[test]
    fn common_grids_store_the_delay_exactly() {
        for &tau in &[0.25, 0.5, 1.0, 0.1, 0.2, 0.3, 0.75, 2.0] {
            for &dt in &[1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2.5e-4, 1e-4] {
                let g = TimeGrid::new(0.0, tau, dt, tau).unwrap();
                assert_eq!(g.lag() as f64 * g.dt(), tau, "tau={tau} dt={dt}");
            }
        }
    }
}
