//! Forward simulation of the delay SDE and the deterministic mean equation.
//!
//! Paths live on a delay-aligned grid, so the delayed rate `r(t - tau)` is
//! always a stored node. The default discretisation is full-truncation
//! Euler:
//!
//! ```text
//! r_{n+1} = max(0, r_n + [a (gamma(t_n) - r_n^+) + b r_{n-L}^+] dt + sigma sqrt(r_n^+) dW_n)
//! ```
//!
//! with `L = tau / dt`. Noise for path `i` comes from a ChaCha8 stream keyed
//! by `(seed, i)`, so every path is a pure function of its index.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InitialSegment, ModelParams, TimeGrid};

/// Euler variant used for the square-root diffusion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Positive part inside drift and diffusion, output floored at zero.
    #[default]
    FullTruncation,
    /// `|r|` inside the diffusion, absolute value of the update.
    Reflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NoiseKind {
    Gaussian,
    Zero,
}

/// Source of Brownian increments for one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
    path_index: u64,
    kind: NoiseKind,
}

impl NoiseStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        NoiseStream {
            seed,
            path_index,
            kind: NoiseKind::Gaussian,
        }
    }

    /// All increments zero; the path becomes the Euler solution of the
    /// deterministic delay equation.
    pub fn zero() -> Self {
        NoiseStream {
            seed: 0,
            path_index: 0,
            kind: NoiseKind::Zero,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// The first `n` increments `dW_k ~ N(0, dt)`.
    pub fn increments(&self, n: usize, dt: f64) -> Vec<f64> {
        match self.kind {
            NoiseKind::Zero => vec![0.0; n],
            NoiseKind::Gaussian => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(self.path_index);
                let sd = dt.sqrt();
                (0..n)
                    .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
        }
    }
}

/// One simulated trajectory on `[t0 - tau, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePath {
    grid: TimeGrid,
    /// History nodes `0..=lag` followed by the simulated nodes.
    nodes: Vec<f64>,
    running_integral: Vec<f64>,
    sup_so_far: Vec<f64>,
    noise: Option<Vec<f64>>,
    zero_hits: usize,
}

impl RatePath {
    /// Simulation grid on `[t0, T]`.
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `r` at the grid nodes of `[t0, T]`.
    pub fn values(&self) -> &[f64] {
        &self.nodes[self.grid.lag()..]
    }

    /// The initial segment on the delay-aligned nodes of `[t0 - tau, t0]`.
    pub fn history(&self) -> &[f64] {
        &self.nodes[..=self.grid.lag()]
    }

    /// Every node on `[t0 - tau, T]`.
    pub fn all_nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Rates on `[t_i - tau, t_i]` for grid node `i`.
    pub fn lookback(&self, i: usize) -> &[f64] {
        &self.nodes[i..=i + self.grid.lag()]
    }

    /// Trapezoidal `int_{t0}^{t_i} r du`.
    pub fn running_integral(&self) -> &[f64] {
        &self.running_integral
    }

    pub fn sup_so_far(&self) -> &[f64] {
        &self.sup_so_far
    }

    /// Brownian increments that drove the path, if they were recorded.
    pub fn noise(&self) -> Option<&[f64]> {
        self.noise.as_deref()
    }

    /// Number of simulated nodes at which the scheme returned exactly zero.
    pub fn zero_hits(&self) -> usize {
        self.zero_hits
    }

    pub fn terminal(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub(crate) fn with_noise(mut self, noise: Vec<f64>) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn integral(&self) -> f64 {
        self.running_integral[self.running_integral.len() - 1]
    }

    /// CSV with columns `t, r, integral_r` over `[t0, T]`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,r,integral_r")?;
        for (i, (r, int)) in self.values().iter().zip(&self.running_integral).enumerate() {
            writeln!(out, "{},{},{}", num(self.grid.node(i)), num(*r), num(*int))?;
        }
        Ok(())
    }
}

/// Formats a float with 17 significant digits so it round-trips.
pub(crate) fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Precomputed per-run data shared by all paths of a Monte Carlo run.
#[derive(Debug, Clone)]
pub(crate) struct Simulator {
    grid: TimeGrid,
    history: Vec<f64>,
    a_gamma: Vec<f64>,
    a: f64,
    b: f64,
    sigma: f64,
    scheme: Scheme,
}

impl Simulator {
    pub(crate) fn new(
        params: &ModelParams,
        segment: &InitialSegment,
        maturity: f64,
        dt: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        if !(maturity > params.t0) {
            return Err(Error::Precondition(format!(
                "maturity {maturity} must exceed t0 = {}",
                params.t0
            )));
        }
        params.ensure_valid(maturity)?;
        segment.check_against(params)?;
        let grid = TimeGrid::new(params.t0, maturity, dt, params.tau)?;
        let history = segment.resample(params.t0, grid.lag(), grid.dt())?;
        let a_gamma = (0..grid.n_steps())
            .map(|i| params.a * params.gamma.value_unchecked(grid.node(i)))
            .collect();
        Ok(Simulator {
            grid,
            history,
            a_gamma,
            a: params.a,
            b: params.b,
            sigma: params.sigma,
            scheme,
        })
    }

    pub(crate) fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub(crate) fn run(&self, noise: &NoiseStream, keep_noise: bool) -> RatePath {
        let dw = noise.increments(self.grid.n_steps(), self.grid.dt());
        self.run_with(dw, keep_noise)
    }

    pub(crate) fn run_with(&self, dw: Vec<f64>, keep_noise: bool) -> RatePath {
        let n = self.grid.n_steps();
        let lag = self.grid.lag();
        let dt = self.grid.dt();
        let mut nodes = Vec::with_capacity(lag + n + 1);
        nodes.extend_from_slice(&self.history);
        let mut running_integral = Vec::with_capacity(n + 1);
        let mut sup_so_far = Vec::with_capacity(n + 1);
        running_integral.push(0.0);
        sup_so_far.push(nodes[lag]);
        let mut zero_hits = 0;
        for k in 0..n {
            let r = nodes[lag + k];
            let lagged = nodes[k];
            let next = match self.scheme {
                Scheme::FullTruncation => {
                    let rp = r.max(0.0);
                    let drift = self.a_gamma[k] - self.a * rp + self.b * lagged.max(0.0);
                    (r + drift * dt + self.sigma * rp.sqrt() * dw[k]).max(0.0)
                }
                Scheme::Reflection => {
                    let drift = self.a_gamma[k] - self.a * r + self.b * lagged;
                    (r + drift * dt + self.sigma * r.abs().sqrt() * dw[k]).abs()
                }
            };
            if next == 0.0 {
                zero_hits += 1;
            }
            nodes.push(next);
            running_integral.push(running_integral[k] + 0.5 * dt * (r + next));
            sup_so_far.push(sup_so_far[k].max(next));
        }
        RatePath {
            grid: self.grid,
            nodes,
            running_integral,
            sup_so_far,
            noise: keep_noise.then_some(dw),
            zero_hits,
        }
    }
}

/// Simulates one path with the default full-truncation scheme.
pub fn simulate_path(
    params: &ModelParams,
    segment: &InitialSegment,
    maturity: f64,
    dt: f64,
    noise: &NoiseStream,
) -> Result<RatePath> {
    simulate_path_with(params, segment, maturity, dt, noise, Scheme::FullTruncation)
}

pub fn simulate_path_with(
    params: &ModelParams,
    segment: &InitialSegment,
    maturity: f64,
    dt: f64,
    noise: &NoiseStream,
    scheme: Scheme,
) -> Result<RatePath> {
    Ok(Simulator::new(params, segment, maturity, dt, scheme)?.run(noise, true))
}

/// Two paths driven by the same increments, for coefficient sets that differ
/// only in `b` with `b_lo <= b_hi` and ordered initial segments.
#[allow(clippy::too_many_arguments)]
pub fn simulate_coupled(
    params_lo: &ModelParams,
    seg_lo: &InitialSegment,
    params_hi: &ModelParams,
    seg_hi: &InitialSegment,
    maturity: f64,
    dt: f64,
    noise: &NoiseStream,
) -> Result<(RatePath, RatePath)> {
    let (lo, hi) = coupled_simulators(params_lo, seg_lo, params_hi, seg_hi, maturity, dt)?;
    let dw = noise.increments(lo.grid.n_steps(), lo.grid.dt());
    Ok((lo.run_with(dw.clone(), true), hi.run_with(dw, true)))
}

pub(crate) fn coupled_simulators(
    params_lo: &ModelParams,
    seg_lo: &InitialSegment,
    params_hi: &ModelParams,
    seg_hi: &InitialSegment,
    maturity: f64,
    dt: f64,
) -> Result<(Simulator, Simulator)> {
    if !params_lo.differs_only_in_b(params_hi) {
        return Err(Error::Precondition(
            "coupled paths need coefficient sets that differ only in b".into(),
        ));
    }
    if !(params_lo.b <= params_hi.b) {
        return Err(Error::Precondition(format!(
            "coupled paths need b_lo <= b_hi (got {} > {})",
            params_lo.b, params_hi.b
        )));
    }
    let ordered = seg_lo
        .times()
        .iter()
        .chain(seg_hi.times())
        .try_fold(true, |ok, &t| Ok::<_, Error>(ok && seg_lo.value_at(t)? <= seg_hi.value_at(t)?))?;
    if !ordered {
        return Err(Error::Precondition(
            "coupled paths need seg_lo <= seg_hi pointwise".into(),
        ));
    }
    let lo = Simulator::new(params_lo, seg_lo, maturity, dt, Scheme::FullTruncation)?;
    let hi = Simulator::new(params_hi, seg_hi, maturity, dt, Scheme::FullTruncation)?;
    Ok((lo, hi))
}

/// Number of simulated nodes where `hi - lo < -tol`.
pub fn ordering_violations(lo: &RatePath, hi: &RatePath, tol: f64) -> usize {
    lo.values()
        .iter()
        .zip(hi.values())
        .filter(|(l, h)| *h - *l < -tol)
        .count()
}

/// Deterministic mean `m(t) = E[r(t)]` on `[t0 - tau, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurve {
    grid: TimeGrid,
    nodes: Vec<f64>,
}

impl MeanCurve {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `m` at the grid nodes of `[t0, T]`.
    pub fn values(&self) -> &[f64] {
        &self.nodes[self.grid.lag()..]
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    pub fn terminal(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// `m(t)` for a grid node `t` in `[t0, T]`.
    pub fn at(&self, t: f64) -> Result<f64> {
        self.grid
            .index_of(t)
            .map(|i| self.values()[i])
            .ok_or(Error::OutOfRange {
                t,
                lo: self.grid.t_start(),
                hi: self.grid.t_end(),
            })
    }

    /// CSV with columns `t, m`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,m")?;
        for (i, m) in self.values().iter().enumerate() {
            writeln!(out, "{},{}", num(self.grid.node(i)), num(*m))?;
        }
        Ok(())
    }
}

/// Steps `m(t+dt) = e^{-a dt} m(t) + int_t^{t+dt} e^{-a(t+dt-u)} (a gamma(u) + b m(u - tau)) du`
/// on consecutive delay intervals. The `gamma` part of the integral is exact
/// for piecewise-constant levels; the delayed part is trapezoidal.
pub fn mean_dde(
    params: &ModelParams,
    segment: &InitialSegment,
    maturity: f64,
    dt: f64,
) -> Result<MeanCurve> {
    params.ensure_valid(maturity)?;
    segment.check_against(params)?;
    let grid = TimeGrid::new(params.t0, maturity, dt, params.tau)?;
    let lag = grid.lag();
    let h = grid.dt();
    let decay = (-params.a * h).exp();
    let mut nodes = segment.resample(params.t0, lag, h)?;
    nodes.reserve(grid.n_steps());
    for k in 0..grid.n_steps() {
        let level = params.a
            * params
                .gamma
                .integrate_exp_kernel(grid.node(k), grid.node(k + 1), params.a);
        let delayed = 0.5 * h * params.b * (decay * nodes[k] + nodes[k + 1]);
        let next = decay * nodes[lag + k] + level + delayed;
        nodes.push(next);
    }
    Ok(MeanCurve { grid, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevelCurve;

    fn canonical(b: f64) -> ModelParams {
        ModelParams::physical(1.0, LevelCurve::constant(0.05), b, 0.1, 0.25, 0.0)
    }

    fn flat() -> InitialSegment {
        InitialSegment::constant(0.0, 0.25, 0.04).unwrap()
    }

    #[test]
    fn one_euler_step_without_noise() {
        let p = simulate_path(&canonical(0.2), &flat(), 1.0, 1e-3, &NoiseStream::zero()).unwrap();
        assert!((p.values()[1] - 0.040018).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_path_is_explicit_euler_of_mean_equation() {
        let params = canonical(0.2);
        let seg = InitialSegment::new(vec![-0.25, -0.1, 0.0], vec![0.03, 0.05, 0.04]).unwrap();
        let p = simulate_path(&params, &seg, 1.0, 1e-3, &NoiseStream::zero()).unwrap();
        let mut m: Vec<f64> = (0..=250).map(|k| seg.value_at(-0.25 + k as f64 * 1e-3).unwrap()).collect();
        for k in 0..1000 {
            let x = m[250 + k];
            m.push(x + (0.05 - x + 0.2 * m[k]) * 1e-3);
        }
        for (a, b) in p.all_nodes().iter().zip(&m) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn replay_is_bitwise_identical() {
        let n = NoiseStream::new(42, 7);
        let a = simulate_path(&canonical(0.2), &flat(), 1.0, 1e-3, &n).unwrap();
        let b = simulate_path(&canonical(0.2), &flat(), 1.0, 1e-3, &n).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&canonical(0.2), &flat(), 1.0, 1e-3, &NoiseStream::new(42, 8)).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn path_bookkeeping() {
        let p = simulate_path(&canonical(0.2), &flat(), 1.0, 1e-3, &NoiseStream::new(1, 0)).unwrap();
        assert_eq!(p.values().len(), 1001);
        assert_eq!(p.history().len(), 251);
        assert_eq!(p.running_integral()[0], 0.0);
        assert!(p.running_integral().windows(2).all(|w| w[1] >= w[0]));
        assert!(p.values().iter().all(|&r| r >= 0.0));
        let max = p.values().iter().copied().fold(0.0, f64::max);
        assert_eq!(p.sup_so_far()[1000], max);
        assert_eq!(p.noise().unwrap().len(), 1000);
        assert_eq!(p.lookback(10).len(), 251);
        assert_eq!(p.lookback(10)[250], p.values()[10]);
    }

    #[test]
    fn reflection_agrees_while_positive() {
        let n = NoiseStream::new(3, 1);
        let a = simulate_path_with(&canonical(0.2), &flat(), 1.0, 1e-3, &n, Scheme::FullTruncation).unwrap();
        let b = simulate_path_with(&canonical(0.2), &flat(), 1.0, 1e-3, &n, Scheme::Reflection).unwrap();
        assert_eq!(a.zero_hits(), 0);
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn rejects_bad_grids_and_horizons() {
        let n = NoiseStream::zero();
        assert!(matches!(simulate_path(&canonical(0.2), &flat(), 1.0, 0.3, &n), Err(Error::Grid(_))));
        assert!(simulate_path(&canonical(0.2), &flat(), 0.0, 1e-3, &n).is_err());
        let off = InitialSegment::constant(0.0, 0.5, 0.04).unwrap();
        assert!(simulate_path(&canonical(0.2), &off, 1.0, 1e-3, &n).is_err());
    }

    #[test]
    fn coupled_identical_and_ordered() {
        let n = NoiseStream::new(9, 4);
        let (x, y) = simulate_coupled(&canonical(0.2), &flat(), &canonical(0.2), &flat(), 1.0, 1e-3, &n).unwrap();
        assert_eq!(x, y);
        let (lo, hi) = simulate_coupled(&canonical(0.0), &flat(), &canonical(0.2), &flat(), 1.0, 1e-3, &n).unwrap();
        assert_eq!(lo.noise(), hi.noise());
        assert_eq!(ordering_violations(&lo, &hi, 1e-12), 0);
        assert!(simulate_coupled(&canonical(0.2), &flat(), &canonical(0.0), &flat(), 1.0, 1e-3, &n).is_err());
        let high = InitialSegment::constant(0.0, 0.25, 0.05).unwrap();
        assert!(simulate_coupled(&canonical(0.0), &high, &canonical(0.2), &flat(), 1.0, 1e-3, &n).is_err());
    }

    #[test]
    fn mean_without_delay_is_exponential_relaxation() {
        let m = mean_dde(&canonical(0.0), &flat(), 2.0, 1e-4).unwrap();
        for (i, v) in m.values().iter().enumerate().step_by(997) {
            let t = m.grid().node(i);
            let want = 0.05 + (0.04 - 0.05) * (-t).exp();
            assert!((v - want).abs() < 1e-8);
        }
        assert_eq!(m.values()[0], 0.04);
    }

    #[test]
    fn mean_with_delay_converges_in_dt() {
        let coarse = mean_dde(&canonical(0.2), &flat(), 1.0, 1e-3).unwrap().terminal();
        let fine = mean_dde(&canonical(0.2), &flat(), 1.0, 1e-4).unwrap().terminal();
        assert!((coarse - fine).abs() < 1e-8);
        assert!(fine > 0.05);
    }
}
