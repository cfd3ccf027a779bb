//! Monte Carlo estimates of the Feynman-Kac functionals and their comparison
//! with the analytic prices.
//!
//! Path `i` of a run always uses the noise stream `(seed, i)`. Per-path
//! results are collected in index order and reduced sequentially, so every
//! estimate is bitwise reproducible for any number of worker threads.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::rn_weight;
use crate::model::{InitialSegment, Measure, ModelParams};
use crate::sdde::{coupled_simulators, NoiseStream, RatePath, Scheme, Simulator};

/// Run size and reproducibility settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub scheme: Scheme,
    /// Drive every path with zero increments (diagnostic mode).
    #[serde(default)]
    pub zero_noise: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 100_000,
            dt: 1e-3,
            seed: 20240501,
            workers: 0,
            scheme: Scheme::FullTruncation,
            zero_noise: false,
        }
    }
}

impl McConfig {
    fn noise(&self, i: u64) -> NoiseStream {
        if self.zero_noise {
            NoiseStream::zero()
        } else {
            NoiseStream::new(self.seed, i)
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub dt: f64,
    /// Wall time in seconds.
    pub elapsed: f64,
}

/// Analytic value against a Monte Carlo estimate, gated at three standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationReport {
    pub analytic: f64,
    #[serde(flatten)]
    pub mc: McEstimate,
    pub z_score: f64,
    pub pass: bool,
}

/// Passes iff `|z| <= 3`, or on exact equality when the standard error is zero.
pub fn verify(analytic: f64, mc: McEstimate) -> VerificationReport {
    let diff = mc.mean - analytic;
    let (z_score, pass) = if mc.stderr > 0.0 {
        let z = diff / mc.stderr;
        (z, z.abs() <= 3.0)
    } else if diff == 0.0 {
        (0.0, true)
    } else {
        (diff.signum() * f64::INFINITY, false)
    };
    VerificationReport {
        analytic,
        mc,
        z_score,
        pass,
    }
}

fn in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

/// Per-path values `f(path_i)` in index order.
fn per_path<T: Send>(
    sim: &Simulator,
    cfg: &McConfig,
    keep_noise: bool,
    f: impl Fn(&RatePath) -> T + Sync,
) -> Result<Vec<T>> {
    if cfg.n_paths == 0 {
        return Err(Error::Precondition("need at least one path".into()));
    }
    in_pool(cfg.workers, || {
        (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| f(&sim.run(&cfg.noise(i), keep_noise)))
            .collect()
    })
}

/// Two-pass mean and standard error of the mean.
fn summarize(xs: &[f64]) -> (f64, f64) {
    if xs.iter().all(|&x| x == xs[0]) {
        return (xs[0], 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

fn estimate(xs: &[f64], cfg: &McConfig, start: Instant) -> McEstimate {
    let (mean, stderr) = summarize(xs);
    McEstimate {
        mean,
        stderr,
        n_paths: xs.len(),
        seed: cfg.seed,
        dt: cfg.dt,
        elapsed: start.elapsed().as_secs_f64(),
    }
}

fn exact(value: f64, cfg: &McConfig, start: Instant) -> McEstimate {
    McEstimate {
        mean: value,
        stderr: 0.0,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        dt: cfg.dt,
        elapsed: start.elapsed().as_secs_f64(),
    }
}

/// Mean of an arbitrary path functional under the measure of `params`.
pub fn estimate_functional(
    params: &ModelParams,
    segment: &InitialSegment,
    maturity: f64,
    cfg: &McConfig,
    f: impl Fn(&RatePath) -> f64 + Sync,
) -> Result<McEstimate> {
    let start = Instant::now();
    let sim = Simulator::new(params, segment, maturity, cfg.dt, cfg.scheme)?;
    let xs = per_path(&sim, cfg, false, f)?;
    Ok(estimate(&xs, cfg, start))
}

fn fk_setup(
    params: &ModelParams,
    segment: &InitialSegment,
    t_eval: f64,
    maturity: f64,
    w: f64,
    cfg: &McConfig,
) -> Result<Option<(Simulator, usize)>> {
    params.expect_measure(Measure::RiskNeutral)?;
    params.ensure_valid(maturity)?;
    segment.check_against(params)?;
    let w_max = params.w_max();
    if !(w >= 0.0 && w < w_max) {
        return Err(Error::WDomain { w, w_max });
    }
    if !(t_eval >= params.t0 && t_eval <= maturity) {
        return Err(Error::OutOfRange {
            t: t_eval,
            lo: params.t0,
            hi: maturity,
        });
    }
    if maturity == params.t0 {
        return Ok(None);
    }
    let sim = Simulator::new(params, segment, maturity, cfg.dt, cfg.scheme)?;
    let i = sim.grid().index_of(t_eval).ok_or_else(|| {
        Error::Grid(format!("evaluation time {t_eval} is not a simulation node"))
    })?;
    Ok(Some((sim, i)))
}

/// `E^Q[exp(-int_t^T r du - w r(T))]` with `t = t_eval`.
pub fn estimate_fk(
    params: &ModelParams,
    segment: &InitialSegment,
    t_eval: f64,
    maturity: f64,
    w: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let start = Instant::now();
    match fk_setup(params, segment, t_eval, maturity, w, cfg)? {
        None => Ok(exact((-w * segment.value_at(params.t0)?).exp(), cfg, start)),
        Some((sim, i)) => {
            let xs = per_path(&sim, cfg, false, |p| discount(p, i, w))?;
            Ok(estimate(&xs, cfg, start))
        }
    }
}

/// `E^Q[r(T) exp(-int_t^T r du - w r(T))]` with `t = t_eval`.
pub fn estimate_fk_numerator(
    params: &ModelParams,
    segment: &InitialSegment,
    t_eval: f64,
    maturity: f64,
    w: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let start = Instant::now();
    match fk_setup(params, segment, t_eval, maturity, w, cfg)? {
        None => {
            let r = segment.value_at(params.t0)?;
            Ok(exact(r * (-w * r).exp(), cfg, start))
        }
        Some((sim, i)) => {
            let xs = per_path(&sim, cfg, false, |p| p.terminal() * discount(p, i, w))?;
            Ok(estimate(&xs, cfg, start))
        }
    }
}

fn discount(p: &RatePath, i: usize, w: f64) -> f64 {
    let int = p.running_integral();
    (-(int[int.len() - 1] - int[i]) - w * p.terminal()).exp()
}

/// Ratio of the numerator and bond estimators from the same paths, with a
/// delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub stderr: f64,
    pub numerator: McEstimate,
    pub denominator: McEstimate,
}

/// Forward rate `f(t0, T)` as `E[r(T) D] / E[D]`, `D = exp(-int r)`.
pub fn estimate_forward(
    params: &ModelParams,
    segment: &InitialSegment,
    maturity: f64,
    cfg: &McConfig,
) -> Result<RatioEstimate> {
    let start = Instant::now();
    let (sim, i) = fk_setup(params, segment, params.t0, maturity, 0.0, cfg)?.ok_or_else(|| {
        Error::Precondition("forward estimate needs T > t0".into())
    })?;
    let pairs = per_path(&sim, cfg, false, |p| {
        let d = discount(p, i, 0.0);
        (p.terminal() * d, d)
    })?;
    let (ys, xs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let numerator = estimate(&ys, cfg, start);
    let denominator = estimate(&xs, cfg, start);
    let ratio = numerator.mean / denominator.mean;
    let resid: Vec<f64> = ys.iter().zip(&xs).map(|(y, x)| y - ratio * x).collect();
    let (_, se) = summarize(&resid);
    Ok(RatioEstimate {
        ratio,
        stderr: se / denominator.mean,
        numerator,
        denominator,
    })
}

/// Importance-sampled bond price `E^P[Z_T exp(-int r du)]` from paths
/// simulated under the physical coefficients.
pub fn estimate_bond_is(
    params_p: &ModelParams,
    params_q: &ModelParams,
    segment: &InitialSegment,
    maturity: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let start = Instant::now();
    params_p.expect_measure(Measure::Physical)?;
    let sim = Simulator::new(params_p, segment, maturity, cfg.dt, cfg.scheme)?;
    let xs = per_path(&sim, cfg, true, |p| {
        rn_weight(p, params_p, params_q).map(|z| (z.log_z - p.integral()).exp())
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(estimate(&xs, cfg, start))
}

/// Martingale check `E^P[Z_T] = 1`, with the number of floored rate nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleReport {
    #[serde(flatten)]
    pub report: VerificationReport,
    pub truncations: usize,
}

pub fn verify_martingale(
    params_p: &ModelParams,
    params_q: &ModelParams,
    segment: &InitialSegment,
    maturity: f64,
    cfg: &McConfig,
) -> Result<MartingaleReport> {
    let start = Instant::now();
    params_p.expect_measure(Measure::Physical)?;
    let sim = Simulator::new(params_p, segment, maturity, cfg.dt, cfg.scheme)?;
    let ws = per_path(&sim, cfg, true, |p| rn_weight(p, params_p, params_q))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let truncations = ws.iter().map(|w| w.truncations).sum();
    let zs: Vec<f64> = ws.iter().map(|w| w.value()).collect();
    Ok(MartingaleReport {
        report: verify(1.0, estimate(&zs, cfg, start)),
        truncations,
    })
}

/// Common-noise comparison of two coefficient sets that differ only in `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub mean_lo: Vec<f64>,
    pub mean_hi: Vec<f64>,
    /// Simulated (path, node) pairs with `r_hi - r_lo < -1e-12`.
    pub violations: usize,
    pub pairs: usize,
}

impl ComparisonReport {
    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.pairs as f64
    }

    /// `mean_lo <= mean_hi` at every node.
    pub fn means_ordered(&self) -> bool {
        self.mean_lo.iter().zip(&self.mean_hi).all(|(l, h)| l <= h)
    }
}

/// Paths per block of the comparison reduction; fixed so results do not
/// depend on the worker count.
const BLOCK: usize = 256;

pub fn compare_paths(
    params_lo: &ModelParams,
    seg_lo: &InitialSegment,
    params_hi: &ModelParams,
    seg_hi: &InitialSegment,
    maturity: f64,
    cfg: &McConfig,
) -> Result<ComparisonReport> {
    let (lo, hi) = coupled_simulators(params_lo, seg_lo, params_hi, seg_hi, maturity, cfg.dt)?;
    if cfg.n_paths == 0 {
        return Err(Error::Precondition("need at least one path".into()));
    }
    let grid = *lo.grid();
    let len = grid.n_steps() + 1;
    let blocks = cfg.n_paths.div_ceil(BLOCK);
    let partial: Vec<(Vec<f64>, Vec<f64>, usize)> = in_pool(cfg.workers, || {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut s_lo = vec![0.0; len];
                let mut s_hi = vec![0.0; len];
                let mut bad = 0;
                for i in b * BLOCK..((b + 1) * BLOCK).min(cfg.n_paths) {
                    let noise = cfg.noise(i as u64);
                    let dw = noise.increments(grid.n_steps(), grid.dt());
                    let p_lo = lo.run_with(dw.clone(), false);
                    let p_hi = hi.run_with(dw, false);
                    for (k, (l, h)) in p_lo.values().iter().zip(p_hi.values()).enumerate() {
                        s_lo[k] += l;
                        s_hi[k] += h;
                        if k > 0 && h - l < -1e-12 {
                            bad += 1;
                        }
                    }
                }
                (s_lo, s_hi, bad)
            })
            .collect()
    })?;
    let mut mean_lo = vec![0.0; len];
    let mut mean_hi = vec![0.0; len];
    let mut violations = 0;
    for (l, h, bad) in &partial {
        for k in 0..len {
            mean_lo[k] += l[k];
            mean_hi[k] += h[k];
        }
        violations += bad;
    }
    let n = cfg.n_paths as f64;
    mean_lo.iter_mut().chain(mean_hi.iter_mut()).for_each(|m| *m /= n);
    Ok(ComparisonReport {
        times: grid.nodes(),
        mean_lo,
        mean_hi,
        violations,
        pairs: cfg.n_paths * grid.n_steps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevelCurve;

    fn q() -> ModelParams {
        ModelParams::risk_neutral(1.5, LevelCurve::constant(0.05 / 1.5), 0.2, 0.1, 0.25, 0.0)
    }

    fn seg() -> InitialSegment {
        InitialSegment::constant(0.0, 0.25, 0.04).unwrap()
    }

    fn small(n: usize) -> McConfig {
        McConfig {
            n_paths: n,
            dt: 1e-3,
            seed: 11,
            workers: 1,
            scheme: Scheme::FullTruncation,
            zero_noise: false,
        }
    }

    fn est(mean: f64, stderr: f64) -> McEstimate {
        McEstimate { mean, stderr, n_paths: 1, seed: 0, dt: 1e-3, elapsed: 0.0 }
    }

    #[test]
    fn verify_gates() {
        assert!(verify(1.0, est(1.0, 0.0)).pass);
        let r = verify(1.0, est(1.05, 0.01));
        assert!((r.z_score - 5.0).abs() < 1e-9 && !r.pass);
        let r = verify(1.0, est(1.02, 0.01));
        assert!((r.z_score - 2.0).abs() < 1e-9 && r.pass);
        assert!(!verify(1.0, est(1.0 + 1e-15, 0.0)).pass);
    }

    #[test]
    fn zero_horizon_is_exact() {
        let e = estimate_fk(&q(), &seg(), 0.0, 0.0, 0.2, &small(10)).unwrap();
        assert_eq!(e.mean, (-0.2f64 * 0.04).exp());
        assert_eq!(e.stderr, 0.0);
        let e = estimate_fk_numerator(&q(), &seg(), 0.0, 0.0, 0.0, &small(10)).unwrap();
        assert_eq!(e.mean, 0.04);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let a = estimate_fk(&q(), &seg(), 0.0, 0.5, 0.1, &small(300)).unwrap();
        let b = estimate_fk(&q(), &seg(), 0.0, 0.5, 0.1, &McConfig { workers: 3, ..small(300) }).unwrap();
        assert_eq!((a.mean, a.stderr), (b.mean, b.stderr));
    }

    #[test]
    fn zero_noise_gives_discounted_euler_mean() {
        let cfg = McConfig { zero_noise: true, ..small(5) };
        let e = estimate_fk(&q(), &seg(), 0.0, 1.0, 0.0, &cfg).unwrap();
        assert_eq!(e.stderr, 0.0);
        let mut m = vec![0.04; 251];
        for k in 0..1000 {
            let x = m[250 + k];
            m.push(x + (0.05 - 1.5 * x + 0.2 * m[k]) * 1e-3);
        }
        let int: f64 = m[250..].windows(2).map(|w| 0.5e-3 * (w[0] + w[1])).sum();
        assert!((e.mean - (-int).exp()).abs() < 1e-14);
    }

    #[test]
    fn rejects_w_outside_domain() {
        let e = estimate_fk(&q(), &seg(), 0.0, 1.0, 0.7, &small(4));
        assert!(matches!(e, Err(Error::WDomain { .. })));
    }

    #[test]
    fn martingale_is_exact_for_equal_measures() {
        let p = ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.1, 0.25, 0.0);
        let r = verify_martingale(&p, &p, &seg(), 0.5, &small(50)).unwrap();
        assert_eq!(r.report.mc.mean, 1.0);
        assert_eq!(r.report.mc.stderr, 0.0);
        assert!(r.report.pass);
    }

    #[test]
    fn report_serializes_flat() {
        let v = serde_json::to_value(verify(1.0, est(1.0, 0.5))).unwrap();
        for key in ["analytic", "mean", "stderr", "z_score", "pass", "n_paths", "dt", "seed", "elapsed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
