//! TOML run configuration.
//!
//! ```toml
//! [model]
//! a = 1.0
//! gamma = 0.05                 # or { times = [0, 1, 2], values = [0.05, 0.06] }
//! b = 0.2
//! sigma = 0.1
//! tau = 0.25
//! t0 = 0.0
//!
//! [segment]
//! constant = 0.04              # or times = [...], values = [...]
//!
//! [premium]
//! psi0 = 0.5
//!
//! [numerics]
//! dt = 1e-3
//! n_paths = 100000
//! seed = 20240501
//!
//! [run]
//! maturities = [1.0]
//! w = [0.0, 0.2]
//! ```
//!
//! The model block holds physical coefficients; the premium maps them to the
//! risk-neutral set used for pricing.

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::mc::McConfig;
use crate::measure::{to_risk_neutral, RiskPremium};
use crate::model::{InitialSegment, LevelCurve, ModelParams};
use crate::sdde::Scheme;

/// Output encoding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    segment: Spanned<RawSegment>,
    #[serde(default)]
    premium: Option<Spanned<RiskPremium>>,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    a: Spanned<f64>,
    gamma: Spanned<RawGamma>,
    b: Spanned<f64>,
    sigma: Spanned<f64>,
    tau: Spanned<f64>,
    #[serde(default)]
    t0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGamma {
    Constant(f64),
    Piecewise { times: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    constant: Option<f64>,
    times: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    dt: Option<Spanned<f64>>,
    n_paths: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    scheme: Option<Scheme>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    maturities: Option<Spanned<Vec<f64>>>,
    w: Option<Vec<f64>>,
    output: Option<PathBuf>,
    format: Option<Format>,
}

/// A fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Physical coefficients from the model block.
    pub params: ModelParams,
    /// Risk-neutral coefficients implied by the premium.
    pub params_q: ModelParams,
    pub segment: InitialSegment,
    pub premium: RiskPremium,
    pub mc: McConfig,
    pub maturities: Vec<f64>,
    pub w: Vec<f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    /// Largest requested maturity.
    pub fn horizon(&self) -> f64 {
        self.maturities.iter().copied().fold(self.params.t0, f64::max)
    }
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

fn at(text: &str, span: Range<usize>, key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {}: {key}: {msg}", line_of(text, span)))
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    let m = &raw.model;

    let run = &raw.run;
    let maturities = match &run.maturities {
        Some(s) => {
            if s.get_ref().is_empty() || s.get_ref().iter().any(|&x| !(x >= m.t0)) {
                return Err(at(text, s.span(), "run.maturities", "maturities must be nonempty and >= t0"));
            }
            s.get_ref().clone()
        }
        None => vec![m.t0 + 1.0],
    };
    let horizon = maturities.iter().copied().fold(m.t0, f64::max);

    let gamma = match m.gamma.get_ref() {
        RawGamma::Constant(v) => LevelCurve::constant(*v),
        RawGamma::Piecewise { times, values } => LevelCurve::piecewise(times, values)
            .map_err(|e| at(text, m.gamma.span(), "model.gamma", e))?,
    };
    let params = ModelParams::physical(
        *m.a.get_ref(),
        gamma,
        *m.b.get_ref(),
        *m.sigma.get_ref(),
        *m.tau.get_ref(),
        m.t0,
    );
    let report = params.validate(horizon);
    if let Some(e) = report.errors.first() {
        let (key, span) = match e.split_whitespace().next() {
            Some("a") => ("model.a", m.a.span()),
            Some("b") => ("model.b", m.b.span()),
            Some("sigma") => ("model.sigma", m.sigma.span()),
            Some("tau") => ("model.tau", m.tau.span()),
            _ => ("model.gamma", m.gamma.span()),
        };
        return Err(at(text, span, key, e));
    }
    if !report.feller_ok {
        return Err(at(
            text,
            m.sigma.span(),
            "model",
            format!("Feller condition sigma^2 <= 2 a gamma(t) fails on [{}, {horizon}]", m.t0),
        ));
    }

    let seg = raw.segment.get_ref();
    let segment = match (seg.constant, &seg.times, &seg.values) {
        (Some(v), None, None) => InitialSegment::constant(params.t0, params.tau, v),
        (None, Some(t), Some(v)) => InitialSegment::new(t.clone(), v.clone()),
        _ => Err(Error::InvalidSegment(
            "give either `constant` or both `times` and `values`".into(),
        )),
    }
    .and_then(|s| s.check_against(&params).map(|_| s))
    .map_err(|e| at(text, raw.segment.span(), "segment", e))?;

    let premium = raw.premium.as_ref().map(|p| *p.get_ref()).unwrap_or_default();
    let params_q = to_risk_neutral(&params, &premium, horizon).map_err(|e| match &raw.premium {
        Some(p) => at(text, p.span(), "premium", e),
        None => Error::Config(format!("premium: {e}")),
    })?;

    let defaults = McConfig::default();
    let n = &raw.numerics;
    let dt = n.dt.as_ref().map_or(defaults.dt, |d| *d.get_ref());
    if let Some(d) = &n.dt {
        crate::model::TimeGrid::new(params.t0, params.t0 + params.tau, dt, params.tau)
            .map_err(|e| at(text, d.span(), "numerics.dt", e))?;
    }
    let mc = McConfig {
        n_paths: n.n_paths.unwrap_or(defaults.n_paths),
        dt,
        seed: n.seed.unwrap_or(defaults.seed),
        workers: n.workers.unwrap_or(defaults.workers),
        scheme: n.scheme.unwrap_or_default(),
        zero_noise: false,
    };

    let w = run.w.clone().unwrap_or_else(|| vec![0.0]);
    let w_max = params_q.w_max();
    if let Some(bad) = w.iter().find(|&&x| !(x >= 0.0 && x < w_max)) {
        return Err(Error::Config(format!(
            "run.w: {}",
            Error::WDomain { w: *bad, w_max }
        )));
    }

    Ok(RunConfig {
        params,
        params_q,
        segment,
        premium,
        mc,
        maturities,
        w,
        output: run.output.clone(),
        format: run.format.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[model]
a = 1.0
gamma = 0.05
b = 0.2
sigma = 0.1
tau = 0.25

[segment]
constant = 0.04
";

    #[test]
    fn minimal_config_loads() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.params.b, 0.2);
        assert_eq!(c.params_q.a, 1.0);
        assert_eq!(c.maturities, vec![1.0]);
        assert_eq!(c.mc.n_paths, 100_000);
        assert_eq!(c.segment.value_at(-0.1).unwrap(), 0.04);
    }

    #[test]
    fn negative_b_cites_the_key_and_line() {
        let e = parse_config(&MINIMAL.replace("b = 0.2", "b = -1")).unwrap_err().to_string();
        assert!(e.contains("model.b") && e.contains("b must be nonnegative") && e.contains("line 5"), "{e}");
    }

    #[test]
    fn missing_tau_is_named() {
        let e = parse_config(&MINIMAL.replace("tau = 0.25\n", "")).unwrap_err().to_string();
        assert!(e.contains("tau"), "{e}");
    }

    #[test]
    fn piecewise_gamma_and_premium() {
        let text = MINIMAL.replace("gamma = 0.05", "gamma = { times = [0.0, 0.5, 3.0], values = [0.05, 0.06] }")
            + "\n[premium]\npsi0 = 0.5\n\n[run]\nmaturities = [0.5, 2.0]\nw = [0.0, 0.2]\nformat = \"json\"\n";
        let c = parse_config(&text).unwrap();
        assert_eq!(c.params.gamma_at(0.5).unwrap(), 0.06);
        assert_eq!(c.params_q.a, 1.5);
        assert_eq!(c.horizon(), 2.0);
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn bad_segment_and_grid_are_rejected() {
        let e = parse_config(&MINIMAL.replace("constant = 0.04", "times = [-0.2, 0.0]\nvalues = [0.04, 0.04]"))
            .unwrap_err()
            .to_string();
        assert!(e.contains("segment"), "{e}");
        let e = parse_config(&(MINIMAL.to_string() + "\n[numerics]\ndt = 0.3\n")).unwrap_err().to_string();
        assert!(e.contains("numerics.dt"), "{e}");
        let e = parse_config(&(MINIMAL.to_string() + "\n[run]\nw = [1.5]\n")).unwrap_err().to_string();
        assert!(e.contains("run.w"), "{e}");
    }

    #[test]
    fn feller_violation_is_reported() {
        let e = parse_config(&MINIMAL.replace("sigma = 0.1", "sigma = 0.5")).unwrap_err().to_string();
        assert!(e.contains("Feller"), "{e}");
    }
}
