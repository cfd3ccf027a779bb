//! Command-line front end: subcommand dispatch and CSV/JSON emission.
//!
//! Exit codes: 0 on success (and when every verification gate passes),
//! 1 when a verification gate fails, 2 on usage or configuration errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{load_config, Format, RunConfig};
use crate::error::{Error, Result};
use crate::mc::{
    estimate_bond_is, estimate_fk, estimate_fk_numerator, estimate_functional, verify,
    verify_martingale, VerificationReport,
};
use crate::measure::to_risk_neutral;
use crate::model::{ModelParams, TimeGrid};
use crate::pricing::{
    bond_price, forward_curve, term_structure, uniform_maturities, v_q, v_tilde_q, y_q, y_tilde_q,
    RateState,
};
use crate::riccati::{bounds, solve_alpha, solve_beta};
use crate::sdde::{mean_dde, num, NoiseStream, Simulator};

#[derive(Debug, Parser)]
#[command(name = "delaycir", version, about = "Fixed-delay CIR term structure and Monte Carlo verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Maturity; repeat for several. Overrides `run.maturities`.
    #[arg(long = "maturity", global = true, value_name = "T")]
    maturities: Vec<f64>,
    /// Terminal weight; repeat for several. Overrides `run.w`.
    #[arg(long, global = true, value_name = "VALUE")]
    w: Vec<f64>,
    /// Number of Monte Carlo paths (for `simulate`: paths to emit).
    #[arg(long, global = true, value_name = "N")]
    paths: Option<usize>,
    #[arg(long, global = true, value_name = "STEP")]
    dt: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Maturity spacing of the `forward` curve.
    #[arg(long, global = true, value_name = "STEP", default_value_t = 0.01)]
    spacing: f64,
    /// Coefficients used by `simulate` and `mean`.
    #[arg(long, global = true, value_enum, default_value_t = MeasureArg::Physical)]
    measure: MeasureArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Physical,
    RiskNeutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Bond price and yield at t0 for each maturity.
    Price,
    /// Bond price, yield and forward rate at t0 for each maturity.
    Curve,
    /// Forward curve at t0 on a uniform maturity grid up to the last maturity.
    Forward,
    /// Sample paths of the short rate.
    Simulate,
    /// Mean of the short rate from the deterministic delay equation.
    Mean,
    /// Solved alpha coefficients for the last maturity and first w.
    Alpha,
    /// Solved alpha and beta coefficients for the last maturity and first w.
    Beta,
    /// A-priori bounds on alpha_r per delay interval.
    Bounds,
    /// Monte Carlo against analytic values, including the martingale check.
    Verify,
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let cfg = apply_flags(load_config(path)?, cli)?;
    let format = cfg.format;
    let (text, ok) = match cli.command {
        Command::Verify => {
            let suite = verify_suite(&cfg)?;
            let ok = suite.pass;
            (serde_json::to_string_pretty(&suite).expect("report serializes") + "\n", ok)
        }
        cmd => (table(cmd, &cfg, cli)?.render(format), true),
    };
    match &cfg.output {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(ok)
}

/// Applies command-line overrides and re-checks what they can invalidate.
fn apply_flags(mut cfg: RunConfig, cli: &Cli) -> Result<RunConfig> {
    if !cli.maturities.is_empty() {
        if cli.maturities.iter().any(|&m| !(m >= cfg.params.t0)) {
            return Err(Error::Config("--maturity values must be >= t0".into()));
        }
        cfg.maturities = cli.maturities.clone();
    }
    if !cli.w.is_empty() {
        cfg.w = cli.w.clone();
    }
    if let Some(n) = cli.paths {
        cfg.mc.n_paths = n;
    }
    if let Some(dt) = cli.dt {
        cfg.mc.dt = dt;
    }
    if let Some(s) = cli.seed {
        cfg.mc.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.mc.workers = w;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if cli.out.is_some() {
        cfg.output = cli.out.clone();
    }
    let horizon = cfg.horizon();
    cfg.params_q = to_risk_neutral(&cfg.params, &cfg.premium, horizon)?;
    TimeGrid::new(cfg.params.t0, cfg.params.t0 + cfg.params.tau, cfg.mc.dt, cfg.params.tau)?;
    let w_max = cfg.params_q.w_max();
    if let Some(&w) = cfg.w.iter().find(|&&w| !(w >= 0.0 && w < w_max)) {
        return Err(Error::WDomain { w, w_max });
    }
    if cfg.w.is_empty() {
        return Err(Error::Config("need at least one w".into()));
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Int(u64),
    Text(&'static str),
    Missing,
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) => s.serialize_f64(*x),
            Cell::Int(i) => s.serialize_u64(*i),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Missing => s.serialize_none(),
        }
    }
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.header.join(",") + "\n";
                for row in &self.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|c| match c {
                            Cell::Num(x) => num(*x),
                            Cell::Int(i) => i.to_string(),
                            Cell::Text(t) => t.to_string(),
                            Cell::Missing => "—".to_string(),
                        })
                        .collect();
                    s += &cells.join(",");
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.header
                            .iter()
                            .zip(row)
                            .map(|(h, c)| (h.to_string(), serde_json::to_value(c).expect("cell")))
                            .collect()
                    })
                    .collect();
                serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
            }
        }
    }
}

fn nums(xs: &[f64]) -> Vec<Cell> {
    xs.iter().map(|&x| Cell::Num(x)).collect()
}

fn table(cmd: Command, cfg: &RunConfig, cli: &Cli) -> Result<Table> {
    let q = &cfg.params_q;
    let dt = cfg.mc.dt;
    let horizon = cfg.horizon();
    let w = cfg.w[0];
    match cmd {
        Command::Price | Command::Curve => {
            let state = RateState::from_segment(&cfg.segment, q, dt)?;
            let points = term_structure(q, &state, &cfg.maturities, dt)?;
            let mut t = if cmd == Command::Price {
                Table::new(&["T", "B", "R"])
            } else {
                Table::new(&["T", "B", "R", "f"])
            };
            for p in points {
                let mut row = vec![
                    Cell::Num(p.maturity),
                    Cell::Num(p.bond),
                    p.yield_.map_or(Cell::Missing, Cell::Num),
                ];
                if cmd == Command::Curve {
                    row.push(Cell::Num(p.forward));
                }
                t.rows.push(row);
            }
            Ok(t)
        }
        Command::Forward => {
            let state = RateState::from_segment(&cfg.segment, q, dt)?;
            let ms = uniform_maturities(q.t0, horizon, cli.spacing)?;
            let curve = forward_curve(q, &state, &ms, dt)?;
            let mut t = Table::new(&["T", "f"]);
            for (m, f) in curve.maturities.iter().zip(&curve.forwards) {
                t.rows.push(nums(&[*m, *f]));
            }
            Ok(t)
        }
        Command::Simulate => {
            let params = simulation_params(cfg, cli);
            let n = cli.paths.unwrap_or(1);
            let sim = Simulator::new(params, &cfg.segment, horizon, dt, cfg.mc.scheme)?;
            let mut t = if n > 1 {
                Table::new(&["path", "t", "r", "integral_r"])
            } else {
                Table::new(&["t", "r", "integral_r"])
            };
            for i in 0..n as u64 {
                let p = sim.run(&NoiseStream::new(cfg.mc.seed, i), false);
                for (k, (r, int)) in p.values().iter().zip(p.running_integral()).enumerate() {
                    let mut row = nums(&[p.grid().node(k), *r, *int]);
                    if n > 1 {
                        row.insert(0, Cell::Int(i));
                    }
                    t.rows.push(row);
                }
            }
            Ok(t)
        }
        Command::Mean => {
            let m = mean_dde(simulation_params(cfg, cli), &cfg.segment, horizon, dt)?;
            let mut t = Table::new(&["t", "m"]);
            for (time, v) in m.times().iter().zip(m.values()) {
                t.rows.push(nums(&[*time, *v]));
            }
            Ok(t)
        }
        Command::Alpha | Command::Beta => {
            let alpha = solve_alpha(q, horizon, w, dt)?;
            let beta = if cmd == Command::Beta {
                Some(solve_beta(q, &alpha)?)
            } else {
                None
            };
            let mut t = match beta {
                Some(_) => Table::new(&["t", "alpha_r", "alpha_0", "beta_r", "beta_0"]),
                None => Table::new(&["t", "alpha_r", "alpha_0"]),
            };
            for (i, time) in alpha.times().iter().enumerate() {
                let mut row = nums(&[*time, alpha.alpha_r()[i], alpha.alpha_0()[i]]);
                if let Some(b) = &beta {
                    row.extend(nums(&[b.beta_r()[i], b.beta_0()[i]]));
                }
                t.rows.push(row);
            }
            Ok(t)
        }
        Command::Bounds => {
            let bs = bounds(q, horizon, w, q.gamma.sup_on(q.t0, horizon))?;
            let mut t = Table::new(&["j", "w_bar"]);
            for (j, x) in bs.w_bar.iter().enumerate() {
                t.rows.push(vec![Cell::Int(j as u64), Cell::Num(*x)]);
            }
            t.rows.push(vec![Cell::Text("L"), Cell::Num(bs.limit)]);
            Ok(t)
        }
        Command::Verify => unreachable!("verify emits a report"),
    }
}

fn simulation_params<'a>(cfg: &'a RunConfig, cli: &Cli) -> &'a ModelParams {
    match cli.measure {
        MeasureArg::Physical => &cfg.params,
        MeasureArg::RiskNeutral => &cfg.params_q,
    }
}

/// One named gate of the verification suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(flatten)]
    pub report: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncations: Option<usize>,
}

/// All gates of `verify`; `pass` iff every gate passes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySuite {
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Runs the Monte Carlo verification suite of `cfg`.
pub fn verify_suite(cfg: &RunConfig) -> Result<VerifySuite> {
    let (p, q, seg, mc) = (&cfg.params, &cfg.params_q, &cfg.segment, &cfg.mc);
    let dt = mc.dt;
    let t0 = q.t0;
    let state = RateState::from_segment(seg, q, dt)?;
    let r0 = state.r();
    let mut checks = Vec::new();
    let mut push = |name: String, report: VerificationReport, truncations: Option<usize>| {
        checks.push(Check {
            name,
            report,
            truncations,
        })
    };
    for &m in cfg.maturities.iter().filter(|&&m| m > t0) {
        for &w in &cfg.w {
            let alpha = solve_alpha(q, m, w, dt)?;
            let beta = solve_beta(q, &alpha)?;
            let y = y_q(&state, &alpha, q)?;
            let yt = y_tilde_q(&state, &beta, q)?;
            let v = v_q(t0, m, r0, y, w, &alpha)?;
            let vt = v_tilde_q(t0, m, r0, y, yt, w, &alpha, &beta)?;
            push(format!("fk T={m} w={w}"), verify(v, estimate_fk(q, seg, t0, m, w, mc)?), None);
            push(
                format!("fk_numerator T={m} w={w}"),
                verify(vt, estimate_fk_numerator(q, seg, t0, m, w, mc)?),
                None,
            );
        }
    }
    let horizon = cfg.horizon();
    if horizon > t0 {
        let mart = verify_martingale(p, q, seg, horizon, mc)?;
        push(format!("martingale T={horizon}"), mart.report, Some(mart.truncations));
        let alpha0 = solve_alpha(q, horizon, 0.0, dt)?;
        let bond = bond_price(&state, &alpha0, q)?;
        push(
            format!("bond_importance_sampling T={horizon}"),
            verify(bond, estimate_bond_is(p, q, seg, horizon, mc)?),
            None,
        );
        let mean = mean_dde(p, seg, horizon, dt)?.terminal();
        push(
            format!("mean_dde T={horizon}"),
            verify(mean, estimate_functional(p, seg, horizon, mc, |path| path.terminal())?),
            None,
        );
    }
    let pass = checks.iter().all(|c| c.report.pass);
    Ok(VerifySuite { checks, pass })
}
