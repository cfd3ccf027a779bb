// Monte Carlo Feynman-Kac estimates against the exponential-affine prices.
//
// ```bash
// cargo run --release --example verify_pricing
// ```

use delay_cir::mc::{estimate_fk, estimate_forward, verify, McConfig};
use delay_cir::pricing::{bond_price, forward_rate, RateState};
use delay_cir::riccati::{solve_alpha, solve_beta};
use delay_cir::{InitialSegment, LevelCurve, ModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = ModelParams::risk_neutral(1.5, LevelCurve::constant(1.0 / 30.0), 0.2, 0.1, 0.25, 0.0);
    let segment = InitialSegment::constant(0.0, 0.25, 0.04)?;
    let cfg = McConfig {
        n_paths: 5_000,
        ..McConfig::default()
    };
    let state = RateState::from_segment(&segment, &q, cfg.dt)?;

    let alpha = solve_alpha(&q, 1.0, 0.0, cfg.dt)?;
    let beta = solve_beta(&q, &alpha)?;
    let bond = bond_price(&state, &alpha, &q)?;
    let report = verify(bond, estimate_fk(&q, &segment, 0.0, 1.0, 0.0, &cfg)?);
    println!("{}", serde_json::to_string_pretty(&report)?);

    let f = forward_rate(&state, &alpha, &beta, &q)?;
    let ratio = estimate_forward(&q, &segment, 1.0, &cfg)?;
    println!(
        "forward f(0, 1): analytic {f:.6}, Monte Carlo {:.6} +- {:.6}",
        ratio.ratio, ratio.stderr
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
