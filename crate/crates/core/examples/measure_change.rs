// Physical to risk-neutral coefficients, the market price of risk and the
// density process along simulated paths.
//
// ```bash
// cargo run --example measure_change
// ```

use delay_cir::mc::{verify_martingale, McConfig};
use delay_cir::measure::{rn_weight, to_risk_neutral, xi_at, RiskPremium};
use delay_cir::sdde::{simulate_path, NoiseStream};
use delay_cir::{InitialSegment, LevelCurve, ModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.1, 0.25, 0.0);
    let segment = InitialSegment::constant(0.0, 0.25, 0.04)?;

    let q = to_risk_neutral(&p, &RiskPremium::single(0.5), 1.0)?;
    println!("a^Q = {}, gamma^Q = {:.6}, b^Q = {}", q.a, q.gamma_at(0.0)?, q.b);
    println!("xi at r = 0.04: {:.6}", xi_at(&p, &q, 0.04, 0.04, 0.0)?);

    // A general premium that also changes the delay weight.
    let general = RiskPremium { psi0: 0.5, psi1: 0.01, psi2: 0.1 };
    let q2 = to_risk_neutral(&p, &general, 1.0)?;
    println!("general premium: a^Q = {}, gamma^Q = {:.6}, b^Q = {}", q2.a, q2.gamma_at(0.0)?, q2.b);

    let path = simulate_path(&p, &segment, 1.0, 1e-3, &NoiseStream::new(1, 0))?;
    let z = rn_weight(&path, &p, &q)?;
    println!("Z_T on one path = {:.6} ({} floored nodes)", z.value(), z.truncations);

    let cfg = McConfig {
        n_paths: 4_000,
        ..McConfig::default()
    };
    let m = verify_martingale(&p, &q, &segment, 1.0, &cfg)?;
    println!(
        "E[Z_T] = {:.4} +- {:.4}, z = {:+.2}",
        m.report.mc.mean, m.report.mc.stderr, m.report.z_score
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
