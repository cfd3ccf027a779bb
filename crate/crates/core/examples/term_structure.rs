// Bond prices, yields and forward rates at t0 for the reference setup.
//
// ```bash
// cargo run --example term_structure
// ```

use delay_cir::measure::{to_risk_neutral, RiskPremium};
use delay_cir::pricing::{term_structure, RateState};
use delay_cir::{InitialSegment, LevelCurve, ModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.1, 0.25, 0.0);
    let q = to_risk_neutral(&p, &RiskPremium::single(0.5), 5.0)?;
    let segment = InitialSegment::constant(0.0, 0.25, 0.04)?;
    let dt = 1e-3;
    let state = RateState::from_segment(&segment, &q, dt)?;

    let maturities = [0.0, 0.25, 0.5, 1.0, 2.0, 5.0];
    let curve = term_structure(&q, &state, &maturities, dt)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "T", "B", "R", "f");
    for pt in &curve {
        let r = pt.yield_.map_or("-".to_string(), |r| format!("{r:.6}"));
        println!("{:>6.2} {:>10.6} {:>10} {:>10.6}", pt.maturity, pt.bond, r, pt.forward);
    }
    assert!(curve.windows(2).all(|w| w[1].bond <= w[0].bond));
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
