// The deterministic mean equation against a small Monte Carlo run.
//
// ```bash
// cargo run --example mean_curve
// ```

use delay_cir::mc::{estimate_functional, verify, McConfig};
use delay_cir::sdde::mean_dde;
use delay_cir::{InitialSegment, LevelCurve, ModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.1, 0.25, 0.0);
    let segment = InitialSegment::constant(0.0, 0.25, 0.04)?;

    let mean = mean_dde(&p, &segment, 2.0, 1e-3)?;
    for t in [0.0, 0.25, 0.5, 1.0, 2.0] {
        println!("m({t:.2}) = {:.6}", mean.at(t)?);
    }

    let cfg = McConfig {
        n_paths: 5_000,
        ..McConfig::default()
    };
    let mc = estimate_functional(&p, &segment, 2.0, &cfg, |path| path.terminal())?;
    let report = verify(mean.terminal(), mc);
    println!(
        "MC mean r(2) = {:.6} +- {:.6}, z = {:+.2}, pass = {}",
        mc.mean, mc.stderr, report.z_score, report.pass
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
