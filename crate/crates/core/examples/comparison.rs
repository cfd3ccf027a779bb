// Common-noise comparison of the delay weights b = 0 and b = 0.2.
//
// ```bash
// cargo run --example comparison
// ```

use delay_cir::mc::{compare_paths, McConfig};
use delay_cir::sdde::{ordering_violations, simulate_coupled, NoiseStream};
use delay_cir::{InitialSegment, LevelCurve, ModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let lo = ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.0, 0.1, 0.25, 0.0);
    let hi = ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.1, 0.25, 0.0);
    let segment = InitialSegment::constant(0.0, 0.25, 0.04)?;

    let (a, b) = simulate_coupled(&lo, &segment, &hi, &segment, 1.0, 1e-3, &NoiseStream::new(3, 0))?;
    println!(
        "one pair: r_lo(T) = {:.5}, r_hi(T) = {:.5}, violations = {}",
        a.terminal(),
        b.terminal(),
        ordering_violations(&a, &b, 1e-12)
    );

    let cfg = McConfig {
        n_paths: 2_000,
        ..McConfig::default()
    };
    let rep = compare_paths(&lo, &segment, &hi, &segment, 1.0, &cfg)?;
    println!(
        "means ordered: {}, violation rate {:.2e}, E r_lo(T) = {:.5}, E r_hi(T) = {:.5}",
        rep.means_ordered(),
        rep.violation_rate(),
        rep.mean_lo.last().unwrap(),
        rep.mean_hi.last().unwrap()
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
