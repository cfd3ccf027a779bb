// Simulating the delay SDE and exporting a path as CSV.
//
// ```bash
// cargo run --example simulate_paths
// ```

use delay_cir::sdde::{simulate_path, simulate_path_with, NoiseStream, Scheme};
use delay_cir::{InitialSegment, LevelCurve, ModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::physical(1.0, LevelCurve::constant(0.05), 0.2, 0.1, 0.25, 0.0);
    // A rising history instead of a flat one.
    let segment = InitialSegment::new(vec![-0.25, -0.125, 0.0], vec![0.03, 0.035, 0.04])?;

    for i in 0..5 {
        let path = simulate_path(&p, &segment, 2.0, 1e-3, &NoiseStream::new(7, i))?;
        println!(
            "path {i}: r(T) = {:.5}, int r = {:.5}, sup r = {:.5}, zero hits = {}",
            path.terminal(),
            path.integral(),
            path.sup_so_far().last().unwrap(),
            path.zero_hits()
        );
    }

    // Both schemes coincide while the path stays positive.
    let noise = NoiseStream::new(7, 0);
    let ft = simulate_path_with(&p, &segment, 2.0, 1e-3, &noise, Scheme::FullTruncation)?;
    let refl = simulate_path_with(&p, &segment, 2.0, 1e-3, &noise, Scheme::Reflection)?;
    println!("schemes agree: {}", ft.values() == refl.values());

    let mut csv = Vec::new();
    ft.write_csv(&mut csv)?;
    let text = String::from_utf8(csv)?;
    println!("CSV head:\n{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
