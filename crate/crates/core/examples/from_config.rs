// Loading a TOML configuration and pricing from it.
//
// ```bash
// cargo run --example from_config
// ```

use delay_cir::config::load_config;
use delay_cir::pricing::{term_structure, write_curve_csv, RateState};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/canonical.toml"))?;
    println!("physical: {:?}", cfg.params);
    println!("premium:  {:?}", cfg.premium);
    let state = RateState::from_segment(&cfg.segment, &cfg.params_q, cfg.mc.dt)?;
    let curve = term_structure(&cfg.params_q, &state, &cfg.maturities, cfg.mc.dt)?;
    write_curve_csv(&curve, std::io::stdout().lock())?;
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
