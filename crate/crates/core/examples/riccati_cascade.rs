// Solving the alpha/beta cascade and checking it against its a-priori bounds.
//
// ```bash
// cargo run --example riccati_cascade
// ```

use delay_cir::riccati::{bounds, phi_closed_form, solve_alpha, solve_beta};
use delay_cir::{LevelCurve, ModelParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // Risk-neutral coefficients of the reference setup.
    let q = ModelParams::risk_neutral(1.5, LevelCurve::constant(1.0 / 30.0), 0.2, 0.1, 0.25, 0.0);
    let (maturity, w) = (2.5, 0.3 * q.w_max());

    let alpha = solve_alpha(&q, maturity, w, 1e-3)?;
    let beta = solve_beta(&q, &alpha)?;
    let bs = bounds(&q, maturity, w, 1.0 / 30.0)?;
    println!("w = {w:.6}, w_max = {:.6}, limit L = {:.6}", q.w_max(), bs.limit);

    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}", "t", "lower", "alpha_r", "upper", "alpha_0", "beta_r");
    let g = alpha.grid();
    for i in (0..=g.n_steps()).step_by(g.lag()) {
        let t = g.node(i);
        let lower = phi_closed_form(t, maturity, w, 0.0, &q)?;
        let upper = bs.upper_for_interval(alpha.interval_of(i));
        println!(
            "{t:>6.2} {lower:>10.6} {:>10.6} {upper:>10.6} {:>10.6} {:>10.6}",
            alpha.alpha_r()[i],
            alpha.alpha_0()[i],
            beta.beta_r()[i]
        );
        assert!(lower <= alpha.alpha_r()[i] + 1e-8 && alpha.alpha_r()[i] <= upper + 1e-8);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
