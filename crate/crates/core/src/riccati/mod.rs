//! Backward delay-Riccati cascade for the exponential-affine coefficients.
//!
//! Under the risk-neutral coefficients, `alpha_r(., T; w)` solves
//!
//! ```text
//! alpha_r' = sigma^2/2 alpha_r^2 + a alpha_r - 1                       on [T - tau, T]
//! alpha_r' = sigma^2/2 alpha_r^2 + a alpha_r - 1 - b alpha_r(t + tau)  on [t0, T - tau]
//! alpha_r(T) = w,   alpha_0(t) = a int_t^T gamma(u) alpha_r(u) du
//! ```
//!
//! and `beta = d alpha / dw` solves the linearised system. Both are
//! integrated backwards one delay interval `[T - (j+1) tau, T - j tau]` at a
//! time; the delayed term on interval `j` is read from the already solved
//! interval `j - 1`.

mod alpha;
mod beta;
mod closed_form;

pub use alpha::{gamma_q_fn, solve_alpha, AlphaSolution};
pub use beta::{solve_beta, BetaSolution};
pub use closed_form::{bounds, k_of, phi_closed_form, BoundSequence};

/// Value at the midpoint of a cell of width `h` of the cubic Hermite
/// interpolant through `(y0, d0)` and `(y1, d1)`.
#[inline]
pub(crate) fn hermite_mid(y0: f64, y1: f64, d0: f64, d1: f64, h: f64) -> f64 {
    0.5 * (y0 + y1) + 0.125 * h * (d0 - d1)
}

/// Cubic Hermite interpolant at fraction `s` in `[0, 1]` of a cell of width `h`.
#[inline]
pub(crate) fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.3 * x * x * x;
        let df = |x: f64| -2.0 + x - 0.9 * x * x;
        let (x0, h) = (0.4, 0.7);
        let mid = hermite_mid(f(x0), f(x0 + h), df(x0), df(x0 + h), h);
        assert!((mid - f(x0 + 0.5 * h)).abs() < 1e-14);
        for &s in &[0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let v = hermite(f(x0), f(x0 + h), df(x0), df(x0 + h), h, s);
            assert!((v - f(x0 + s * h)).abs() < 1e-14);
        }
    }
}
