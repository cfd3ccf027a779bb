//! Term-structure toolkit for the fixed-delay CIR short-rate model
//!
//! `dr = [a (gamma(t) - r) + b r(t - tau)] dt + sigma sqrt(r) dW`.
//!
//! Runnable examples, one per capability:
//!
//! ```bash
//! cargo run --example term_structure   # bond prices, yields, forwards
//! cargo run --example riccati_cascade  # alpha/beta coefficients and their bounds
//! cargo run --example simulate_paths   # path simulation and CSV export
//! cargo run --example mean_curve       # deterministic mean vs Monte Carlo
//! cargo run --example measure_change   # P to Q and the density process
//! cargo run --example verify_pricing   # Feynman-Kac Monte Carlo checks
//! cargo run --example comparison       # common-noise ordering in b
//! cargo run --example from_config      # TOML-driven pricing
//! ```

pub mod cli;
pub mod config;
pub mod error;
pub mod mc;
pub mod measure;
pub mod model;
pub mod riccati;
pub mod pricing;
pub mod sdde;

pub use error::{Error, Result};
pub use model::{InitialSegment, LevelCurve, Measure, ModelParams, TimeGrid, ValidationReport};
