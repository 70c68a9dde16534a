//! Shared fixtures for the benchmark targets.

use gpperiod_core::{synth, Hyperparams, LightCurve};

/// A reproducible GP-sampled series at fixed hyperparameters.
pub fn fixture_series(n: usize) -> (LightCurve, Hyperparams) {
    let h = Hyperparams::new(1.0, 0.5, 1.0, 0.1).expect("valid hyperparameters");
    let lc = synth::sample_gp_curve(&h, n, (-5.0, 5.0), 42).expect("generated series");
    (lc, h)
}
