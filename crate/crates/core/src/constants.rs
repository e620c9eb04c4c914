//! Empirical constants, fitted once on the calibration runs recorded beside each value
//! and frozen with 25% headroom. `cargo run --release --example calibrate` refits them.
//! The checks in [`crate::harness`] assert against these.

/// Monotonicity prefactor: `I(t) - I(0) ≤ C_MONO e^{-σ₀ L / (8K)}`.
/// Calibration: `c = (-1, 1, 2)`, `L = 64`, `K = 1`, `ε = 1e-2`, `t_end = 60`, seed 0,
/// `h = 1e-2`; fitted value `2.22e-6`.
pub const C_MONO: f64 = 2.8e-6;

/// Orbital bound: `sup_t dist ≤ A (√ε + L^{-1/8})`.
/// Calibration: the 4×4 sweep over `ε ∈ {1e-4, 1e-3, 1e-2, 5e-2}`, `L ∈ {20, 40, 60, 80}`
/// of [`sweep_base`]; fitted value `1.905e-6` at `h = 1e-2` and at `h = 5e-3`.
pub const ORBITAL_A: f64 = 2.4e-6;

/// Speed drift: `|dx̃_i/dt - c_i| ≤ DRIFT_C (ε^{1/4} + L^{-1/16})`, same sweep; fitted
/// value `2.48e-7`.
pub const DRIFT_C: f64 = 3.1e-7;

/// Distance from the terminal train to the best asymptotic profile.
/// Calibration: `p = (-1, 1.2, 2.5)`, `q = (-5, 0, 5)`, `T = 300`; fitted value `1.45e-12`.
pub const GAMMA: f64 = 1e-10;

/// Terminal sorted speeds against the spectral prediction.
pub const SPEED_TOL: f64 = 1e-3;

/// Largest admissible change of the terminal speeds per unit time.
pub const SETTLE_DRIFT: f64 = 1e-4;

/// Relative drift of the closed-form energy along a report.
pub const E_DRIFT_TOL: f64 = 1e-8;

/// Absolute drift of the grid cubic invariant along a report.
pub const F_DRIFT_TOL: f64 = 1e-5;

/// Base scenario of the calibration sweep; `ε` and `L` are overwritten per cell.
pub fn sweep_base() -> crate::peakon::Scenario {
    crate::peakon::Scenario::new(vec![-1.0, 1.0, 2.0], 20.0, 1e-2, 20.0)
}

pub const SWEEP_EPS: [f64; 4] = [1e-4, 1e-3, 1e-2, 5e-2];
pub const SWEEP_L: [f64; 4] = [20.0, 40.0, 60.0, 80.0];

/// Calibration scenario of the monotonicity constant.
pub fn monotonicity_calibration() -> crate::peakon::Scenario {
    crate::peakon::Scenario::new(vec![-1.0, 1.0, 2.0], 64.0, 1e-2, 60.0)
}

/// Calibration train of the asymptotic-profile constant, run to `ASYMPTOTIC_T`.
pub const ASYMPTOTIC_P: [f64; 3] = [-1.0, 1.2, 2.5];
pub const ASYMPTOTIC_Q: [f64; 3] = [-5.0, 0.0, 5.0];
pub const ASYMPTOTIC_T: f64 = 300.0;
