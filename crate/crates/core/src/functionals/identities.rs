//! Time-derivative identities for weighted energies along the flow.
//!
//! With `h = (1 - ∂²)⁻¹(u² + u_x²/2)` the local conservation laws give
//!
//! `d/dt ∫(u² + u_x²) g = ∫ (u u_x² + 2 u h) g'`
//!
//! `d/dt ∫(u³ + u u_x²) g = ∫ (u⁴/4 + u² u_x² + u² h + h² - h_x²) g'`.
//!
//! A second form of the first identity, `∫(u³ + 4u u_x²)g' - ∫u³g''' - 2∫u h g'`, is
//! also evaluated; it does not hold (its residual stays O(1) under refinement).

use serde::{Deserialize, Serialize};

use super::helmholtz::helmholtz_inverse;
use super::weight::Weight;
use crate::dynamics::{integrate_with, IntegratorOptions, Trajectory};
use crate::error::{Error, Result};
use crate::peakon::{sample_on_grid, Grid, GridField, PeakonTrain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// Centered difference of `∫(u² + u_x²) g`.
    pub lhs_energy: f64,
    pub rhs_energy: f64,
    pub residual_energy: f64,
    pub rhs_energy_alt: f64,
    pub residual_energy_alt: f64,
    /// Centered difference of `∫(u³ + u u_x²) g`.
    pub lhs_cubic: f64,
    pub rhs_cubic: f64,
    pub residual_cubic: f64,
}

/// `(∫(u² + u_x²) g, ∫(u³ + u u_x²) g)`.
pub fn weighted_energies(f: &GridField, g: &dyn Weight) -> (f64, f64) {
    let mut out = [0.0; 2];
    f.integrate_into(&[], &mut out, |p, _, acc| {
        let w = g.value(p.x);
        let e = p.u * p.u + p.ux * p.ux;
        acc[0] = w * e;
        acc[1] = w * p.u * e;
    });
    (out[0], out[1])
}

/// Right-hand sides `(energy, energy_alt, cubic)` at one field.
pub fn identity_rhs(f: &GridField, g: &dyn Weight) -> (f64, f64, f64) {
    let v = f.density(|p| p.u * p.u + 0.5 * p.ux * p.ux);
    let hf = helmholtz_inverse(&v);
    let mut out = [0.0; 3];
    f.integrate_into(&[&hf.u, &hf.ux], &mut out, |p, aux, acc| {
        let (h, hx) = (aux[0], aux[1]);
        let g1 = g.d1(p.x);
        let (u, ux2) = (p.u, p.ux * p.ux);
        acc[0] = (u * ux2 + 2.0 * u * h) * g1;
        acc[1] = (u * u * u + 4.0 * u * ux2 - 2.0 * u * h) * g1 - u * u * u * g.d3(p.x);
        acc[2] = (0.25 * u * u * u * u + u * u * ux2 + u * u * h + h * h - hx * hx) * g1;
    });
    (out[0], out[1], out[2])
}

/// Trajectory sampled at `t - dt`, `t`, `t + dt`.
pub fn identity_trajectory(
    train: &PeakonTrain,
    t: f64,
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(dt > 0.0) || t - dt < 0.0 {
        return Err(Error::InvalidScenario(format!(
            "need 0 < dt <= t, got t = {t}, dt = {dt}"
        )));
    }
    let times = if t - dt == 0.0 {
        vec![0.0, t, t + dt]
    } else {
        vec![t - dt, t, t + dt]
    };
    integrate_with(train, t + dt, opts, &times)
}

fn state_at(traj: &Trajectory, t: f64) -> Result<&PeakonTrain> {
    traj.times
        .iter()
        .position(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
        .map(|i| &traj.states[i])
        .ok_or_else(|| Error::InvalidScenario(format!("trajectory has no sample at t = {t}")))
}

/// Centered-difference residuals of the identities at time `t` on grids of spacing `h`
/// padded by `pad` around the three states.
pub fn derivative_identity_check(
    traj: &Trajectory,
    g: &dyn Weight,
    t: f64,
    dt: f64,
    h: f64,
    pad: f64,
) -> Result<IdentityResiduals> {
    let before = state_at(traj, t - dt)?;
    let now = state_at(traj, t)?;
    let after = state_at(traj, t + dt)?;
    let lo = [before, now, after]
        .iter()
        .map(|s| s.positions()[0])
        .fold(f64::INFINITY, f64::min);
    let hi = [before, now, after]
        .iter()
        .map(|s| s.positions()[s.len() - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    let grid = Grid::covering(lo - pad, hi + pad, h)?;
    let (e0, f0) = weighted_energies(&sample_on_grid(before, &grid), g);
    let (e1, f1) = weighted_energies(&sample_on_grid(after, &grid), g);
    let (rhs_energy, rhs_energy_alt, rhs_cubic) = identity_rhs(&sample_on_grid(now, &grid), g);
    let lhs_energy = (e1 - e0) / (2.0 * dt);
    let lhs_cubic = (f1 - f0) / (2.0 * dt);
    Ok(IdentityResiduals {
        lhs_energy,
        rhs_energy,
        residual_energy: lhs_energy - rhs_energy,
        rhs_energy_alt,
        residual_energy_alt: lhs_energy - rhs_energy_alt,
        lhs_cubic,
        rhs_cubic,
        residual_cubic: lhs_cubic - rhs_cubic,
    })
}
