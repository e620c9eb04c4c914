//! Multipeakon Hamiltonian flow, its conserved energy, and the spectral data
//! governing long-time speeds.

mod integrator;
pub mod jacobi;
mod spectral;

use serde::{Deserialize, Serialize};

pub use integrator::{integrate, integrate_with, IntegratorOptions, IntegratorStats, DEFAULT_DELTA_MIN};
pub use spectral::{asymptotic_matrix, eigenvalues_real, SpectralData};

use crate::peakon::{gram_inner, sgn, PeakonTrain};

/// `(q̇, ṗ)` of the multipeakon system.
pub fn ode_rhs(train: &PeakonTrain) -> (Vec<f64>, Vec<f64>) {
    let y = train.to_state();
    let mut f = vec![0.0; y.len()];
    ode_rhs_state(&y, &mut f);
    let n = train.len();
    (f[..n].to_vec(), f[n..].to_vec())
}

/// Right-hand side on the flat state `[q, p]`.
pub(crate) fn ode_rhs_state(y: &[f64], out: &mut [f64]) {
    let n = y.len() / 2;
    let (q, p) = y.split_at(n);
    for i in 0..n {
        let mut qd = 0.0;
        let mut pd = 0.0;
        for j in 0..n {
            let d = q[i] - q[j];
            let e = (-d.abs()).exp();
            qd += p[j] * e;
            pd += p[j] * sgn(d) * e;
        }
        out[i] = qd;
        out[n + i] = p[i] * pd;
    }
}

/// `E = 2 Σ p_i p_j e^{-|q_i - q_j|}`.
pub fn hamiltonian(train: &PeakonTrain) -> f64 {
    let (p, q) = (train.amplitudes(), train.positions());
    gram_inner(p, q, p, q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PeakonTrain>,
    pub stats: IntegratorStats,
}

/// Speed estimates at each stored time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedEstimates {
    /// `q̇_i` from the vector field at the stored state.
    pub direct: Vec<Vec<f64>>,
    /// Centered differences of `q_i` over about `window` time units; `None` near the ends.
    pub finite_difference: Vec<Option<Vec<f64>>>,
}

pub fn speed_estimates(traj: &Trajectory, window: f64) -> SpeedEstimates {
    let direct = traj.states.iter().map(|s| ode_rhs(s).0).collect();
    let m = traj.times.len();
    let span = if m > 1 {
        (traj.times[m - 1] - traj.times[0]) / (m - 1) as f64
    } else {
        1.0
    };
    let half = ((0.5 * window / span).round() as usize).max(1);
    let finite_difference = (0..m)
        .map(|i| {
            (i >= half && i + half < m).then(|| {
                let (a, b) = (&traj.states[i - half], &traj.states[i + half]);
                let dt = traj.times[i + half] - traj.times[i - half];
                a.positions()
                    .iter()
                    .zip(b.positions())
                    .map(|(x, y)| (y - x) / dt)
                    .collect()
            })
        })
        .collect();
    SpeedEstimates {
        direct,
        finite_difference,
    }
}
