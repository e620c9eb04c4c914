use serde::{Deserialize, Serialize};

use crate::dynamics::{
    asymptotic_matrix, eigenvalues_real, hamiltonian, integrate_with, ode_rhs, IntegratorOptions,
    IntegratorStats, SpectralData, Trajectory,
};
use crate::error::{Error, Result};
use crate::functionals::{
    build_weight_family, default_lambdas, localized_functionals, sigma0, FunctionalSample,
    WeightFamily, WeightProfile,
};
use crate::modulation::{
    default_tol, h1_distance_to_train, modulate, track_bumps, ModulationPath,
};
use crate::peakon::{build_perturbed_scenario, sample_on_grid, Grid, PerturbedTrain, Scenario};

/// Everything measured along one experiment. All pass/fail checks are recomputed from
/// these series by [`super::verify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub initial: PerturbedTrain,
    pub grid: Grid,
    /// Resolved weight scale `K`.
    pub k_scale: f64,
    pub sigma0: f64,
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
    pub states: Vec<crate::peakon::PeakonTrain>,
    /// Closed-form `E` of each state.
    pub e_closed: Vec<f64>,
    pub functionals: Vec<FunctionalSample>,
    pub modulation: ModulationPath,
    /// `‖u(t) - Σ φ_{c_j}(· - x_j(t))‖_{H¹}` with the tracked maxima `x_j`.
    pub dist_h1: Vec<f64>,
    pub spectral: SpectralData,
    pub eigenvalues: Option<Vec<f64>>,
    /// Sorted `q̇_i` at `t_end`.
    pub terminal_speeds: Vec<f64>,
    pub integrator: IntegratorStats,
}

impl Report {
    pub fn n(&self) -> usize {
        self.scenario.n()
    }

    /// `I_{j,λ}(t) - I_{j,λ}(0)` indexed `[time][j][λ]`.
    pub fn monotonicity_deltas(&self) -> Vec<Vec<Vec<f64>>> {
        let first = &self.functionals[0].i_table;
        self.functionals
            .iter()
            .map(|s| {
                s.i_table
                    .iter()
                    .zip(first)
                    .map(|(row, row0)| row.iter().zip(row0).map(|(a, b)| a - b).collect())
                    .collect()
            })
            .collect()
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self.states.clone(),
            stats: self.integrator,
        }
    }
}

/// `samples` uniform times on `[0, t_end]`.
pub fn sample_times(t_end: f64, samples: usize) -> Vec<f64> {
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|i| if i + 1 == samples { t_end } else { t_end * i as f64 / last })
        .collect()
}

/// One grid covering every stored state with `pad` on both sides.
pub fn trajectory_grid(traj: &Trajectory, pad: f64, h: f64) -> Result<Grid> {
    let (lo, hi) = traj.states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        let q = s.positions();
        (lo.min(q[0]), hi.max(q[q.len() - 1]))
    });
    Grid::covering(lo - pad, hi + pad, h)
}

/// Builds the perturbed train, integrates it, and evaluates modulation, bump maxima,
/// functionals and distances at every output time.
pub fn run_experiment(s: &Scenario) -> Result<Report> {
    let initial = build_perturbed_scenario(s)?;
    run_experiment_from(s, initial)
}

/// [`run_experiment`] from a prepared initial datum.
pub fn run_experiment_from(s: &Scenario, initial: PerturbedTrain) -> Result<Report> {
    s.validate()?;
    let times = sample_times(s.t_end, s.samples);
    let opts = IntegratorOptions::new(s.rel_tol, s.abs_tol);
    let traj = integrate_with(&initial.train, s.t_end, &opts, &times)?;
    let grid = trajectory_grid(&traj, s.grid_pad, s.grid_h)?;
    let c = &s.velocities;
    let k = s.k();

    let mut modulation = ModulationPath::default();
    let mut functionals = Vec::with_capacity(times.len());
    let mut dist_h1 = Vec::with_capacity(times.len());
    let mut family: Option<(WeightFamily, Vec<f64>)> = None;
    let mut guess = initial.centers.clone();
    let mut t_prev = 0.0;
    for (&t, state) in traj.times.iter().zip(&traj.states) {
        let f = sample_on_grid(state, &grid);
        // each bump travels at about its own speed
        guess.iter_mut().zip(c).for_each(|(x, ci)| *x += ci * (t - t_prev));
        t_prev = t;
        let fit = modulate(&f, c, &guess, default_tol(&f)).map_err(|e| e.at(t))?;
        let xmax = track_bumps(&f, &fit.x, s.spacing).map_err(|e| e.at(t))?;
        if family.is_none() {
            let fam = build_weight_family(WeightProfile::new(), s.k_scale, c, s.spacing, &fit.x)?;
            let lambdas = match &s.lambda_list {
                Some(l) => l.clone(),
                None => {
                    let maxima: Vec<f64> = xmax[k..].iter().map(|x| f.interpolate(*x).0).collect();
                    default_lambdas(&maxima, s.lambda_upper())
                }
            };
            family = Some((fam, lambdas));
        }
        let (fam, lambdas) = family.as_ref().expect("family built at the first sample");
        let centers = fam.centers(t, &fit.x);
        functionals.push(localized_functionals(&f, fam, &centers, t, lambdas));
        dist_h1.push(h1_distance_to_train(state, c, &xmax));
        guess.clone_from(&fit.x);
        modulation.push(t, fit, xmax);
    }
    let (fam, lambdas) = family.ok_or_else(|| Error::InvalidScenario("no output samples".into()))?;

    let spectral = asymptotic_matrix(&initial.train);
    let eigenvalues = eigenvalues_real(&spectral).ok();
    let last = traj.states.last().expect("at least two samples");
    let mut terminal_speeds = ode_rhs(last).0;
    terminal_speeds.sort_by(f64::total_cmp);
    Ok(Report {
        scenario: s.clone(),
        grid,
        k_scale: fam.k,
        sigma0: sigma0(c, k),
        lambdas,
        e_closed: traj.states.iter().map(hamiltonian).collect(),
        times: traj.times,
        states: traj.states,
        functionals,
        modulation,
        dist_h1,
        spectral,
        eigenvalues,
        terminal_speeds,
        integrator: traj.stats,
        initial,
    })
}
