use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::run_experiment;
use super::verify::{drift_scale, sup_distance, orbital_scale};
use crate::error::{Error, Result};
use crate::modulation::max_drift;
use crate::peakon::Scenario;

/// Outcome of one `(ε, L)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub eps: f64,
    pub spacing: f64,
    pub sup_dist: f64,
    pub max_drift: f64,
    /// `A (√ε + L^{-1/8})` with the fitted `A`.
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
    /// Failure message when the experiment itself did not complete.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub cells: Vec<SweepCell>,
    /// Smallest `A` with `sup_dist ≤ A (√ε + L^{-1/8})` in every completed cell.
    pub fitted_a: f64,
    /// Smallest `C` with `max_drift ≤ C (ε^{1/4} + L^{-1/16})` in every completed cell.
    pub fitted_drift_c: f64,
}

impl SweepSummary {
    pub fn all_passed(&self) -> bool {
        self.cells.iter().all(|c| c.passed)
    }
}

/// Runs every `(ε, L)` combination of `base`, in parallel on `jobs` threads (all cores
/// when `None`); cells are merged in `eps`-major order regardless of completion order.
pub fn sweep(base: &Scenario, eps: &[f64], spacings: &[f64], jobs: Option<usize>) -> Result<SweepSummary> {
    let grid: Vec<(f64, f64)> = eps
        .iter()
        .flat_map(|e| spacings.iter().map(move |l| (*e, *l)))
        .collect();
    if grid.is_empty() {
        return Err(Error::InvalidScenario("empty sweep".into()));
    }
    for &(e, l) in &grid {
        Scenario {
            epsilon: e,
            spacing: l,
            ..base.clone()
        }
        .validate()?;
    }
    let run = |&(e, l): &(f64, f64)| {
        let s = Scenario {
            epsilon: e,
            spacing: l,
            ..base.clone()
        };
        run_experiment(&s).map(|r| (sup_distance(&r), max_drift(&r.modulation, &s.velocities)))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidScenario(format!("thread pool: {e}")))?;
    let results: Vec<Result<(f64, f64)>> = pool.install(|| grid.par_iter().map(run).collect());

    let fitted_a = grid
        .iter()
        .zip(&results)
        .filter_map(|((e, l), r)| r.as_ref().ok().map(|(d, _)| d / orbital_scale(*e, *l)))
        .fold(0.0, f64::max);
    let fitted_drift_c = grid
        .iter()
        .zip(&results)
        .filter_map(|((e, l), r)| r.as_ref().ok().map(|(_, v)| v / drift_scale(*e, *l)))
        .fold(0.0, f64::max);
    let cells = grid
        .iter()
        .zip(results)
        .map(|(&(eps, spacing), r)| {
            let bound = fitted_a * orbital_scale(eps, spacing);
            match r {
                Ok((sup_dist, drift)) => SweepCell {
                    eps,
                    spacing,
                    sup_dist,
                    max_drift: drift,
                    bound,
                    margin: bound - sup_dist,
                    passed: sup_dist <= bound,
                    error: None,
                },
                Err(e) => SweepCell {
                    eps,
                    spacing,
                    sup_dist: f64::NAN,
                    max_drift: f64::NAN,
                    bound,
                    margin: f64::NAN,
                    passed: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepSummary {
        cells,
        fitted_a,
        fitted_drift_c,
    })
}

/// Summary CSV with columns `eps, L, sup_dist, bound, margin, passed`.
pub fn write_summary_csv(s: &SweepSummary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["eps", "L", "sup_dist", "bound", "margin", "passed"])?;
    for c in &s.cells {
        w.write_record([
            format!("{:e}", c.eps),
            format!("{}", c.spacing),
            format!("{:e}", c.sup_dist),
            format!("{:e}", c.bound),
            format!("{:e}", c.margin),
            c.passed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
