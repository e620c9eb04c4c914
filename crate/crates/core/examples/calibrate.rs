//! Refits the empirical constants on their calibration runs.

use peakonlab::constants::*;
use peakonlab::dynamics::{integrate_with, IntegratorOptions};
use peakonlab::harness::{
    asymptotic_check, monotonicity_bound, run_experiment, sample_times, sweep, verify_monotonicity,
};
use peakonlab::peakon::PeakonTrain;

fn main() -> peakonlab::Result<()> {
    let r = run_experiment(&monotonicity_calibration())?;
    let worst = verify_monotonicity(&r, 1.0)
        .iter()
        .map(|m| m.worst_delta)
        .fold(f64::NEG_INFINITY, f64::max);
    println!("C_MONO    fitted {:.3e} (frozen {C_MONO:.3e})", worst / monotonicity_bound(&r, 1.0));

    for h in [1e-2, 5e-3] {
        let mut base = sweep_base();
        base.grid_h = h;
        let s = sweep(&base, &SWEEP_EPS, &SWEEP_L, None)?;
        println!("h = {h:e}");
        println!("ORBITAL_A fitted {:.3e} (frozen {ORBITAL_A:.3e})", s.fitted_a);
        println!("DRIFT_C   fitted {:.3e} (frozen {DRIFT_C:.3e})", s.fitted_drift_c);
    }

    let train = PeakonTrain::new(ASYMPTOTIC_P.to_vec(), ASYMPTOTIC_Q.to_vec())?;
    let opts = IntegratorOptions::new(1e-12, 1e-14);
    let times = sample_times(ASYMPTOTIC_T, 301);
    let c = asymptotic_check(&integrate_with(&train, ASYMPTOTIC_T, &opts, &times)?, GAMMA)?;
    println!("GAMMA     fitted {:.3e} (frozen {GAMMA:.3e})", c.distance);
    Ok(())
}
