use peakonlab::constants;
use peakonlab::harness::{
    max_complement, run_experiment, orbital_scale, verify_bookkeeping, verify_orbital,
};
use peakonlab::peakon::{PerturbationMode, Scenario};
use peakonlab::Error;

#[test]
fn pair_stays_within_the_orbital_bound() {
    let s = Scenario::new(vec![-1.0, 1.0], 30.0, 0.01, 40.0);
    let r = run_experiment(&s).unwrap();
    let check = verify_orbital(&r, constants::ORBITAL_A);
    assert!(check.passed, "{check:?}");
    assert!((check.bound - constants::ORBITAL_A * (0.1 + 30f64.powf(-0.125))).abs() < 1e-18);
    assert_eq!(check.bound, constants::ORBITAL_A * orbital_scale(0.01, 30.0));
}

#[test]
fn separations_grow_with_the_relative_speeds() {
    let mut s = Scenario::new(vec![-2.0, 1.0, 2.0], 40.0, 1e-2, 20.0);
    s.samples = 41;
    let r = run_experiment(&s).unwrap();
    let c = &s.velocities;
    for (t, x) in r.times.iter().zip(&r.modulation.xtilde) {
        for i in 1..x.len() {
            let floor = 0.75 * s.spacing + 0.5 * (c[i] - c[i - 1]) * t;
            assert!(x[i] - x[i - 1] >= floor, "t = {t}: {x:?}");
        }
    }
    // crest and modulation parameter stay together
    assert!(r.modulation.max_separation() <= 2.0);
}

#[test]
fn exact_train_modulation_follows_the_positions() {
    let mut s = Scenario::new(vec![-1.0, 1.0, 2.0], 40.0, 0.0, 10.0);
    s.samples = 21;
    let r = run_experiment(&s).unwrap();
    for (state, x) in r.states.iter().zip(&r.modulation.xtilde) {
        for (q, xt) in state.positions().iter().zip(x) {
            assert!((q - xt).abs() <= 1e-6, "{q} {xt}");
        }
    }
}

#[test]
fn energy_bookkeeping_and_complement() {
    let mut s = Scenario::new(vec![-1.0, 1.0, 2.0], 64.0, 1e-2, 30.0);
    s.samples = 61;
    let r = run_experiment(&s).unwrap();
    let b = verify_bookkeeping(&r, constants::C_MONO).unwrap();
    assert!(b.passed, "{b:?}");
    let comp = max_complement(&r).unwrap();
    assert!(comp < s.epsilon + s.spacing.powf(-0.25), "{comp}");
}

#[test]
fn every_perturbation_mode_runs() {
    for mode in [
        PerturbationMode::AmplitudeJitter,
        PerturbationMode::PositionJitter,
        PerturbationMode::ExtraSmallPeakons,
        PerturbationMode::Mixed,
    ] {
        let mut s = Scenario::new(vec![-1.0, 2.0], 30.0, 0.05, 5.0);
        s.samples = 11;
        s.perturbation_mode = mode;
        let r = run_experiment(&s).unwrap();
        assert!((r.initial.distance - 0.05f64.powi(2)).abs() < 1e-9, "{mode:?}");
        let extra = matches!(mode, PerturbationMode::ExtraSmallPeakons | PerturbationMode::Mixed);
        assert_eq!(r.states[0].len(), if extra { 4 } else { 2 });
    }
}

#[test]
fn modulation_failures_carry_the_time() {
    // bumps closer than the modulation windows cannot be separated on this grid
    let mut s = Scenario::new(vec![-1.0, 1.0], 30.0, 0.0, 1.0);
    s.samples = 3;
    s.grid_pad = 5.0;
    match run_experiment(&s) {
        Err(Error::EmptyWindow { .. }) => {}
        other => panic!("{other:?}"),
    }
}
