//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line to stderr, bypassing
//! output capture, and then asserts.

use std::io::Write;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use peakonlab::constants::{self, sweep_base, SWEEP_EPS, SWEEP_L};
use peakonlab::dynamics::jacobi::{symmetric_eigen, Matrix};
use peakonlab::dynamics::{integrate, integrate_with, IntegratorOptions};
use peakonlab::functionals::{
    check_h_dominance, derivative_identity_check, energy_e, energy_f, helmholtz_inverse,
    identity_trajectory, profile_energy_checks, TanhWeight, WeightProfile, RATIO_BOUND,
};
use peakonlab::harness::{
    asymptotic_check, drift_scale, run_experiment, sample_times, sweep, orbital_scale,
    verify_conservation, verify_monotonicity, SweepSummary,
};
use peakonlab::peakon::{sample_on_grid, Grid, PeakonTrain, Scenario};

fn report(id: u32, name: &str, passed: bool, detail: String) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} [{name}]: {verdict} ({detail})");
}

fn random_train(rng: &mut ChaCha8Rng) -> PeakonTrain {
    let n = rng.gen_range(1..=4);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-8.0..8.0)).collect();
    q.sort_by(f64::total_cmp);
    for i in 1..n {
        if q[i] - q[i - 1] < 0.05 {
            q[i] = q[i - 1] + 0.05;
        }
    }
    let p = (0..n)
        .map(|_| {
            let a: f64 = rng.gen_range(0.1..2.0);
            if rng.gen_bool(0.5) {
                a
            } else {
                -a
            }
        })
        .collect();
    PeakonTrain::new(p, q).unwrap()
}

#[test]
fn criterion_01_peakon_invariants() {
    let mut worst: f64 = 0.0;
    for c in [-2.0, -1.0, 1.0, 2.0] {
        let t = PeakonTrain::single(c, 0.0).unwrap();
        let f = sample_on_grid(&t, &Grid::around(&t, 25.0, 1e-3).unwrap());
        let e_want = 2.0 * c * c;
        let f_want = 4.0 * c * c * c / 3.0;
        worst = worst
            .max((energy_e(&f) - e_want).abs() / e_want)
            .max((energy_f(&f) - f_want).abs() / f_want.abs());
    }
    let passed = worst <= 1e-4;
    report(1, "peakon invariants", passed, format!("max relative error {worst:.2e} <= 1e-4"));
    assert!(passed);
}

#[test]
fn criterion_02_conservation() {
    let mut s = Scenario::new(vec![-2.0, -1.0, 1.0, 2.0], 40.0, 1e-2, 50.0);
    s.rel_tol = 1e-10;
    let r = run_experiment(&s).unwrap();
    let [e, f] = verify_conservation(&r);
    let passed = e.value <= 1e-8 && f.value <= 1e-5;
    report(
        2,
        "conservation",
        passed,
        format!("E drift {:.2e} <= 1e-8, F drift {:.2e} <= 1e-5", e.value, f.value),
    );
    assert!(passed);
}

#[test]
fn criterion_03_peakon_energy_identity_and_cubic_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_eq1: f64 = 0.0;
    let mut worst_eq2 = f64::INFINITY;
    for _ in 0..100 {
        let t = random_train(&mut rng);
        let f = sample_on_grid(&t, &Grid::around(&t, 25.0, 1e-3).unwrap());
        let c = rng.gen_range(-2.0..2.0);
        let xi = rng.gen_range(t.positions()[0] - 3.0..t.positions()[t.len() - 1] + 3.0);
        let r = profile_energy_checks(&f, c, xi);
        worst_eq1 = worst_eq1.max(r.eq1_residual.abs());
        worst_eq2 = worst_eq2.min(r.eq2_slack);
    }
    let passed = worst_eq1 <= 1e-6 && worst_eq2 >= -1e-6;
    report(
        3,
        "energy identity / cubic inequality",
        passed,
        format!("max |eq1| {worst_eq1:.2e} <= 1e-6, min eq2 slack {worst_eq2:.2e} >= -1e-6"),
    );
    assert!(passed);
}

#[test]
fn criterion_04_h_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let t = random_train(&mut rng);
        let f = sample_on_grid(&t, &Grid::around(&t, 25.0, 1e-2).unwrap());
        let v = f.density(|p| p.u * p.u + 0.5 * p.ux * p.ux);
        let (lo, hi) = check_h_dominance(&helmholtz_inverse(&v));
        worst = worst.min(lo / hi);
    }
    let passed = worst >= -1e-10;
    report(4, "h dominance", passed, format!("min (h² - h_x²) / max h² = {worst:.2e} >= -1e-10"));
    assert!(passed);
}

#[test]
fn criterion_05_weight_profile() {
    let c = WeightProfile::new().check();
    let passed = c.all();
    report(
        5,
        "weight profile",
        passed,
        format!(
            "0 < Ψ <= 1: {} (range [{:.3e}, {}]), Ψ' > 0: {} (min {:.3e}), \
             |Ψ'''|/|Ψ'| <= {RATIO_BOUND} on [-1, 1]: {} (max {:.4}), C² matching: {}",
            c.bounded(),
            c.min_psi,
            c.max_psi,
            c.increasing(),
            c.min_psi_prime,
            c.ratio_ok(),
            c.max_ratio,
            c.smooth()
        ),
    );
    assert!(passed, "{c:?}");
}

#[test]
fn criterion_06_monotonicity() {
    let s = constants::monotonicity_calibration();
    let r = run_experiment(&s).unwrap();
    assert_eq!(r.k_scale, 1.0);
    let k = s.k();
    let inverse_maxima: Vec<f64> = r.modulation.xmax[0][k..]
        .iter()
        .map(|x| 1.0 / r.states[0].evaluate(*x))
        .collect();
    let required = |lam: f64| {
        lam == 0.0 || inverse_maxima.iter().any(|m| (m - lam).abs() <= 1e-9 * m)
    };
    let checks: Vec<_> = verify_monotonicity(&r, constants::C_MONO)
        .into_iter()
        .filter(|m| m.lambda_index.is_none() || required(m.lambda))
        .collect();
    let lambdas = checks.iter().filter(|m| m.lambda_index.is_some()).count();
    assert_eq!(lambdas, (s.n() - k) * (1 + inverse_maxima.len()));
    assert!(checks.iter().any(|m| m.lambda_index.is_none()));
    let worst = checks
        .iter()
        .max_by(|a, b| (a.worst_delta - a.bound).total_cmp(&(b.worst_delta - b.bound)))
        .unwrap();
    let passed = checks.iter().all(|m| m.passed);
    report(
        6,
        "monotonicity",
        passed,
        format!(
            "{} functionals, worst Δ {:.2e} <= {:.2e} (j = {}, λ = {:.4})",
            checks.len(),
            worst.worst_delta,
            worst.bound,
            worst.j,
            worst.lambda
        ),
    );
    assert!(passed);
}

fn sweeps() -> &'static (SweepSummary, SweepSummary) {
    static SWEEPS: OnceLock<(SweepSummary, SweepSummary)> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        let coarse = sweep_base();
        let mut fine = sweep_base();
        fine.grid_h = 0.5 * coarse.grid_h;
        (
            sweep(&coarse, &SWEEP_EPS, &SWEEP_L, None).unwrap(),
            sweep(&fine, &SWEEP_EPS, &SWEEP_L, None).unwrap(),
        )
    })
}

#[test]
fn criterion_07_orbital_bound() {
    let (coarse, fine) = sweeps();
    let completed = coarse.cells.iter().chain(&fine.cells).all(|c| c.error.is_none());
    let within = |s: &SweepSummary| {
        s.cells
            .iter()
            .all(|c| c.sup_dist <= constants::ORBITAL_A * orbital_scale(c.eps, c.spacing))
    };
    let ratio = fine.fitted_a / coarse.fitted_a;
    let passed = completed && within(coarse) && within(fine) && (ratio - 1.0).abs() <= 0.2;
    report(
        7,
        "orbital bound",
        passed,
        format!(
            "fitted A {:.3e} (h) / {:.3e} (h/2), ratio {ratio:.4}, frozen A {:.2e} holds in all 16 cells: {}",
            coarse.fitted_a,
            fine.fitted_a,
            constants::ORBITAL_A,
            within(coarse) && within(fine)
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_08_drift() {
    let (coarse, _) = sweeps();
    let worst = coarse
        .cells
        .iter()
        .map(|c| c.max_drift / (constants::DRIFT_C * drift_scale(c.eps, c.spacing)))
        .fold(0.0, f64::max);
    let passed = coarse.cells.iter().all(|c| c.error.is_none()) && worst <= 1.0;
    report(
        8,
        "drift",
        passed,
        format!(
            "fitted C {:.3e}, frozen C {:.2e}, worst drift / bound {worst:.3}",
            coarse.fitted_drift_c,
            constants::DRIFT_C
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_09_asymptotic_speeds() {
    let (vals, _) = symmetric_eigen(&Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]));
    let eig_err = (vals[0] - 0.5).abs().max((vals[1] - 1.5).abs());

    let train = PeakonTrain::new(constants::ASYMPTOTIC_P.to_vec(), constants::ASYMPTOTIC_Q.to_vec()).unwrap();
    let t_end = constants::ASYMPTOTIC_T;
    let opts = IntegratorOptions::new(1e-12, 1e-14);
    let traj = integrate_with(&train, t_end, &opts, &sample_times(t_end, 301)).unwrap();
    let c = asymptotic_check(&traj, constants::GAMMA).unwrap();
    let passed = eig_err <= 1e-12 && c.max_speed_error <= 1e-3 && c.distance <= constants::GAMMA;
    report(
        9,
        "asymptotic speeds",
        passed,
        format!(
            "2×2 eigen error {eig_err:.1e}, speed error {:.2e} <= 1e-3, profile distance {:.2e} <= γ = {:.0e}",
            c.max_speed_error,
            c.distance,
            constants::GAMMA
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_10_derivative_identities() {
    let train = PeakonTrain::new(vec![-1.0, 0.8, 1.6], vec![-2.0, 0.5, 2.5]).unwrap();
    let g = TanhWeight {
        center: 1.0,
        width: 1.5,
    };
    let t = 0.5;
    let opts = IntegratorOptions::new(1e-13, 1e-15);
    let levels = [(0.04, 4e-3), (0.02, 2e-3), (0.01, 1e-3)];
    let res: Vec<(f64, f64)> = levels
        .iter()
        .map(|&(dt, h)| {
            let traj = identity_trajectory(&train, t, dt, &opts).unwrap();
            let r = derivative_identity_check(&traj, &g, t, dt, h, 25.0).unwrap();
            (r.residual_energy.abs(), r.residual_cubic.abs())
        })
        .collect();
    let order = |a: f64, b: f64| (a / b).log2();
    let orders = [
        order(res[0].0, res[1].0),
        order(res[1].0, res[2].0),
        order(res[0].1, res[1].1),
        order(res[1].1, res[2].1),
    ];
    let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let passed = worst >= 1.8;
    report(
        10,
        "derivative identities",
        passed,
        format!(
            "observed orders {:.2}/{:.2} (first), {:.2}/{:.2} (cubic), min {worst:.2} >= 1.8",
            orders[0], orders[1], orders[2], orders[3]
        ),
    );
    assert!(passed, "{res:?}");
}

/// Fixed-step classical Runge-Kutta on the multipeakon system, written independently of
/// the library's vector field.
fn rk4(p0: &[f64], q0: &[f64], t_end: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let n = p0.len();
    let field = |y: &[f64]| -> Vec<f64> {
        let (q, p) = y.split_at(n);
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            for j in 0..n {
                let d = q[i] - q[j];
                let e = (-d.abs()).exp();
                out[i] += p[j] * e;
                if d != 0.0 {
                    out[n + i] += p[i] * p[j] * d.signum() * e;
                }
            }
        }
        out
    };
    let mut y: Vec<f64> = q0.iter().chain(p0).copied().collect();
    let steps = (t_end / dt).round() as usize;
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };
    for _ in 0..steps {
        let k1 = field(&y);
        let k2 = field(&axpy(&y, &k1, 0.5 * dt));
        let k3 = field(&axpy(&y, &k2, 0.5 * dt));
        let k4 = field(&axpy(&y, &k3, dt));
        for i in 0..2 * n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (y[n..].to_vec(), y[..n].to_vec())
}

#[test]
fn criterion_11_fixed_step_oracle() {
    let configs = [
        (vec![-1.0, 1.0], vec![-1.0, 1.0]),
        (vec![2.0, 1.0], vec![0.0, 3.0]),
        (vec![1.0, 1.5], vec![-2.0, 2.0]),
    ];
    let mut worst: f64 = 0.0;
    for (p, q) in &configs {
        let train = PeakonTrain::new(p.clone(), q.clone()).unwrap();
        let traj = integrate(&train, 5.0, 1e-10, 1e-12, &[5.0]).unwrap();
        let end = &traj.states[0];
        let (pr, qr) = rk4(p, q, 5.0, 1e-5);
        for i in 0..p.len() {
            worst = worst
                .max((end.amplitudes()[i] - pr[i]).abs())
                .max((end.positions()[i] - qr[i]).abs());
        }
    }
    let passed = worst <= 1e-6;
    report(11, "fixed-step oracle", passed, format!("max state difference {worst:.2e} <= 1e-6"));
    assert!(passed);
}
