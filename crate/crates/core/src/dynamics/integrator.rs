//! Dormand-Prince 5(4) with PI step control and cubic Hermite dense output.

use serde::{Deserialize, Serialize};

use super::{ode_rhs_state, Trajectory};
use crate::error::{Error, Result};
use crate::peakon::PeakonTrain;

pub const DEFAULT_DELTA_MIN: f64 = 1e-6;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Smallest admissible gap between consecutive positions.
    pub delta_min: f64,
    pub max_steps: usize,
}

impl IntegratorOptions {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            delta_min: DEFAULT_DELTA_MIN,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    /// Largest normalized error estimate among accepted steps.
    pub max_error: f64,
}

pub fn integrate(
    train: &PeakonTrain,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
    output_times: &[f64],
) -> Result<Trajectory> {
    integrate_with(train, t_end, &IntegratorOptions::new(rel_tol, abs_tol), output_times)
}

fn min_gap(y: &[f64], n: usize) -> f64 {
    y[..n]
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], opts: &IntegratorOptions) -> f64 {
    err.iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| e.abs() / (opts.abs_tol + opts.rel_tol * a.abs().max(b.abs())))
        .fold(0.0, f64::max)
}

/// Integrate on `[0, t_end]` and sample at `output_times` (ascending, within range).
pub fn integrate_with(
    train: &PeakonTrain,
    t_end: f64,
    opts: &IntegratorOptions,
    output_times: &[f64],
) -> Result<Trajectory> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidScenario(format!("t_end = {t_end} must be positive")));
    }
    for (name, tol) in [("rel_tol", opts.rel_tol), ("abs_tol", opts.abs_tol)] {
        if !(tol > 0.0 && tol <= 1e-2) {
            return Err(Error::InvalidScenario(format!("{name} = {tol} must lie in (0, 1e-2]")));
        }
    }
    if output_times.windows(2).any(|w| w[0] >= w[1])
        || output_times.iter().any(|t| *t < 0.0 || *t > t_end)
    {
        return Err(Error::InvalidScenario(
            "output times must be strictly increasing within [0, t_end]".into(),
        ));
    }

    let n = train.len();
    let dim = 2 * n;
    let mut y = train.to_state();
    let mut k1 = vec![0.0; dim];
    ode_rhs_state(&y, &mut k1);
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];

    let mut times = Vec::with_capacity(output_times.len());
    let mut states = Vec::with_capacity(output_times.len());
    let mut next_out = 0;
    while next_out < output_times.len() && output_times[next_out] == 0.0 {
        times.push(0.0);
        states.push(train.clone());
        next_out += 1;
    }

    let mut stats = IntegratorStats::default();
    let mut t = 0.0;
    let mut h = initial_step(&y, &k1, opts, t_end);
    let mut err_prev: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t_end {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        stage(&y, h, &[(A21, &k1)], &mut tmp);
        ode_rhs_state(&tmp, &mut k2);
        stage(&y, h, &[(A31, &k1), (A32, &k2)], &mut tmp);
        ode_rhs_state(&tmp, &mut k3);
        stage(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)], &mut tmp);
        ode_rhs_state(&tmp, &mut k4);
        stage(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], &mut tmp);
        ode_rhs_state(&tmp, &mut k5);
        stage(
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            &mut tmp,
        );
        ode_rhs_state(&tmp, &mut k6);
        stage(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            &mut y_new,
        );

        // A trial step that reorders the crests is never accepted.
        if min_gap(&y_new, n) <= 0.0 {
            stats.rejected += 1;
            h *= 0.5;
            last_rejected = true;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::CollisionDetected {
                    t,
                    gap: min_gap(&y, n),
                });
            }
            continue;
        }

        ode_rhs_state(&y_new, &mut k7);
        for i in 0..dim {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&err, &y, &y_new, opts);
        if !e.is_finite() {
            stats.rejected += 1;
            h *= FAC_MIN;
            last_rejected = true;
            continue;
        }
        if e <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            while next_out < output_times.len() && output_times[next_out] <= t_new {
                let to = output_times[next_out];
                let state = if to == t_new {
                    y_new.clone()
                } else {
                    hermite(&y, &k1, &y_new, &k7, t, h, to)
                };
                times.push(to);
                states.push(PeakonTrain::from_state(&state).map_err(|_| {
                    Error::CollisionDetected {
                        t: to,
                        gap: min_gap(&state, n),
                    }
                })?);
                next_out += 1;
            }
            stats.steps += 1;
            stats.max_error = stats.max_error.max(e);
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            let gap = min_gap(&y, n);
            if gap < opts.delta_min {
                return Err(Error::CollisionDetected { t, gap });
            }
            let e = e.max(1e-10);
            let mut fac = SAFETY * e.powf(-ALPHA) * err_prev.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_prev = e;
            h *= fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (SAFETY * e.powf(-ALPHA)).max(FAC_MIN);
            last_rejected = true;
        }
    }

    Ok(Trajectory {
        times,
        states,
        stats,
    })
}

fn stage(y: &[f64], h: f64, terms: &[(f64, &Vec<f64>)], out: &mut [f64]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn hermite(y0: &[f64], f0: &[f64], y1: &[f64], f1: &[f64], t0: f64, h: f64, t: f64) -> Vec<f64> {
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

fn initial_step(y: &[f64], f: &[f64], opts: &IntegratorOptions, t_end: f64) -> f64 {
    let scale = |v: f64, yi: f64| v / (opts.abs_tol + opts.rel_tol * yi.abs());
    let d0 = y.iter().map(|v| scale(*v, *v).powi(2)).sum::<f64>().sqrt();
    let d1 = f
        .iter()
        .zip(y)
        .map(|(v, yi)| scale(*v, *yi).powi(2))
        .sum::<f64>()
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0.min(t_end).min(0.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_peakon_translates() {
        let t = PeakonTrain::single(2.0, 0.0).unwrap();
        let traj = integrate(&t, 5.0, 1e-10, 1e-12, &[0.0, 2.5, 5.0]).unwrap();
        assert_eq!(traj.times, vec![0.0, 2.5, 5.0]);
        let last = traj.states.last().unwrap();
        assert!((last.positions()[0] - 10.0).abs() < 1e-9);
        assert_eq!(last.amplitudes()[0], 2.0);
        assert!((traj.states[1].positions()[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn colliding_pair_is_reported() {
        // a peakon running into an antipeakon
        let t = PeakonTrain::new(vec![1.0, -1.0], vec![-2.0, 2.0]).unwrap();
        match integrate(&t, 20.0, 1e-8, 1e-10, &[20.0]) {
            Err(Error::CollisionDetected { t, gap }) => {
                assert!(t > 1.0 && t < 20.0, "{t}");
                assert!(gap < DEFAULT_DELTA_MIN);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = PeakonTrain::single(1.0, 0.0).unwrap();
        assert!(integrate(&t, 0.0, 1e-8, 1e-8, &[]).is_err());
        assert!(integrate(&t, 1.0, 0.5, 1e-8, &[]).is_err());
        assert!(integrate(&t, 1.0, 1e-8, 1e-8, &[0.5, 0.2]).is_err());
    }

    #[test]
    fn antipeakon_peakon_separate() {
        let t = PeakonTrain::new(vec![-1.0, 1.0], vec![-15.0, 15.0]).unwrap();
        let traj = integrate(&t, 10.0, 1e-10, 1e-12, &[10.0]).unwrap();
        let q = traj.states[0].positions();
        assert!(q[1] - q[0] > 30.0 + 10.0);
        assert!(traj.stats.steps > 0);
    }
}
