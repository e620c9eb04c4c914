//! Modulation positions from the orthogonality conditions, bump maxima, and drift
//! speeds.
//!
//! The residuals are `G_i(X) = ∫ (u - R_X) ∂_x φ_{c_i}(· - x_i)` with
//! `R_X = Σ_j c_j e^{-|x - x_j|}`. The difference `u - R_X` is sampled at the grid
//! nodes, the kinks of `u` and the crests `x_j`, joined linearly, and integrated exactly
//! against the exponential kernel, so `G` is continuous in `X` and vanishes at the truth
//! when `u = R_X`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::energy_e;
use crate::peakon::{h1_distance_to_profile, GridField, PeakonTrain};

/// Kernel support used for each residual; `e^{-40}` is below double precision.
const WINDOW: f64 = 40.0;
pub const MAX_ITERATIONS: usize = 50;
/// Cap on the sup norm of one Newton step.
pub const MAX_STEP: f64 = 0.25;
pub const MAX_HALVINGS: usize = 30;
/// Tolerance relative to `‖u‖_{H¹}`.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modulated {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖G‖_∞` at the returned point.
    pub residual: f64,
}

/// Modulation and bump-tracking history of one experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModulationPath {
    pub times: Vec<f64>,
    pub xtilde: Vec<Vec<f64>>,
    pub xmax: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
}

impl ModulationPath {
    pub fn push(&mut self, t: f64, fit: Modulated, xmax: Vec<f64>) {
        self.times.push(t);
        self.xtilde.push(fit.x);
        self.xmax.push(xmax);
        self.iterations.push(fit.iterations);
        self.residuals.push(fit.residual);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_t max_i |x_i - x̃_i|`.
    pub fn max_separation(&self) -> f64 {
        self.xtilde
            .iter()
            .zip(&self.xmax)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// `1e-10 ‖u‖_{H¹}`.
pub fn default_tol(f: &GridField) -> f64 {
    DEFAULT_REL_TOL * energy_e(f).max(0.0).sqrt()
}

fn profile_value(c: &[f64], x: &[f64], at: f64) -> f64 {
    c.iter()
        .zip(x)
        .filter(|(_, xj)| (at - *xj).abs() < WINDOW)
        .map(|(c, xj)| c * (-(at - xj).abs()).exp())
        .sum()
}

/// `∫_a^{a+w} (d_a (1 - t/w) + d_b t/w) e^{σ t} dt` for `σ = ±1`.
fn exp_segment(d_a: f64, d_b: f64, w: f64, sigma: f64) -> f64 {
    let em1 = (sigma * w).exp_m1();
    let i0 = sigma * em1;
    let i1 = sigma * w * (em1 + 1.0) - em1;
    d_a * i0 + (d_b - d_a) * i1 / w
}

/// The residual vector `G(X)`.
pub fn orthogonality_residuals(f: &GridField, c: &[f64], x: &[f64]) -> Vec<f64> {
    let g = f.grid;
    let h = g.h();
    // off-node breakpoints: kinks of u and crests of R_X
    let mut extras: Vec<(f64, f64)> = f
        .kinks
        .iter()
        .filter(|k| g.contains(k.x) && g.snap(k.x).is_none())
        .map(|k| (k.x, 0.5 * (k.u_minus + k.u_plus)))
        .collect();
    for &xj in x {
        if g.contains(xj) && g.snap(xj).is_none() && !extras.iter().any(|e| e.0 == xj) {
            extras.push((xj, f.interpolate(xj).0));
        }
    }
    extras.sort_by(|a, b| a.0.total_cmp(&b.0));
    let extras: Vec<(f64, f64)> = extras
        .into_iter()
        .map(|(xe, u)| (xe, u - profile_value(c, x, xe)))
        .collect();

    let lo = x.iter().fold(f64::INFINITY, |a, b| a.min(*b)) - WINDOW;
    let hi = x.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b)) + WINDOW;
    let m_lo = (((lo - g.x0()) / h).floor().max(0.0) as usize).min(g.n() - 1);
    let m_hi = (((hi - g.x0()) / h).ceil().max(0.0) as usize).min(g.n() - 1);
    let mut breaks: Vec<(f64, f64)> = Vec::with_capacity(m_hi - m_lo + 1 + extras.len());
    let mut e = extras.iter().peekable();
    for m in m_lo..=m_hi {
        let xm = g.node(m);
        while let Some(&&(xe, d)) = e.peek() {
            if xe >= xm {
                break;
            }
            if xe > g.node(m_lo) {
                breaks.push((xe, d));
            }
            e.next();
        }
        breaks.push((xm, f.u[m] - profile_value(c, x, xm)));
    }

    c.iter()
        .zip(x)
        .map(|(&ci, &xi)| {
            let start = breaks.partition_point(|b| b.0 < xi - WINDOW);
            let stop = breaks.partition_point(|b| b.0 <= xi + WINDOW);
            let mut acc = 0.0;
            for s in breaks[start..stop.max(start + 1).min(breaks.len())].windows(2) {
                let ((a, da), (b, db)) = (s[0], s[1]);
                let w = b - a;
                if !(w > 0.0) {
                    continue;
                }
                // ∂_x φ_c(x - x_i) = c e^{x - x_i} left of x_i, -c e^{-(x - x_i)} right of it
                if 0.5 * (a + b) < xi {
                    acc += ci * (a - xi).exp() * exp_segment(da, db, w, 1.0);
                } else {
                    acc -= ci * (xi - a).exp() * exp_segment(da, db, w, -1.0);
                }
            }
            acc
        })
        .collect()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] < w[1])
}

/// Solves `G(X) = 0` from `guess` by damped Newton with a forward-difference Jacobian.
pub fn modulate(f: &GridField, c: &[f64], guess: &[f64], tol: f64) -> Result<Modulated> {
    let n = c.len();
    if guess.len() != n {
        return Err(Error::InvalidScenario(format!(
            "{} modulation guesses for {n} velocities",
            guess.len()
        )));
    }
    if !increasing(guess) {
        return Err(Error::OrderingLost { t: None });
    }
    let mut x = guess.to_vec();
    let mut gx = orthogonality_residuals(f, c, &x);
    let mut norm = sup_norm(&gx);
    for it in 0..=MAX_ITERATIONS {
        if norm <= tol {
            return Ok(Modulated {
                x,
                iterations: it,
                residual: norm,
            });
        }
        if it == MAX_ITERATIONS {
            break;
        }
        let mut jac = vec![vec![0.0; n]; n];
        for j in 0..n {
            let step = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += step;
            let gp = orthogonality_residuals(f, c, &xp);
            for i in 0..n {
                jac[i][j] = (gp[i] - gx[i]) / step;
            }
        }
        let minus_g: Vec<f64> = gx.iter().map(|v| -v).collect();
        let mut delta = solve_linear(jac, minus_g).ok_or(Error::NoConvergence {
            iterations: it,
            residual: norm,
            t: None,
        })?;
        // the residual decays away from each bump, so long steps find spurious zeros
        let longest = sup_norm(&delta);
        if longest > MAX_STEP {
            delta.iter_mut().for_each(|d| *d *= MAX_STEP / longest);
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect();
            if increasing(&trial) {
                let gt = orthogonality_residuals(f, c, &trial);
                let nt = sup_norm(&gt);
                if nt < norm {
                    x = trial;
                    gx = gt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
            if !increasing(&trial) {
                return Err(Error::OrderingLost { t: None });
            }
            return Err(Error::NoConvergence {
                iterations: it + 1,
                residual: norm,
                t: None,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: norm,
        t: None,
    })
}

/// Gaussian elimination with partial pivoting; `None` for a singular matrix.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= factor * a[col][k];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Location of `max |u|` on `[x̃_i - L/4, x̃_i + L/4]` for each `i`.
///
/// Crests recorded as kinks are exact; otherwise the grid argmax is refined by the
/// parabola through its neighbors unless a kink lies next to it.
pub fn track_bumps(f: &GridField, xtilde: &[f64], spacing: f64) -> Result<Vec<f64>> {
    let g = f.grid;
    let h = g.h();
    xtilde
        .iter()
        .map(|&xt| {
            let (lo, hi) = (xt - 0.25 * spacing, xt + 0.25 * spacing);
            if !(g.contains(lo) && g.contains(hi)) {
                return Err(Error::EmptyWindow { lo, hi });
            }
            let m_lo = ((lo - g.x0()) / h).ceil() as usize;
            let m_hi = (((hi - g.x0()) / h).floor() as usize).min(g.n() - 1);
            let mut best: Option<(usize, f64)> = None;
            for m in m_lo..=m_hi {
                let v = f.u[m].abs();
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((m, v));
                }
            }
            let kink = f
                .kinks
                .iter()
                .filter(|k| k.x >= lo && k.x <= hi)
                .map(|k| (k.x, k.u_minus.abs().max(k.u_plus.abs())))
                .fold(None, |acc: Option<(f64, f64)>, k| match acc {
                    Some(a) if a.1 >= k.1 => Some(a),
                    _ => Some(k),
                });
            if let Some((xk, vk)) = kink {
                if best.is_none_or(|(_, v)| vk >= v) {
                    return Ok(xk);
                }
            }
            let Some((m, _)) = best else {
                return Err(Error::EmptyWindow { lo, hi });
            };
            let xm = g.node(m);
            let near_kink = f.kinks.iter().any(|k| (k.x - xm).abs() <= h);
            if near_kink || m == 0 || m + 1 >= g.n() {
                return Ok(xm);
            }
            let (a, b, c) = (f.u[m - 1].abs(), f.u[m].abs(), f.u[m + 1].abs());
            let curv = a - 2.0 * b + c;
            if curv >= 0.0 {
                return Ok(xm);
            }
            let shift = 0.5 * (a - c) / curv;
            Ok((xm + shift.clamp(-0.5, 0.5) * h).clamp(lo, hi))
        })
        .collect()
}

/// Finite-difference estimates of `dx̃_i/dt - c_i` at every stored time (centered in
/// the interior, one-sided at the ends). Empty for fewer than three samples.
pub fn drift_speeds(path: &ModulationPath, c: &[f64]) -> Vec<Vec<f64>> {
    let m = path.len();
    if m < 3 {
        return Vec::new();
    }
    (0..m)
        .map(|k| {
            let (a, b) = match k {
                0 => (0, 1),
                k if k == m - 1 => (m - 2, m - 1),
                k => (k - 1, k + 1),
            };
            let dt = path.times[b] - path.times[a];
            path.xtilde[a]
                .iter()
                .zip(&path.xtilde[b])
                .zip(c)
                .map(|((xa, xb), ci)| (xb - xa) / dt - ci)
                .collect()
        })
        .collect()
}

/// `max_t max_i |dx̃_i/dt - c_i|`.
pub fn max_drift(path: &ModulationPath, c: &[f64]) -> f64 {
    drift_speeds(path, c)
        .iter()
        .flatten()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Closed-form `‖u - Σ c_j φ(· - x_j)‖_{H¹}` for a multipeakon `u`.
pub fn h1_distance_to_train(train: &PeakonTrain, c: &[f64], x: &[f64]) -> f64 {
    h1_distance_to_profile(train, c, x)
}

/// Quadrature version of [`h1_distance_to_train`] for a sampled field.
pub fn h1_distance_field(f: &GridField, c: &[f64], x: &[f64]) -> f64 {
    let diff = c
        .iter()
        .zip(x)
        .fold(f.clone(), |acc, (c, xj)| acc.minus_peakon(*c, *xj));
    energy_e(&diff).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peakon::{sample_on_grid, Grid};

    fn field(t: &PeakonTrain, h: f64) -> GridField {
        sample_on_grid(t, &Grid::around(t, 25.0, h).unwrap())
    }

    #[test]
    fn exact_train_is_a_zero() {
        let c = [-1.0, 1.0, 2.0];
        let x = [-7.3, 1.21, 9.0];
        let t = PeakonTrain::new(c.to_vec(), x.to_vec()).unwrap();
        let f = field(&t, 1e-2);
        let r = modulate(&f, &c, &x, default_tol(&f)).unwrap();
        assert!(r.iterations <= 2, "{r:?}");
        assert!(r.x.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-10), "{r:?}");
    }

    #[test]
    fn recovers_from_an_offset_guess() {
        let c = [-1.0, 2.0];
        let x = [-6.0, 6.5];
        let t = PeakonTrain::new(c.to_vec(), x.to_vec()).unwrap();
        let f = field(&t, 1e-2);
        let r = modulate(&f, &c, &[-5.6, 6.9], default_tol(&f)).unwrap();
        assert!(r.x.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9), "{r:?}");
    }

    #[test]
    fn residual_matches_closed_form_for_a_single_peakon() {
        // G(ξ) = ∫ φ_c(· - ξ₀) ∂_x φ_c(· - ξ) = -c² d e^{-|d|} with d = ξ₀ - ξ
        let c = 1.5;
        let t = PeakonTrain::single(c, 0.3).unwrap();
        for h in [1e-2, 5e-3] {
            let f = field(&t, h);
            for xi in [0.1, 0.95, -1.2] {
                let g = orthogonality_residuals(&f, &[c], &[xi])[0];
                let d: f64 = 0.3 - xi;
                let want = -c * c * d * (-d.abs()).exp();
                assert!((g - want).abs() < 0.2 * h * h, "{h} {xi} {g} {want}");
            }
        }
    }

    #[test]
    fn translation_equivariance() {
        let c = [-1.0, 1.0];
        let t = PeakonTrain::new(vec![-1.05, 0.02, 0.97], vec![-5.0, 1.0, 5.2]).unwrap();
        let s = 0.37;
        let g = Grid::covering(-40.0, 40.0, 1e-2).unwrap();
        let f = sample_on_grid(&t, &g);
        let fs = sample_on_grid(&t.translated(s), &g);
        let a = modulate(&f, &c, &[-5.0, 5.0], 1e-12).unwrap();
        let b = modulate(&fs, &c, &[-5.0 + s, 5.0 + s], 1e-12).unwrap();
        for (u, v) in a.x.iter().zip(&b.x) {
            assert!((v - u - s).abs() < 1e-6, "{a:?} {b:?}");
        }
        // projection: restarting from the answer does nothing
        let again = modulate(&f, &c, &a.x, 1e-12).unwrap();
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn small_perturbation_moves_the_fit_by_order_epsilon() {
        let c = [-1.0, 1.0];
        let x = [-6.0, 6.0];
        for eps in [1e-3, 1e-4] {
            let t = PeakonTrain::new(vec![-1.0, 1.0 + eps], vec![-6.0, 6.0 + eps]).unwrap();
            let f = field(&t, 1e-2);
            let r = modulate(&f, &c, &x, default_tol(&f)).unwrap();
            let dev = r.x.iter().zip(&x).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(dev < 3.0 * eps && dev > 0.1 * eps, "{eps} {dev}");
        }
    }

    #[test]
    fn unreachable_tolerance_and_bad_ordering_fail_cleanly() {
        let c = [-1.0, 1.0];
        let t = PeakonTrain::new(c.to_vec(), vec![-6.0, 6.0]).unwrap();
        let f = field(&t, 1e-2);
        let err = modulate(&f, &c, &[-5.0, 5.0], 0.0).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }), "{err}");
        assert!(matches!(
            modulate(&f, &c, &[1.0, 0.0], 1e-12),
            Err(Error::OrderingLost { .. })
        ));
    }

    #[test]
    fn bump_tracking_examples() {
        let t = PeakonTrain::single(2.0, 5.0).unwrap();
        let f = field(&t, 1e-2);
        assert_eq!(track_bumps(&f, &[5.0], 8.0).unwrap(), vec![5.0]);

        let t = PeakonTrain::new(vec![-1.0, 1.0, 2.0], vec![-10.123, 0.456, 10.789]).unwrap();
        let f = field(&t, 1e-2);
        let x = track_bumps(&f, t.positions(), 20.0).unwrap();
        assert_eq!(x, t.positions());

        assert!(matches!(
            track_bumps(&f, &[40.0], 20.0),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn quadratic_refinement_on_a_smooth_bump() {
        let g = Grid::covering(-5.0, 5.0, 1e-2).unwrap();
        let u: Vec<f64> = g.nodes().map(|x| (-(x - 0.1234_f64).powi(2)).exp()).collect();
        let ux = g.nodes().map(|x| -2.0 * (x - 0.1234) * (-(x - 0.1234_f64).powi(2)).exp()).collect();
        let f = GridField::from_samples(g, u, ux).unwrap();
        let x = track_bumps(&f, &[0.0], 4.0).unwrap()[0];
        assert!((x - 0.1234).abs() < 1e-5, "{x}");
    }

    #[test]
    fn drift_of_linear_motion() {
        let mut p = ModulationPath::default();
        for k in 0..5 {
            let t = k as f64 * 0.5;
            let fit = Modulated {
                x: vec![-t, 1.0 + 2.0 * t],
                iterations: 0,
                residual: 0.0,
            };
            p.push(t, fit, vec![-t, 1.0 + 2.0 * t]);
        }
        let d = drift_speeds(&p, &[-1.0, 2.0]);
        assert_eq!(d.len(), 5);
        assert!(d.iter().flatten().all(|v| v.abs() < 1e-14));
        assert_eq!(max_drift(&p, &[-1.0, 1.0]), 1.0);
        p.times.truncate(2);
        p.xtilde.truncate(2);
        assert!(drift_speeds(&p, &[-1.0, 2.0]).is_empty());
    }

    #[test]
    fn distance_examples() {
        let c = 1.3;
        let t = PeakonTrain::single(c, 0.2).unwrap();
        assert_eq!(h1_distance_to_train(&t, &[c], &[0.2]), 0.0);
        let shift: f64 = 0.7;
        let want = 4.0 * c * c - 4.0 * c * c * (-shift).exp();
        let d = h1_distance_to_train(&t, &[c], &[0.2 + shift]);
        assert!((d * d - want).abs() < 1e-13);
        let f = field(&t, 1e-3);
        let q = h1_distance_field(&f, &[c], &[0.2 + shift]);
        assert!((q * q - want).abs() < 1e-8, "{q} {d}");
        let moved = h1_distance_to_train(&t.translated(3.0), &[c], &[3.2 + shift]);
        assert!((moved - d).abs() < 1e-14);
    }
}
