//! `(1 - ∂²)⁻¹ v = ½ e^{-|x|} * v` by two recursive exponential sweeps.

use crate::peakon::GridField;

/// Returns a field holding `h` in `u` and `h_x` in `ux`.
///
/// The causal sweep `A_m = e^{-h} A_{m-1} + h v_m` and the anticausal sweep `B` give
/// `h_m = ½(A_m + B_m - h v_m)` and `h_x = ½(B_m - A_m)`, the trapezoid rule for the
/// convolution. A discrete delta `v = δ_{m0} / h` maps to `½ e^{-|x - x_{m0}|}` exactly.
/// Jumps of `v` recorded as kinks of the input are integrated piecewise.
pub fn helmholtz_inverse(v: &GridField) -> GridField {
    let g = v.grid;
    let n = g.n();
    let h = g.h();
    let decay = (-h).exp();
    let mut vals = v.u.clone();
    // per-cell corrections to the causal (entering node m+1) and anticausal
    // (entering node m) sweeps, and one-sided node jumps
    let mut corr_a = vec![0.0; n];
    let mut corr_b = vec![0.0; n];
    let mut node_jump = vec![0.0; n];
    for k in &v.kinks {
        if !g.contains(k.x) {
            continue;
        }
        let (vm, vp) = (k.u_minus, k.u_plus);
        if let Some(m) = g.snap(k.x) {
            vals[m] = 0.5 * (vm + vp);
            node_jump[m] += vp - vm;
            continue;
        }
        let m = g.cell(k.x);
        let th = (k.x - g.node(m)) / h;
        let (v0, v1) = (v.u[m], v.u[m + 1]);
        let el = (-th * h).exp();
        let er = (-(1.0 - th) * h).exp();
        corr_a[m + 1] += 0.5 * th * h * (decay * v0 + er * vm) + 0.5 * (1.0 - th) * h * (er * vp + v1)
            - 0.5 * h * (decay * v0 + v1);
        corr_b[m] += 0.5 * th * h * (v0 + el * vm) + 0.5 * (1.0 - th) * h * (el * vp + decay * v1)
            - 0.5 * h * (v0 + decay * v1);
    }
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    a[0] = h * vals[0];
    for m in 1..n {
        a[m] = decay * a[m - 1] + h * vals[m] + corr_a[m];
    }
    b[n - 1] = h * vals[n - 1];
    for m in (0..n - 1).rev() {
        b[m] = decay * b[m + 1] + h * vals[m] + corr_b[m];
    }
    let hv: Vec<f64> = (0..n).map(|m| 0.5 * (a[m] + b[m] - h * vals[m])).collect();
    let hx: Vec<f64> = (0..n)
        .map(|m| 0.5 * (b[m] - a[m]) + 0.25 * h * node_jump[m])
        .collect();
    GridField {
        grid: g,
        u: hv,
        ux: hx,
        kinks: Vec::new(),
    }
}

/// `min (h² - h_x²)` over the grid, with `max h²` for scaling.
pub fn check_h_dominance(hf: &GridField) -> (f64, f64) {
    hf.u.iter()
        .zip(&hf.ux)
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), (h, hx)| {
            (lo.min(h * h - hx * hx), hi.max(h * h))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peakon::{sample_on_grid, Grid, PeakonTrain};

    fn grid(lo: f64, hi: f64, h: f64) -> Grid {
        Grid::covering(lo, hi, h).unwrap()
    }

    #[test]
    fn zero_input() {
        let g = grid(-5.0, 5.0, 0.1);
        let out = helmholtz_inverse(&GridField::zeros(g));
        assert!(out.u.iter().chain(&out.ux).all(|v| *v == 0.0));
        assert_eq!(check_h_dominance(&out).0, 0.0);
    }

    #[test]
    fn discrete_delta_is_exact() {
        let g = Grid::new(-3.0, 0.01, 601).unwrap();
        let mut v = GridField::zeros(g);
        v.u[250] = 1.0 / g.h();
        let out = helmholtz_inverse(&v);
        for m in 0..g.n() {
            let want = 0.5 * (-((m as f64 - 250.0) * g.h()).abs()).exp();
            assert!((out.u[m] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn peakon_input_matches_analytic_convolution() {
        for h in [1e-2, 5e-3] {
            let g = grid(-30.0, 30.0, h);
            let v = GridField::from_samples(
                g,
                g.nodes().map(|x| (-x.abs()).exp()).collect(),
                vec![0.0; g.n()],
            )
            .unwrap();
            let out = helmholtz_inverse(&v);
            let mut err: f64 = 0.0;
            for m in 0..g.n() {
                let x = g.node(m);
                if x.abs() > 20.0 {
                    continue;
                }
                let want = 0.5 * (1.0 + x.abs()) * (-x.abs()).exp();
                let want_x = -0.5 * x * (-x.abs()).exp();
                err = err.max((out.u[m] - want).abs()).max((out.ux[m] - want_x).abs());
                let dom = out.u[m] * out.u[m] - out.ux[m] * out.ux[m];
                assert!(dom > 0.0);
            }
            assert!(err < 2.0 * h * h, "{h} {err}");
        }
    }

    #[test]
    fn constant_input_gives_one_at_center() {
        let g = grid(-60.0, 60.0, 0.01);
        let v = GridField::from_samples(g, vec![1.0; g.n()], vec![0.0; g.n()]).unwrap();
        let out = helmholtz_inverse(&v);
        let mid = out.u[g.n() / 2];
        assert!((mid - 1.0).abs() < 1e-4, "{mid}");
    }

    #[test]
    fn jumps_are_integrated_piecewise() {
        // v = u² + u_x²/2 of a two-peakon train jumps at the crests
        let t = PeakonTrain::new(vec![1.0, 1.5], vec![0.0037, 1.2049]).unwrap();
        let exact = |h: f64| {
            let f = sample_on_grid(&t, &Grid::around(&t, 25.0, h).unwrap());
            let v = f.density(|p| p.u * p.u + 0.5 * p.ux * p.ux);
            let out = helmholtz_inverse(&v);
            let (val, _) = out.interpolate(0.6);
            val
        };
        let coarse = exact(4e-3);
        let fine = exact(2e-3);
        let finer = exact(1e-3);
        let rate = ((coarse - fine) / (fine - finer)).abs().log2();
        assert!(rate > 1.8, "{rate}");
    }

    #[test]
    fn discrete_helmholtz_residual_is_second_order() {
        let t = PeakonTrain::new(vec![-1.0, 2.0], vec![-1.3, 2.2]).unwrap();
        let mut worst = Vec::new();
        for h in [1e-2, 5e-3] {
            let f = sample_on_grid(&t, &Grid::around(&t, 25.0, h).unwrap());
            let v = f.density(|p| p.u * p.u + 0.5 * p.ux * p.ux);
            let out = helmholtz_inverse(&v);
            let g = out.grid;
            let mut w: f64 = 0.0;
            for m in 1..g.n() - 1 {
                let x = g.node(m);
                if x.abs() > 10.0 || t.positions().iter().any(|q| (x - q).abs() < 3.0 * h) {
                    continue;
                }
                let d2 = (out.u[m + 1] - 2.0 * out.u[m] + out.u[m - 1]) / (h * h);
                w = w.max((out.u[m] - d2 - v.u[m]).abs());
            }
            worst.push(w);
        }
        assert!(worst[1] < worst[0] / 3.0, "{worst:?}");
    }
}
