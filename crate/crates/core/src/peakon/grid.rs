use serde::{Deserialize, Serialize};

use super::train::PeakonTrain;
use crate::error::{Error, Result};

/// Uniform nodes `x_m = x0 + m h`, `m = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x0: f64,
    h: f64,
    n: usize,
}

impl Grid {
    pub fn new(x0: f64, h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidScenario(format!("grid spacing h = {h} must be positive")));
        }
        if n < 2 {
            return Err(Error::InvalidScenario(format!("grid needs at least 2 nodes, got {n}")));
        }
        if !x0.is_finite() || !(x0 + h * (n - 1) as f64).is_finite() {
            return Err(Error::InvalidScenario("grid nodes must be finite".into()));
        }
        Ok(Self { x0, h, n })
    }

    /// Smallest grid with spacing `h` starting at `lo` and reaching at least `hi`.
    pub fn covering(lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidScenario(format!("empty grid interval [{lo}, {hi}]")));
        }
        let n = ((hi - lo) / h).ceil() as usize + 1;
        Self::new(lo, h, n.max(2))
    }

    /// Grid over `[min q - pad, max q + pad]`.
    pub fn around(train: &PeakonTrain, pad: f64, h: f64) -> Result<Self> {
        let q = train.positions();
        Self::covering(q[0] - pad, q[q.len() - 1] + pad, h)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node(&self, m: usize) -> f64 {
        self.x0 + m as f64 * self.h
    }

    pub fn x_end(&self) -> f64 {
        self.node(self.n - 1)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x0 && x <= self.x_end()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |m| self.node(m))
    }

    /// Node index within `1e-9 h` of `x`, if any.
    pub fn snap(&self, x: f64) -> Option<usize> {
        let s = (x - self.x0) / self.h;
        let m = s.round();
        ((s - m).abs() <= 1e-9 && m >= 0.0 && (m as usize) < self.n).then_some(m as usize)
    }

    /// Index of the cell `[x_m, x_{m+1}]` containing `x` (clamped to the grid).
    pub fn cell(&self, x: f64) -> usize {
        let s = ((x - self.x0) / self.h).floor();
        (s.max(0.0) as usize).min(self.n - 2)
    }
}

/// A point where the sampled function or its derivative jumps, with one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub x: f64,
    pub u_minus: f64,
    pub u_plus: f64,
    pub ux_minus: f64,
    pub ux_plus: f64,
}

/// Integrand argument: position, value and derivative on one side of any kink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub u: f64,
    pub ux: f64,
}

/// Nodal samples of `u` and its weak derivative, plus the exact kinks of the sampled
/// function so that quadrature can split cells at crests.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub kinks: Vec<Kink>,
}

pub fn sample_on_grid(train: &PeakonTrain, grid: &Grid) -> GridField {
    let u = grid.nodes().map(|x| train.evaluate(x)).collect();
    let ux = grid.nodes().map(|x| train.derivative(x)).collect();
    let kinks = (0..train.len())
        .filter(|&j| grid.contains(train.positions()[j]))
        .map(|j| {
            let x = train.positions()[j];
            let value = train.evaluate(x);
            let (l, r) = train.crest_slopes(j);
            Kink {
                x,
                u_minus: value,
                u_plus: value,
                ux_minus: l,
                ux_plus: r,
            }
        })
        .collect();
    GridField {
        grid: *grid,
        u,
        ux,
        kinks,
    }
}

struct Break {
    x: f64,
    node: Option<usize>,
    left: Point,
    right: Point,
    aux: Vec<f64>,
}

impl GridField {
    /// A field without kinks.
    pub fn from_samples(grid: Grid, u: Vec<f64>, ux: Vec<f64>) -> Result<Self> {
        if u.len() != grid.n() || ux.len() != grid.n() {
            return Err(Error::InvalidScenario(format!(
                "field has {} / {} samples for {} nodes",
                u.len(),
                ux.len(),
                grid.n()
            )));
        }
        if u.iter().chain(&ux).any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario("field samples must be finite".into()));
        }
        Ok(Self {
            grid,
            u,
            ux,
            kinks: Vec::new(),
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            u: vec![0.0; grid.n()],
            ux: vec![0.0; grid.n()],
            kinks: Vec::new(),
        }
    }

    pub fn point(&self, m: usize) -> Point {
        Point {
            x: self.grid.node(m),
            u: self.u[m],
            ux: self.ux[m],
        }
    }

    /// Scalar density `f(point)` as a new field; the derivative slot is left at zero
    /// and kinks carry the one-sided density values.
    pub fn density(&self, f: impl Fn(&Point) -> f64) -> GridField {
        let u = (0..self.grid.n()).map(|m| f(&self.point(m))).collect();
        let kinks = self
            .kinks
            .iter()
            .map(|k| {
                let (l, r) = kink_points(k);
                Kink {
                    x: k.x,
                    u_minus: f(&l),
                    u_plus: f(&r),
                    ux_minus: 0.0,
                    ux_plus: 0.0,
                }
            })
            .collect();
        GridField {
            grid: self.grid,
            u,
            ux: vec![0.0; self.grid.n()],
            kinks,
        }
    }

    /// `u - c e^{-|x - ξ|}` with the profile's crest recorded as a new kink.
    pub fn minus_peakon(&self, c: f64, xi: f64) -> GridField {
        let phi = |x: f64| c * (-(x - xi).abs()).exp();
        let dphi = |x: f64| -c * super::train::sgn(x - xi) * (-(x - xi).abs()).exp();
        let mut out = self.clone();
        for m in 0..self.grid.n() {
            let x = self.grid.node(m);
            out.u[m] -= phi(x);
            out.ux[m] -= dphi(x);
        }
        for k in &mut out.kinks {
            k.u_minus -= phi(k.x);
            k.u_plus -= phi(k.x);
            k.ux_minus -= dphi(k.x);
            k.ux_plus -= dphi(k.x);
        }
        if let Some(k) = out.kinks.iter_mut().find(|k| k.x == xi) {
            k.ux_minus -= c;
            k.ux_plus += c;
        } else if self.grid.contains(xi) {
            let (u, ux) = self.interpolate(xi);
            out.kinks.push(Kink {
                x: xi,
                u_minus: u - c,
                u_plus: u - c,
                ux_minus: ux - c,
                ux_plus: ux + c,
            });
            out.kinks.sort_by(|a, b| a.x.total_cmp(&b.x));
        }
        out
    }

    /// Cubic Hermite interpolation of `(u, u_x)` on the smooth piece containing `x`,
    /// using one-sided slopes at kinks; returns crest averages exactly at a kink.
    pub fn interpolate(&self, x: f64) -> (f64, f64) {
        if let Some(k) = self.kinks.iter().find(|k| k.x == x) {
            return (0.5 * (k.u_minus + k.u_plus), 0.5 * (k.ux_minus + k.ux_plus));
        }
        let m = self.grid.cell(x);
        let (xa, xb) = (self.grid.node(m), self.grid.node(m + 1));
        let mut a = (xa, self.u[m], self.ux[m]);
        let mut b = (xb, self.u[m + 1], self.ux[m + 1]);
        for k in &self.kinks {
            match self.grid.snap(k.x) {
                Some(j) if j == m => a = (xa, k.u_plus, k.ux_plus),
                Some(j) if j == m + 1 => b = (xb, k.u_minus, k.ux_minus),
                Some(_) => {}
                None => {
                    if k.x > a.0 && k.x < x {
                        a = (k.x, k.u_plus, k.ux_plus);
                    } else if k.x > x && k.x < b.0 {
                        b = (k.x, k.u_minus, k.ux_minus);
                    }
                }
            }
        }
        let w = b.0 - a.0;
        if w <= 0.0 {
            return (a.1, a.2);
        }
        let s = (x - a.0) / w;
        let (s2, s3) = (s * s, s * s * s);
        let u = (2.0 * s3 - 3.0 * s2 + 1.0) * a.1
            + (s3 - 2.0 * s2 + s) * w * a.2
            + (-2.0 * s3 + 3.0 * s2) * b.1
            + (s3 - s2) * w * b.2;
        let ux = (6.0 * s2 - 6.0 * s) * a.1 / w
            + (3.0 * s2 - 4.0 * s + 1.0) * a.2
            + (-6.0 * s2 + 6.0 * s) * b.1 / w
            + (3.0 * s2 - 2.0 * s) * b.2;
        (u, ux)
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Grid maximum of `u` including exact crest values.
    pub fn max_value(&self) -> f64 {
        let nodes = self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.kinks
            .iter()
            .map(|k| k.u_minus.max(k.u_plus))
            .fold(nodes, f64::max)
    }

    /// `∫ f` by plain composite trapezoid on the nodes, ignoring kinks.
    pub fn integrate_trapezoid(&self, f: impl Fn(&Point) -> f64) -> f64 {
        let n = self.grid.n();
        let inner: f64 = (1..n - 1).map(|m| f(&self.point(m))).sum();
        self.grid.h() * (inner + 0.5 * (f(&self.point(0)) + f(&self.point(n - 1))))
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        let mut out = [0.0];
        self.integrate_into(&[], &mut out, |p, _, acc| acc[0] = f(p));
        out[0]
    }

    /// `∫ f(point, aux)` where `aux` are extra nodal series (continuous across kinks).
    pub fn integrate_with(&self, aux: &[&[f64]], f: impl Fn(&Point, &[f64]) -> f64) -> f64 {
        let mut out = [0.0];
        self.integrate_into(aux, &mut out, |p, a, acc| acc[0] = f(p, a));
        out[0]
    }

    /// Vector-valued quadrature: `f` writes all integrand components into its slice.
    ///
    /// Cells containing a kink are split there and each smooth piece is integrated by
    /// trapezoid with an Euler-Maclaurin end correction from one-sided differences,
    /// which makes the rule third order for piecewise smooth integrands.
    pub fn integrate_into<F>(&self, aux: &[&[f64]], out: &mut [f64], f: F)
    where
        F: Fn(&Point, &[f64], &mut [f64]),
    {
        let dim = out.len();
        out.fill(0.0);
        let g = self.grid;
        let h = g.h();
        let n = g.n();
        let aux_at = |m: usize, buf: &mut Vec<f64>| {
            buf.clear();
            buf.extend(aux.iter().map(|s| s[m]));
        };

        // Breakpoints: grid ends and kinks.
        let mut breaks: Vec<Break> = Vec::with_capacity(self.kinks.len() + 2);
        let mut buf = Vec::new();
        for m in [0, n - 1] {
            aux_at(m, &mut buf);
            let p = self.point(m);
            breaks.push(Break {
                x: p.x,
                node: Some(m),
                left: p,
                right: p,
                aux: buf.clone(),
            });
        }
        for k in &self.kinks {
            if !(k.x >= g.x0() && k.x <= g.x_end()) {
                continue;
            }
            let (l, r) = kink_points(k);
            let node = g.snap(k.x);
            let aux_vals = match node {
                Some(m) => aux.iter().map(|s| s[m]).collect(),
                None => {
                    let m = g.cell(k.x);
                    let w = (k.x - g.node(m)) / h;
                    aux.iter().map(|s| s[m] + w * (s[m + 1] - s[m])).collect()
                }
            };
            match node.and_then(|m| breaks.iter_mut().find(|b| b.node == Some(m))) {
                Some(b) => {
                    b.left = l;
                    b.right = r;
                }
                None => breaks.push(Break {
                    x: node.map_or(k.x, |m| g.node(m)),
                    node,
                    left: l,
                    right: r,
                    aux: aux_vals,
                }),
            }
        }
        breaks.sort_by(|a, b| a.x.total_cmp(&b.x));

        let mut fa = vec![0.0; dim];
        let mut fb = vec![0.0; dim];
        let mut cur = vec![0.0; dim];
        let mut prev = vec![0.0; dim];
        let mut head = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
        let mut tail = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
        let mut piece = vec![0.0; dim];

        for w in breaks.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.x <= a.x {
                continue;
            }
            f(&a.right, &a.aux, &mut fa);
            f(&b.left, &b.aux, &mut fb);
            let first = match a.node {
                Some(m) => m + 1,
                None => g.cell(a.x) + 1,
            };
            let last = match b.node {
                Some(m) => m.saturating_sub(1),
                None => g.cell(b.x),
            };
            piece.fill(0.0);
            if first > last || first >= n {
                for d in 0..dim {
                    piece[d] = 0.5 * (b.x - a.x) * (fa[d] + fb[d]);
                }
                for d in 0..dim {
                    out[d] += piece[d];
                }
                continue;
            }
            // Uniform run: interior nodes plus the endpoints that sit on nodes.
            let mut run_len = 0usize;
            if a.node.is_some() {
                push_run(&fa, &mut run_len, &mut head, &mut tail);
            }
            let mut have_prev = a.node.is_some();
            if have_prev {
                prev.copy_from_slice(&fa);
            }
            for m in first..=last {
                self.node_value(m, aux, &f, &mut buf, &mut cur);
                if have_prev {
                    for d in 0..dim {
                        piece[d] += 0.5 * h * (prev[d] + cur[d]);
                    }
                }
                push_run(&cur, &mut run_len, &mut head, &mut tail);
                prev.copy_from_slice(&cur);
                have_prev = true;
            }
            if b.node.is_some() {
                for d in 0..dim {
                    piece[d] += 0.5 * h * (prev[d] + fb[d]);
                }
                push_run(&fb, &mut run_len, &mut head, &mut tail);
            }
            // Ragged ends: integrate the quadratic through the kink value and the
            // two nearest nodes (trapezoid when only one node is available).
            if a.node.is_none() {
                let w = g.node(first) - a.x;
                for d in 0..dim {
                    piece[d] += partial_cell(w, h, fa[d], head[0][d], head[1][d], run_len);
                }
            }
            if b.node.is_none() {
                let w = b.x - g.node(last);
                for d in 0..dim {
                    piece[d] += partial_cell(w, h, fb[d], tail[2][d], tail[1][d], run_len);
                }
            }
            if run_len >= 3 {
                for d in 0..dim {
                    let ds = (-3.0 * head[0][d] + 4.0 * head[1][d] - head[2][d]) / (2.0 * h);
                    let de = (3.0 * tail[2][d] - 4.0 * tail[1][d] + tail[0][d]) / (2.0 * h);
                    piece[d] -= h * h / 12.0 * (de - ds);
                }
            }
            for d in 0..dim {
                out[d] += piece[d];
            }
        }
    }

    fn node_value<F>(&self, m: usize, aux: &[&[f64]], f: &F, buf: &mut Vec<f64>, out: &mut [f64])
    where
        F: Fn(&Point, &[f64], &mut [f64]),
    {
        buf.clear();
        buf.extend(aux.iter().map(|s| s[m]));
        f(&self.point(m), buf, out);
    }
}

/// `∫` over a cell fragment of width `w` ending at a node, from the quadratic through
/// the fragment's far end `f0`, the node `f1` and the next node `f2` (spacing `h`).
fn partial_cell(w: f64, h: f64, f0: f64, f1: f64, f2: f64, run_len: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if run_len < 2 {
        return 0.5 * w * (f0 + f1);
    }
    let d1 = (f1 - f0) / w;
    let d2 = ((f2 - f1) / h - d1) / (w + h);
    f0 * w + 0.5 * d1 * w * w - d2 * w * w * w / 6.0
}

/// Record a node value of a uniform run, keeping its first and last three entries.
fn push_run(vals: &[f64], run_len: &mut usize, head: &mut [Vec<f64>; 3], tail: &mut [Vec<f64>; 3]) {
    if *run_len < 3 {
        head[*run_len].copy_from_slice(vals);
    }
    tail.rotate_left(1);
    tail[2].copy_from_slice(vals);
    *run_len += 1;
}

fn kink_points(k: &Kink) -> (Point, Point) {
    (
        Point {
            x: k.x,
            u: k.u_minus,
            ux: k.ux_minus,
        },
        Point {
            x: k.x,
            u: k.u_plus,
            ux: k.ux_plus,
        },
    )
}
