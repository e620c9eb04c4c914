//! The monotone cutoff `Ψ`, its dilations, and the weight family tracking the bumps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth weight with analytic first and third derivatives.
pub trait Weight: Sync {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d3(&self, x: f64) -> f64;
}

/// `Ψ(x) = e^{-|x|}` for `x < -1`, `1 - e^{-|x|}` for `x > 1`, and a C² odd-symmetric
/// bridge on `[-1, 1]` (odd about the point `(0, 1/2)`).
///
/// The bridge derivative `w = Ψ'` solves `w'' = -R w` near `±1` and `w'' = R w` in
/// the middle, switching once, so `|Ψ'''| = R Ψ'` on the whole bridge. `R` is the
/// value for which the area of `w` on `[0, 1]` equals `Ψ(1) - Ψ(0) = 1/2 - e^{-1}`,
/// found by bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    /// `ω = √R`.
    omega: f64,
    /// Length of the outer pieces `[1 - s1, 1]`.
    s1: f64,
    /// Amplitude of the middle piece `a cosh(ωx)`.
    a: f64,
    /// Multiplies the bridge slope; `-1` is the deliberately broken variant.
    slope_sign: f64,
}

const E1: f64 = 0.367_879_441_171_442_33; // e^{-1}

/// Outer-piece slope in `s = 1 - x`: `w(s) = e^{-1}(cos ωs + sin(ωs)/ω)`.
fn outer_w(omega: f64, s: f64) -> f64 {
    E1 * ((omega * s).cos() + (omega * s).sin() / omega)
}

/// `dw/ds` of the outer piece.
fn outer_ws(omega: f64, s: f64) -> f64 {
    E1 * ((omega * s).cos() - omega * (omega * s).sin())
}

/// `∫_0^s w` of the outer piece.
fn outer_area(omega: f64, s: f64) -> f64 {
    E1 * ((omega * s).sin() / omega + (1.0 - (omega * s).cos()) / (omega * omega))
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Junction `s1` and middle amplitude `a` for a given `ω`, from matching the
/// logarithmic derivatives of the outer and middle pieces.
fn junction(omega: f64) -> (f64, f64) {
    // The outer piece stays positive until ωs = π - atan(ω); its log-derivative in x
    // increases with s while the middle piece's decreases.
    let s_max = ((std::f64::consts::PI - omega.atan()) / omega).min(1.0);
    let mismatch = |s: f64| {
        let lhs = -outer_ws(omega, s) / outer_w(omega, s);
        let rhs = omega * (omega * (1.0 - s)).tanh();
        lhs - rhs
    };
    let s1 = bisect(0.0, s_max * (1.0 - 1e-12), mismatch);
    let a = outer_w(omega, s1) / (omega * (1.0 - s1)).cosh();
    (s1, a)
}

fn half_area(omega: f64) -> f64 {
    let (s1, a) = junction(omega);
    a / omega * (omega * (1.0 - s1)).sinh() + outer_area(omega, s1)
}

impl WeightProfile {
    pub fn new() -> Self {
        let target = 0.5 - E1;
        let omega = bisect(2.0, 10.0, |om| half_area(om) - target);
        let (s1, a) = junction(omega);
        Self {
            omega,
            s1,
            a,
            slope_sign: 1.0,
        }
    }

    /// Profile with the bridge slope negated; violates monotonicity by design.
    pub fn with_flipped_bridge() -> Self {
        Self {
            slope_sign: -1.0,
            ..Self::new()
        }
    }

    /// The constant `R` with `|Ψ'''| = R Ψ'` on the bridge.
    pub fn bridge_ratio(&self) -> f64 {
        self.omega * self.omega
    }

    /// `(Ψ, Ψ', Ψ'', Ψ''')` for `x ∈ [0, 1]` on the unflipped bridge.
    fn right_bridge(&self, x: f64) -> [f64; 4] {
        let om = self.omega;
        let xj = 1.0 - self.s1;
        if x <= xj {
            let ch = (om * x).cosh();
            let sh = (om * x).sinh();
            [
                0.5 + self.a / om * sh,
                self.a * ch,
                self.a * om * sh,
                self.a * om * om * ch,
            ]
        } else {
            let s = 1.0 - x;
            let w = outer_w(om, s);
            [
                1.0 - E1 - outer_area(om, s),
                w,
                -outer_ws(om, s),
                -om * om * w,
            ]
        }
    }

    /// `(Ψ, Ψ', Ψ'', Ψ''')` at `x`.
    pub fn derivatives(&self, x: f64) -> [f64; 4] {
        if x > 1.0 {
            let e = (-x).exp();
            return [1.0 - e, e, -e, e];
        }
        if x < -1.0 {
            let e = x.exp();
            return [e, e, e, e];
        }
        let mut d = if x >= 0.0 {
            self.right_bridge(x)
        } else {
            let r = self.right_bridge(-x);
            [1.0 - r[0], r[1], -r[2], r[3]]
        };
        if self.slope_sign < 0.0 {
            d[0] = 1.0 - d[0];
            for v in &mut d[1..] {
                *v = -*v;
            }
        }
        d
    }

    pub fn psi(&self, x: f64) -> f64 {
        self.derivatives(x)[0]
    }

    pub fn psi_prime(&self, x: f64) -> f64 {
        self.derivatives(x)[1]
    }

    pub fn psi_ppp(&self, x: f64) -> f64 {
        self.derivatives(x)[3]
    }

    /// Evaluate every profile constraint on dense samples.
    pub fn check(&self) -> ProfileCheck {
        let mesh = |lo: f64, hi: f64, n: usize| {
            (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        };
        let mut min_psi = f64::INFINITY;
        let mut max_psi = f64::NEG_INFINITY;
        let mut min_psi_prime = f64::INFINITY;
        for x in mesh(-5.0, 5.0, 10_000) {
            let d = self.derivatives(x);
            min_psi = min_psi.min(d[0]);
            max_psi = max_psi.max(d[0]);
            min_psi_prime = min_psi_prime.min(d[1]);
        }
        let max_ratio = mesh(-1.0, 1.0, 10_000)
            .map(|x| {
                let d = self.derivatives(x);
                d[3].abs() / d[1].abs()
            })
            .fold(0.0, f64::max);
        let mut c2_mismatch: f64 = 0.0;
        for side in [-1.0, 1.0] {
            let inside = if side > 0.0 {
                self.right_bridge(1.0)
            } else {
                let r = self.right_bridge(1.0);
                [1.0 - r[0], r[1], -r[2], r[3]]
            };
            let inside = if self.slope_sign < 0.0 {
                [1.0 - inside[0], -inside[1], -inside[2], -inside[3]]
            } else {
                inside
            };
            let e = E1;
            let tail = if side > 0.0 { [1.0 - e, e, -e] } else { [e, e, e] };
            for k in 0..3 {
                c2_mismatch = c2_mismatch.max((inside[k] - tail[k]).abs());
            }
        }
        let tail_mismatch = [-3.0_f64, -1.5, 1.5, 3.0]
            .iter()
            .map(|&x| {
                let expect = if x < 0.0 { x.exp() } else { 1.0 - (-x).exp() };
                (self.psi(x) - expect).abs()
            })
            .fold(0.0, f64::max);
        ProfileCheck {
            min_psi,
            max_psi,
            min_psi_prime,
            max_ratio,
            c2_mismatch,
            tail_mismatch,
        }
    }
}

impl Default for WeightProfile {
    fn default() -> Self {
        Self::new()
    }
}

/// Sampled extremes of the profile constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileCheck {
    pub min_psi: f64,
    pub max_psi: f64,
    pub min_psi_prime: f64,
    /// `max |Ψ'''| / |Ψ'|` on `[-1, 1]`.
    pub max_ratio: f64,
    /// Largest jump in value, first or second derivative at `x = ±1`.
    pub c2_mismatch: f64,
    pub tail_mismatch: f64,
}

pub const RATIO_BOUND: f64 = 10.0;

impl ProfileCheck {
    pub fn bounded(&self) -> bool {
        self.min_psi > 0.0 && self.max_psi <= 1.0
    }

    pub fn increasing(&self) -> bool {
        self.min_psi_prime > 0.0
    }

    pub fn ratio_ok(&self) -> bool {
        self.max_ratio <= RATIO_BOUND
    }

    pub fn smooth(&self) -> bool {
        self.c2_mismatch <= 1e-12 && self.tail_mismatch <= 1e-12
    }

    pub fn all(&self) -> bool {
        self.bounded() && self.increasing() && self.ratio_ok() && self.smooth()
    }
}

/// `Ψ((x - center) / K)`, or `Ψ((center - x) / K)` when mirrored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedWeight {
    pub profile: WeightProfile,
    pub k: f64,
    pub center: f64,
    pub mirrored: bool,
}

impl ShiftedWeight {
    fn arg(&self, x: f64) -> (f64, f64) {
        if self.mirrored {
            ((self.center - x) / self.k, -1.0)
        } else {
            ((x - self.center) / self.k, 1.0)
        }
    }
}

impl Weight for ShiftedWeight {
    fn value(&self, x: f64) -> f64 {
        self.profile.psi(self.arg(x).0)
    }
    fn d1(&self, x: f64) -> f64 {
        let (z, s) = self.arg(x);
        s * self.profile.psi_prime(z) / self.k
    }
    fn d3(&self, x: f64) -> f64 {
        let (z, s) = self.arg(x);
        s * self.profile.psi_ppp(z) / self.k.powi(3)
    }
}

/// `(1 + tanh((x - center) / width)) / 2`, a smooth monotone weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhWeight {
    pub center: f64,
    pub width: f64,
}

impl Weight for TanhWeight {
    fn value(&self, x: f64) -> f64 {
        0.5 * (1.0 + ((x - self.center) / self.width).tanh())
    }
    fn d1(&self, x: f64) -> f64 {
        let t = ((x - self.center) / self.width).tanh();
        0.5 * (1.0 - t * t) / self.width
    }
    fn d3(&self, x: f64) -> f64 {
        let t = ((x - self.center) / self.width).tanh();
        let s = 1.0 - t * t;
        // d²/dz² sech² z = sech² z (4 tanh² z - 2 sech² z)
        0.5 * s * (4.0 * t * t - 2.0 * s) / self.width.powi(3)
    }
}

/// Constant weight `g ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitWeight;

impl Weight for UnitWeight {
    fn value(&self, _: f64) -> f64 {
        1.0
    }
    fn d1(&self, _: f64) -> f64 {
        0.0
    }
    fn d3(&self, _: f64) -> f64 {
        0.0
    }
}

/// Default dilation `K = √L / 8`.
pub fn default_scale(spacing: f64) -> f64 {
    spacing.sqrt() / 8.0
}

/// Resolve the weight scale: the default is taken as is, an explicit value must lie
/// in `[4, √L]`.
pub fn resolve_scale(spacing: f64, k_override: Option<f64>) -> Result<f64> {
    match k_override {
        None => Ok(default_scale(spacing)),
        Some(k) if !k.is_finite() || k < 4.0 => Err(Error::BadScale {
            k,
            reason: "K must be at least 4".into(),
        }),
        Some(k) if k > spacing.sqrt() => Err(Error::BadScale {
            k,
            reason: format!("K must not exceed sqrt(L) = {}", spacing.sqrt()),
        }),
        Some(k) => Ok(k),
    }
}

/// Centers `y_j(t)` and dilation of the weights localizing each bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFamily {
    pub profile: WeightProfile,
    pub k: f64,
    pub velocities: Vec<f64>,
    /// Number of negative velocities.
    pub neg: usize,
    pub spacing: f64,
    /// Modulation positions at `t = 0`.
    pub xtilde0: Vec<f64>,
}

/// Weight centers at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Centers {
    /// `y_{k+1}, …, y_N`.
    pub right: Vec<f64>,
    /// `y_k` for the mirrored left weight, when `k ≥ 1`.
    pub left: Option<f64>,
}

pub fn build_weight_family(
    profile: WeightProfile,
    k_override: Option<f64>,
    velocities: &[f64],
    spacing: f64,
    xtilde0: &[f64],
) -> Result<WeightFamily> {
    let k = resolve_scale(spacing, k_override)?;
    if xtilde0.len() != velocities.len() {
        return Err(Error::InvalidScenario(format!(
            "{} initial positions for {} velocities",
            xtilde0.len(),
            velocities.len()
        )));
    }
    Ok(WeightFamily {
        profile,
        k,
        velocities: velocities.to_vec(),
        neg: velocities.iter().filter(|c| **c < 0.0).count(),
        spacing,
        xtilde0: xtilde0.to_vec(),
    })
}

impl WeightFamily {
    pub fn n(&self) -> usize {
        self.velocities.len()
    }

    /// Centers at time `t` given the modulation positions at that time.
    pub fn centers(&self, t: f64, xtilde: &[f64]) -> Centers {
        let (n, k, l) = (self.n(), self.neg, self.spacing);
        let c = &self.velocities;
        let mut right = Vec::with_capacity(n - k);
        if k < n {
            right.push(self.xtilde0[k] + 0.5 * c[k] * t - 0.25 * l);
            for i in k + 1..n {
                right.push(0.5 * (xtilde[i - 1] + xtilde[i]));
            }
        }
        let left = (k >= 1).then(|| self.xtilde0[k - 1] + 0.5 * c[k - 1] * t + 0.25 * l);
        Centers { right, left }
    }

    pub fn weight(&self, center: f64) -> ShiftedWeight {
        ShiftedWeight {
            profile: self.profile,
            k: self.k,
            center,
            mirrored: false,
        }
    }

    pub fn mirrored_weight(&self, center: f64) -> ShiftedWeight {
        ShiftedWeight {
            mirrored: true,
            ..self.weight(center)
        }
    }

    /// Partition `Φ_i` (`i` indexing `centers.right`) at `x`.
    pub fn phi(&self, centers: &Centers, i: usize, x: f64) -> f64 {
        let psi = |y: f64| self.profile.psi((x - y) / self.k);
        let r = &centers.right;
        if i + 1 < r.len() {
            psi(r[i]) - psi(r[i + 1])
        } else {
            psi(r[i])
        }
    }
}

/// `σ₀ = ¼ min(c_{k+1}, c_{k+2} - c_{k+1}, …, c_N - c_{N-1})`.
pub fn sigma0(velocities: &[f64], neg: usize) -> f64 {
    let pos = &velocities[neg..];
    if pos.is_empty() {
        return 0.0;
    }
    let gap = pos
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(pos[0], f64::min);
    0.25 * gap
}
