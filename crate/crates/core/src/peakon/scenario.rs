use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::{h1_distance_to_profile, PeakonTrain};
use crate::error::{Error, Result};

pub const DEFAULT_RETRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    AmplitudeJitter,
    PositionJitter,
    ExtraSmallPeakons,
    Mixed,
}

/// Experiment description: an ordered train of solitary waves plus perturbation,
/// horizon, grid and tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Velocities `c_1 < ... < c_k < 0 < c_{k+1} < ... < c_N`.
    pub velocities: Vec<f64>,
    /// Initial spacing between consecutive bumps.
    pub spacing: f64,
    pub epsilon: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub perturbation_mode: PerturbationMode,
    /// Weights `λ` for the monotone functionals; `None` selects the default family.
    #[serde(default)]
    pub lambda_list: Option<Vec<f64>>,
    /// Weight scale `K`; `None` selects `√L / 8`.
    #[serde(default)]
    pub k_scale: Option<f64>,
    #[serde(default = "default_h")]
    pub grid_h: f64,
    #[serde(default = "default_pad")]
    pub grid_pad: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
}

fn default_mode() -> PerturbationMode {
    PerturbationMode::Mixed
}
fn default_h() -> f64 {
    1e-2
}
fn default_pad() -> f64 {
    25.0
}
fn default_samples() -> usize {
    200
}
fn default_rel_tol() -> f64 {
    1e-10
}
fn default_abs_tol() -> f64 {
    1e-12
}

impl Scenario {
    pub fn new(velocities: Vec<f64>, spacing: f64, epsilon: f64, t_end: f64) -> Self {
        Self {
            velocities,
            spacing,
            epsilon,
            t_end,
            seed: 0,
            perturbation_mode: default_mode(),
            lambda_list: None,
            k_scale: None,
            grid_h: default_h(),
            grid_pad: default_pad(),
            samples: default_samples(),
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
        }
    }

    pub fn n(&self) -> usize {
        self.velocities.len()
    }

    /// Number of negative velocities.
    pub fn k(&self) -> usize {
        self.velocities.iter().filter(|c| **c < 0.0).count()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        let c = &self.velocities;
        if c.is_empty() {
            return bad("velocities must be nonempty".into());
        }
        if let Some(i) = c.iter().position(|v| !v.is_finite() || *v == 0.0) {
            return bad(format!("velocity c_{} = {} must be finite and nonzero", i + 1, c[i]));
        }
        if let Some(i) = c.windows(2).position(|w| w[0] >= w[1]) {
            return bad(format!(
                "velocities must be strictly increasing (c_{} = {} >= c_{} = {})",
                i + 1,
                c[i],
                i + 2,
                c[i + 1]
            ));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return bad(format!("spacing L = {} must be positive", self.spacing));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon = {} must be nonnegative", self.epsilon));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if !(self.grid_h > 0.0) || !(self.grid_pad > 0.0) {
            return bad("grid spacing and padding must be positive".into());
        }
        if self.samples < 2 {
            return bad(format!("need at least 2 output samples, got {}", self.samples));
        }
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return bad(format!("{name} = {tol} must lie in (0, 1e-2]"));
            }
        }
        if let Some(lams) = &self.lambda_list {
            let upper = self.lambda_upper();
            if let Some(l) = lams.iter().find(|l| !(**l >= 0.0 && **l <= upper * (1.0 + 1e-12))) {
                return bad(format!("lambda = {l} outside [0, {upper}]"));
            }
        }
        Ok(())
    }

    /// Largest admissible `λ`, `2 / c_{k+1}` (zero when no velocity is positive).
    pub fn lambda_upper(&self) -> f64 {
        self.velocities
            .iter()
            .find(|c| **c > 0.0)
            .map_or(0.0, |c| 2.0 / c)
    }

    /// Unperturbed centers `z_j⁰`, spaced by `L`, with the sign change at the origin.
    pub fn centers(&self) -> Vec<f64> {
        let n = self.n();
        let k = self.k();
        let l = self.spacing;
        let offset = if k > 0 && k < n {
            (k as f64 - 0.5) * l
        } else {
            0.5 * (n as f64 - 1.0) * l
        };
        (0..n).map(|j| j as f64 * l - offset).collect()
    }

    pub fn exact_train(&self) -> Result<PeakonTrain> {
        PeakonTrain::new(self.velocities.clone(), self.centers())
    }
}

/// Initial datum returned by [`build_perturbed_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedTrain {
    pub train: PeakonTrain,
    /// Unperturbed centers `z_j⁰`.
    pub centers: Vec<f64>,
    /// Exact H¹ distance to the unperturbed train.
    pub distance: f64,
    /// Scale applied to the random perturbation direction.
    pub scale: f64,
    pub attempts: usize,
}

impl PerturbedTrain {
    /// Wraps a caller-supplied initial train, one wave per velocity of `s`, measured
    /// against the profile centered at its own positions. No ordering is imposed.
    pub fn explicit(s: &Scenario, train: PeakonTrain) -> Result<Self> {
        s.validate()?;
        if train.len() != s.n() {
            return Err(Error::InvalidScenario(format!(
                "explicit train has {} waves for {} velocities",
                train.len(),
                s.n()
            )));
        }
        let centers = train.positions().to_vec();
        let distance = h1_distance_to_profile(&train, &s.velocities, &centers);
        Ok(Self {
            train,
            centers,
            distance,
            scale: 0.0,
            attempts: 0,
        })
    }
}

struct Direction {
    amp: Vec<f64>,
    pos: Vec<f64>,
    extra: Vec<(f64, f64)>,
}

impl Direction {
    fn apply(&self, c: &[f64], z: &[f64], s: f64) -> Result<PeakonTrain> {
        let mut pairs: Vec<(f64, f64)> = c
            .iter()
            .zip(z)
            .enumerate()
            .map(|(j, (c, z))| (c + s * self.amp[j], z + s * self.pos[j]))
            .collect();
        if s > 0.0 {
            pairs.extend(self.extra.iter().map(|(a, x)| (s * a, *x)));
        }
        pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
        PeakonTrain::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
    }
}

fn draw_direction(s: &Scenario, z: &[f64], rng: &mut ChaCha8Rng) -> Direction {
    let n = s.n();
    let k = s.k();
    let l = s.spacing;
    let mode = s.perturbation_mode;
    let use_amp = matches!(mode, PerturbationMode::AmplitudeJitter | PerturbationMode::Mixed);
    let use_pos = matches!(mode, PerturbationMode::PositionJitter | PerturbationMode::Mixed);
    let use_extra = matches!(mode, PerturbationMode::ExtraSmallPeakons | PerturbationMode::Mixed);
    let amp = s
        .velocities
        .iter()
        .map(|c| if use_amp { rng.gen_range(-0.5..0.5) * c.abs() } else { 0.0 })
        .collect();
    let pos = (0..n)
        .map(|_| if use_pos { rng.gen_range(-1.0..1.0) } else { 0.0 })
        .collect();
    let mut extra = Vec::new();
    if use_extra {
        // Small waves only where they separate from their neighbours.
        if k > 0 && k < n {
            let x0 = 0.5 * (z[k - 1] + z[k]);
            extra.push((-rng.gen_range(0.5..1.0), x0 - 0.25 * l));
            extra.push((rng.gen_range(0.5..1.0), x0 + 0.25 * l));
        } else if k == 0 {
            extra.push((rng.gen_range(0.5..1.0), z[0] - 0.25 * l));
        } else {
            extra.push((-rng.gen_range(0.5..1.0), z[n - 1] + 0.25 * l));
        }
    }
    Direction { amp, pos, extra }
}

/// Exact train plus a random perturbation rescaled so that its H¹ norm is at most `ε²`
/// while keeping antipeakons left of peakons.
pub fn build_perturbed_scenario(s: &Scenario) -> Result<PerturbedTrain> {
    build_with_retries(s, DEFAULT_RETRIES)
}

pub fn build_with_retries(s: &Scenario, retries: usize) -> Result<PerturbedTrain> {
    s.validate()?;
    let z = s.centers();
    let c = &s.velocities;
    let target = s.epsilon * s.epsilon;
    if target == 0.0 {
        return Ok(PerturbedTrain {
            train: s.exact_train()?,
            centers: z,
            distance: 0.0,
            scale: 0.0,
            attempts: 1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let dist = |dir: &Direction, scale: f64| -> Option<(PeakonTrain, f64)> {
        let t = dir.apply(c, &z, scale).ok()?;
        if !t.sign_ordered() {
            return None;
        }
        let d = h1_distance_to_profile(&t, c, &z);
        Some((t, d))
    };
    for attempt in 1..=retries {
        let dir = draw_direction(s, &z, &mut rng);
        let Some((_, full)) = dist(&dir, 1.0) else {
            continue;
        };
        if full == 0.0 {
            continue;
        }
        let guess = (target / full).min(1.0);
        let accepted = match dist(&dir, guess) {
            Some((t, d)) if d <= target => Some((t, d, guess)),
            _ => {
                // The distance is not linear in the scale for position jitter.
                let (mut lo, mut hi) = (0.0, guess);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    match dist(&dir, mid) {
                        Some((_, d)) if d <= target => lo = mid,
                        _ => hi = mid,
                    }
                }
                dist(&dir, lo).filter(|_| lo > 0.0).map(|(t, d)| (t, d, lo))
            }
        };
        if let Some((train, distance, scale)) = accepted {
            return Ok(PerturbedTrain {
                train,
                centers: z,
                distance,
                scale,
                attempts: attempt,
            });
        }
    }
    Err(Error::SignOrderViolation { attempts: retries })
}
