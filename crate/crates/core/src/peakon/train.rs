use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign with the crest convention `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A multipeakon `u(x) = Σ p_j e^{-|x - q_j|}` with strictly increasing positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakonTrain {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl PeakonTrain {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidTrain("a train needs at least one peakon".into()));
        }
        if p.len() != q.len() {
            return Err(Error::InvalidTrain(format!(
                "{} amplitudes but {} positions",
                p.len(),
                q.len()
            )));
        }
        if let Some(i) = p.iter().position(|a| !a.is_finite() || *a == 0.0) {
            return Err(Error::InvalidTrain(format!(
                "amplitude p_{} = {} must be finite and nonzero",
                i + 1,
                p[i]
            )));
        }
        if let Some(i) = q.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidTrain(format!("position q_{} is not finite", i + 1)));
        }
        if let Some(i) = q.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTrain(format!(
                "positions must be strictly increasing (q_{} = {} >= q_{} = {})",
                i + 1,
                q[i],
                i + 2,
                q[i + 1]
            )));
        }
        Ok(Self { p, q })
    }

    pub fn single(amplitude: f64, position: f64) -> Result<Self> {
        Self::new(vec![amplitude], vec![position])
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.p
    }

    pub fn positions(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Number of leading negative amplitudes when the train is sign ordered.
    pub fn negative_count(&self) -> Option<usize> {
        let k = self.p.iter().take_while(|a| **a < 0.0).count();
        self.p[k..].iter().all(|a| *a > 0.0).then_some(k)
    }

    /// Antipeakons strictly left of peakons: the global-existence configuration.
    pub fn sign_ordered(&self) -> bool {
        self.negative_count().is_some()
    }

    /// A point separating the negative and positive parts of the momentum density.
    ///
    /// Chosen as the midpoint between the last antipeakon and the first peakon; for
    /// one-signed trains it sits half a unit outside the train on the empty side.
    pub fn sign_boundary(&self) -> Option<f64> {
        let k = self.negative_count()?;
        let n = self.len();
        Some(if k == 0 {
            self.q[0] - 0.5
        } else if k == n {
            self.q[n - 1] + 0.5
        } else {
            0.5 * (self.q[k - 1] + self.q[k])
        })
    }

    pub fn min_gap(&self) -> f64 {
        self.q
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| p * (-(x - q).abs()).exp())
            .sum()
    }

    /// Weak derivative `Σ p_j sgn(q_j - x) e^{-|x - q_j|}`; crests contribute zero.
    pub fn derivative(&self, x: f64) -> f64 {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| p * sgn(q - x) * (-(x - q).abs()).exp())
            .sum()
    }

    /// One-sided slopes `(u_x(q_j^-), u_x(q_j^+))` at the crest of peakon `j`.
    pub fn crest_slopes(&self, j: usize) -> (f64, f64) {
        let qj = self.q[j];
        let others: f64 = self
            .p
            .iter()
            .zip(&self.q)
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, (p, q))| p * sgn(q - qj) * (-(qj - q).abs()).exp())
            .sum();
        (others + self.p[j], others - self.p[j])
    }

    pub fn translated(&self, shift: f64) -> Self {
        Self {
            p: self.p.clone(),
            q: self.q.iter().map(|q| q + shift).collect(),
        }
    }

    /// Image under `u(x) -> -u(-x)`: `(p_i, q_i) -> (-p_{N+1-i}, -q_{N+1-i})`.
    pub fn reflected(&self) -> Self {
        Self {
            p: self.p.iter().rev().map(|p| -p).collect(),
            q: self.q.iter().rev().map(|q| -q).collect(),
        }
    }

    /// Flattened ODE state `[q_1..q_N, p_1..p_N]`.
    pub fn to_state(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    /// Inverse of [`PeakonTrain::to_state`]; ordering is re-validated.
    pub fn from_state(state: &[f64]) -> Result<Self> {
        let n = state.len() / 2;
        Self::new(state[n..].to_vec(), state[..n].to_vec())
    }
}

/// `⟨a, b⟩_{H¹} = Σ_{i,j} 2 p_i^a p_j^b e^{-|q_i^a - q_j^b|}` from the Gram kernel.
pub fn h1_inner_closed_form(a: &PeakonTrain, b: &PeakonTrain) -> f64 {
    gram_inner(a.amplitudes(), a.positions(), b.amplitudes(), b.positions())
}

pub(crate) fn gram_inner(pa: &[f64], qa: &[f64], pb: &[f64], qb: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (p, q) in pa.iter().zip(qa) {
        for (r, s) in pb.iter().zip(qb) {
            acc += p * r * (-(q - s).abs()).exp();
        }
    }
    2.0 * acc
}

/// Squared H¹ norm of `Σ a_i e^{-|x - x_i|}` for arbitrary (unsorted, possibly
/// coincident) positions.
///
/// Between consecutive sorted positions the function is `α e^{-(x-x_k)} + β e^{-(x_{k+1}-x)}`
/// and the cross terms of `f² + f_x²` cancel, so the norm is a sum of nonnegative
/// pieces. This avoids the cancellation of the Gram double sum when the combination
/// is a small difference of nearby peakons.
pub fn h1_norm_sq_of_combination(amplitudes: &[f64], positions: &[f64]) -> f64 {
    assert_eq!(amplitudes.len(), positions.len());
    let m = amplitudes.len();
    if m == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| positions[i].total_cmp(&positions[j]));
    let x: Vec<f64> = order.iter().map(|&i| positions[i]).collect();
    let a: Vec<f64> = order.iter().map(|&i| amplitudes[i]).collect();

    // left[k] = Σ_{i<=k} a_i e^{-(x_k - x_i)}, right[k] = Σ_{i>=k} a_i e^{-(x_i - x_k)}
    let mut left = vec![0.0; m];
    let mut right = vec![0.0; m];
    left[0] = a[0];
    for k in 1..m {
        left[k] = left[k - 1] * (-(x[k] - x[k - 1])).exp() + a[k];
    }
    right[m - 1] = a[m - 1];
    for k in (0..m - 1).rev() {
        right[k] = right[k + 1] * (-(x[k + 1] - x[k])).exp() + a[k];
    }
    let mut total = right[0] * right[0] + left[m - 1] * left[m - 1];
    for k in 0..m - 1 {
        let d = x[k + 1] - x[k];
        total += (left[k] * left[k] + right[k + 1] * right[k + 1]) * (-(-2.0 * d).exp_m1());
    }
    total
}

/// H¹ distance between a train and `Σ c_j e^{-|x - x_j|}`.
pub fn h1_distance_to_profile(train: &PeakonTrain, c: &[f64], centers: &[f64]) -> f64 {
    assert_eq!(c.len(), centers.len());
    let amps: Vec<f64> = train
        .amplitudes()
        .iter()
        .copied()
        .chain(c.iter().map(|c| -c))
        .collect();
    let pos: Vec<f64> = train
        .positions()
        .iter()
        .chain(centers)
        .copied()
        .collect();
    h1_norm_sq_of_combination(&amps, &pos).max(0.0).sqrt()
}

/// H¹ distance between two trains (closed form).
pub fn h1_distance(a: &PeakonTrain, b: &PeakonTrain) -> f64 {
    h1_distance_to_profile(a, b.amplitudes(), b.positions())
}
