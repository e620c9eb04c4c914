use serde::{Deserialize, Serialize};

use super::jacobi::{symmetric_eigen, Matrix};
use crate::error::{Error, Result};
use crate::peakon::PeakonTrain;

/// The matrix `M_ij = p_j e^{-|q_i - q_j|/2}` whose eigenvalues are the asymptotic speeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

pub fn asymptotic_matrix(train: &PeakonTrain) -> SpectralData {
    let (p, q) = (train.amplitudes(), train.positions());
    let n = p.len();
    let matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| p[j] * (-0.5 * (q[i] - q[j]).abs()).exp())
                .collect()
        })
        .collect();
    SpectralData {
        p: p.to_vec(),
        q: q.to_vec(),
        matrix,
    }
}

/// Sorted spectrum of `M = E P` computed from the similar symmetric matrix
/// `E^{1/2} P E^{1/2}`, with `E_ij = e^{-|q_i - q_j|/2}` and `P = diag(p)`.
pub fn eigenvalues_real(data: &SpectralData) -> Result<Vec<f64>> {
    let n = data.p.len();
    let e = Matrix::from_fn(n, |i, j| (-0.5 * (data.q[i] - data.q[j]).abs()).exp());
    let (ev, v) = symmetric_eigen(&e);
    if ev[0] <= 1e-12 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: ev[0],
        });
    }
    let root = Matrix::from_fn(n, |i, j| {
        (0..n).map(|k| v[(i, k)] * ev[k].sqrt() * v[(j, k)]).sum()
    });
    let s = Matrix::from_fn(n, |i, j| {
        (0..n).map(|k| root[(i, k)] * data.p[k] * root[(k, j)]).sum()
    });
    let s = Matrix::from_fn(n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    Ok(symmetric_eigen(&s).0)
}
