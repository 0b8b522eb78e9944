use serde::{Deserialize, Serialize};

use super::{Matrix, Vector};
use crate::error::{Error, Result};

/// Largest entrywise asymmetry `|M - Mᵀ|` accepted by [`vecs`].
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Upper-triangular vectorization of a symmetric `n × n` matrix.
///
/// Entries are stored row by row: `[g11, g12, …, g1n, g22, …, g2n, …, gnn]`.
/// Paired with [`vecv`], `vecs(G) · vecv(z) = zᵀ G z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymVec {
    n: usize,
    data: Vec<f64>,
}

/// Length of the upper-triangular vectorization of an `n × n` matrix.
pub const fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

impl SymVec {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != sym_dim(n) {
            return Err(Error::dim(format!(
                "symmetric vector for n = {n} needs {} entries, got {}",
                sym_dim(n),
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_vector(&self) -> Vector {
        Vector::from_column_slice(&self.data)
    }

    pub fn dot(&self, other: &SymVec) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}

/// Vectorizes the upper triangle of a symmetric matrix.
///
/// Input within [`SYMMETRY_TOL`] of symmetric is symmetrized by averaging
/// before the triangle is read off.
pub fn vecs(m: &Matrix) -> Result<SymVec> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::dim(format!(
            "vecs needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    let mut data = Vec::with_capacity(sym_dim(n));
    for i in 0..n {
        for j in i..n {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > SYMMETRY_TOL {
                return Err(Error::domain(format!(
                    "vecs input not symmetric: |m[{i},{j}] - m[{j},{i}]| = {:e}",
                    (a - b).abs()
                )));
            }
            data.push(0.5 * (a + b));
        }
    }
    Ok(SymVec { n, data })
}

/// Quadratic monomial vector `[v1², 2v1v2, …, 2v1vn, v2², …, vn²]`.
pub fn vecv(v: &[f64]) -> Result<SymVec> {
    let n = v.len();
    if n == 0 {
        return Err(Error::dim("vecv of an empty vector"));
    }
    let mut data = Vec::with_capacity(sym_dim(n));
    for i in 0..n {
        data.push(v[i] * v[i]);
        for j in i + 1..n {
            data.push(2.0 * v[i] * v[j]);
        }
    }
    Ok(SymVec { n, data })
}

/// Rebuilds the symmetric matrix whose [`vecs`] is `s`.
pub fn mat_from_vecs(s: &SymVec, n: usize) -> Result<Matrix> {
    if s.data.len() != sym_dim(n) {
        return Err(Error::dim(format!(
            "cannot rebuild a {n}x{n} matrix from {} entries",
            s.data.len()
        )));
    }
    let mut m = Matrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = s.data[k];
            m[(j, i)] = s.data[k];
            k += 1;
        }
    }
    Ok(m)
}
