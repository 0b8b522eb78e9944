use super::linalg::{spectral_radius, symmetrize};
use super::Matrix;
use crate::error::{Error, Result};

const DARE_MAX_ITER: usize = 10_000;
const DARE_TOL: f64 = 1e-12;

/// Stabilizing solution of the discrete algebraic Riccati equation.
#[derive(Debug, Clone, PartialEq)]
pub struct DareSolution {
    /// Value kernel `P`.
    pub p: Matrix,
    /// Optimal gain, `u = K s`.
    pub k: Matrix,
}

fn check_lq_shapes(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<(usize, usize)> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::dim(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::dim(format!(
            "weights must be {n}x{n} and {m}x{m}, got {:?} and {:?}",
            q.shape(),
            r.shape()
        )));
    }
    Ok((n, m))
}

fn riccati_map(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix> {
    let pa = p * a;
    let s = r + b.transpose() * p * b;
    let bpa = b.transpose() * &pa;
    let gain = s
        .lu()
        .solve(&bpa)
        .ok_or_else(|| Error::singular("Riccati: R + BᵀPB", f64::INFINITY))?;
    let next = a.transpose() * &pa - bpa.transpose() * gain + q;
    Ok(symmetrize(&next))
}

/// Largest entrywise violation of `P = AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA + Q`.
pub fn dare_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<f64> {
    check_lq_shapes(a, b, q, r)?;
    Ok((riccati_map(a, b, q, r, p)? - p).amax())
}

/// Solves the DARE by fixed-point iteration of the Riccati map from `P₀ = Q`.
///
/// Iterates until the residual drops below `1e-12·max(1, ‖P‖_max)`; gives up
/// after 10 000 iterations. Returns `P` with the gain
/// `K* = −(R + BᵀPB)⁻¹BᵀPA`, which must stabilize `A + BK*`.
pub fn solve_dare(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<DareSolution> {
    check_lq_shapes(a, b, q, r)?;
    let mut p = symmetrize(q);
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..DARE_MAX_ITER {
        let next = riccati_map(a, b, q, r, &p)?;
        residual = (&next - &p).amax();
        p = next;
        if !residual.is_finite() {
            break;
        }
        if residual <= DARE_TOL * p.amax().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations: DARE_MAX_ITER,
            residual,
        });
    }
    let s = r + b.transpose() * &p * b;
    let k = -s
        .lu()
        .solve(&(b.transpose() * &p * a))
        .ok_or_else(|| Error::singular("Riccati gain: R + BᵀPB", f64::INFINITY))?;
    let rho = spectral_radius(&(a + b * &k))?;
    if rho >= 1.0 {
        return Err(Error::domain(format!(
            "Riccati fixed point does not stabilize the system (spectral radius {rho})"
        )));
    }
    Ok(DareSolution { p, k })
}

/// Largest entrywise violation of `P = Q + KᵀRK + (A+BK)ᵀP(A+BK)`.
pub fn lyapunov_residual(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    k: &Matrix,
    p: &Matrix,
) -> Result<f64> {
    check_lq_shapes(a, b, q, r)?;
    let closed = a + b * k;
    let rhs = q + k.transpose() * r * k + closed.transpose() * p * &closed;
    Ok((rhs - p).amax())
}

/// Cost kernel of the linear policy `u = K s`: the solution of
/// `P = Q + KᵀRK + (A+BK)ᵀP(A+BK)`, found by a direct Kronecker solve.
pub fn solve_policy_lyapunov(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    k: &Matrix,
) -> Result<Matrix> {
    let (n, m) = check_lq_shapes(a, b, q, r)?;
    if k.shape() != (m, n) {
        return Err(Error::dim(format!(
            "gain must be {m}x{n}, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let closed = a + b * k;
    let rho = spectral_radius(&closed)?;
    if rho >= 1.0 {
        return Err(Error::domain(format!(
            "gain is not stabilizing (spectral radius {rho})"
        )));
    }
    let rhs = q + k.transpose() * r * k;
    let lt = closed.transpose();
    // vec(LᵀPL) = (Lᵀ ⊗ Lᵀ) vec(P) with column-major vec
    let system = Matrix::identity(n * n, n * n) - lt.kronecker(&lt);
    let vec_rhs = nalgebra::DVector::from_column_slice(rhs.as_slice());
    let lu = system.lu();
    let mut sol = lu
        .solve(&vec_rhs)
        .ok_or_else(|| Error::singular("Lyapunov operator", f64::INFINITY))?;
    // one step of iterative refinement
    let sys = Matrix::identity(n * n, n * n) - lt.kronecker(&lt);
    let resid = &vec_rhs - &sys * &sol;
    if let Some(corr) = lu.solve(&resid) {
        sol += corr;
    }
    Ok(symmetrize(&Matrix::from_column_slice(n, n, sol.as_slice())))
}
