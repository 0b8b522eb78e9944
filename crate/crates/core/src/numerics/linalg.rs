use super::{Matrix, Vector};
use crate::error::{Error, Result};

/// Condition-number ceiling above which a normal matrix is treated as
/// singular.
pub const MAX_CONDITION: f64 = 1e12;

/// 2-norm condition number `σ_max / σ_min` of a square or tall matrix.
/// Returns infinity for a rank-deficient input.
pub fn condition_number(m: &Matrix) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

fn check_design(x: &Matrix, rows: usize, what: &str) -> Result<()> {
    if x.nrows() != rows {
        return Err(Error::dim(format!(
            "{what}: design has {} rows but {rows} targets",
            x.nrows()
        )));
    }
    if x.nrows() < x.ncols() || x.ncols() == 0 {
        return Err(Error::dim(format!(
            "{what}: need at least as many samples as parameters, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

/// Ordinary least squares `argmin ‖Xθ − y‖²`, solved with a QR factorization
/// of `X` rather than by inverting `XᵀX`.
pub fn least_squares(x: &Matrix, y: &Vector) -> Result<Vector> {
    let y = Matrix::from_column_slice(y.len(), 1, y.as_slice());
    let theta = least_squares_multi(x, &y)?;
    Ok(theta.column(0).into_owned())
}

/// Least squares with several right-hand sides: one column of the result per
/// column of `y`.
pub fn least_squares_multi(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    check_design(x, y.nrows(), "least squares")?;
    // cond(XᵀX) = cond(X)²
    let cond = condition_number(x).powi(2);
    if cond > MAX_CONDITION {
        return Err(Error::singular("least squares: XᵀX", cond));
    }
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * y;
    qr.r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::singular("least squares: triangular factor", cond))
}

/// Instrumental-variable estimate `θ = (ZᵀX)⁻¹ Zᵀy`.
///
/// With `Z == X` this is ordinary least squares, and the result is exactly
/// that of [`least_squares`].
pub fn instrumental_variable_regression(x: &Matrix, y: &Vector, z: &Matrix) -> Result<Vector> {
    check_design(x, y.len(), "instrumental variables")?;
    if z.shape() != x.shape() {
        return Err(Error::dim(format!(
            "instruments are {}x{}, regressors {}x{}",
            z.nrows(),
            z.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    if z == x {
        return least_squares(x, y);
    }
    let zx = z.transpose() * x;
    let zy = z.transpose() * y;
    let cond = condition_number(&zx);
    if cond > MAX_CONDITION {
        return Err(Error::singular("instrumental variables: ZᵀX", cond));
    }
    zx.lu()
        .solve(&zy)
        .ok_or_else(|| Error::singular("instrumental variables: ZᵀX", cond))
}

/// Largest eigenvalue magnitude.
///
/// Closed form from the characteristic polynomial for `n ≤ 2`; otherwise the
/// eigenvalues of the real Schur form.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::dim(format!(
            "spectral radius of a non-square {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    Ok(match n {
        0 => 0.0,
        1 => m[(0, 0)].abs(),
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = tr * tr - 4.0 * det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                ((tr + s) * 0.5).abs().max(((tr - s) * 0.5).abs())
            } else {
                det.sqrt()
            }
        }
        _ => m
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max),
    })
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Symmetric square root `S` with `S Sᵀ = M` for a positive semidefinite `M`.
/// Negative eigenvalues down to `-1e-12·‖M‖` are clipped to zero.
pub fn psd_sqrt(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::dim("psd_sqrt needs a square matrix"));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
        return Err(Error::domain("matrix is not positive semidefinite"));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * Matrix::from_diagonal(&roots) * v.transpose())
}
