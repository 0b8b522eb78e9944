use lqrl::harness::check_solved;
use lqrl::numerics::{sym_dim, vecs, vecv};

use crate::{guard, input, matrix_in, output, FfiError, LqrlStatus};

/// Length `n (n + 1) / 2` of the symmetric vectorizations.
#[no_mangle]
pub extern "C" fn lqrl_sym_dim(n: usize) -> usize {
    sym_dim(n)
}

/// Upper-triangular vectorization of the symmetric n×n matrix `g`; off-diagonal
/// entries appear once. `out` receives `lqrl_sym_dim(n)` doubles.
///
/// # Safety
/// `g` must hold n·n doubles and `out` must have room for the result.
#[no_mangle]
pub unsafe extern "C" fn lqrl_vecs(g: *const f64, n: usize, out: *mut f64) -> LqrlStatus {
    guard(|| {
        let v = vecs(&matrix_in(g, n, n, "g")?)?;
        output(out, sym_dim(n), "out")?.copy_from_slice(v.as_slice());
        Ok(())
    })
}

/// Quadratic monomials of `z` so that `vecs(G)·vecv(z) = zᵀGz`. `out`
/// receives `lqrl_sym_dim(n)` doubles.
///
/// # Safety
/// `z` must hold `n` doubles and `out` must have room for the result.
#[no_mangle]
pub unsafe extern "C" fn lqrl_vecv(z: *const f64, n: usize, out: *mut f64) -> LqrlStatus {
    guard(|| {
        let v = vecv(input(z, n, "z")?)?;
        output(out, sym_dim(n), "out")?.copy_from_slice(v.as_slice());
        Ok(())
    })
}

/// Cartpole solvability: some 100 consecutive returns average at least 195.
/// `solved_at` receives the index of the last episode of the first such
/// window, or -1.
///
/// # Safety
/// `returns` must hold `len` doubles; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn lqrl_check_solved(
    returns: *const f64,
    len: usize,
    solved: *mut bool,
    solved_at: *mut isize,
) -> LqrlStatus {
    guard(|| {
        let (ok, at) = check_solved(input(returns, len, "returns")?);
        *solved.as_mut().ok_or(FfiError::Null("solved"))? = ok;
        *solved_at.as_mut().ok_or(FfiError::Null("solved_at"))? = at.map_or(-1, |i| i as isize);
        Ok(())
    })
}
