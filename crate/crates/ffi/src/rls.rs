use lqrl::sysid::RlsState;
use lqrl::Vector;

use crate::{guard, handle, handle_mut, input, output, store, LqrlStatus};

/// Recursive least squares estimate.
pub struct LqrlRls(pub(crate) RlsState);

/// Starts an estimate of `p` parameters at zero with information `δ I`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lqrl_rls_new(p: usize, delta: f64, out: *mut *mut LqrlRls) -> LqrlStatus {
    guard(|| store(out, LqrlRls(RlsState::new(p, delta)?)))
}

/// Folds in one observation `y` with regressor `phi` of length `len`.
///
/// # Safety
/// `rls` must be a live handle and `phi` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lqrl_rls_update(
    rls: *mut LqrlRls,
    y: f64,
    phi: *const f64,
    len: usize,
) -> LqrlStatus {
    guard(|| {
        let rls = handle_mut(rls, "rls")?;
        let phi = Vector::from_column_slice(input(phi, len, "phi")?);
        Ok(rls.0.update(y, &phi)?)
    })
}

/// Number of parameters, or 0 for NULL.
///
/// # Safety
/// `rls` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lqrl_rls_len(rls: *const LqrlRls) -> usize {
    rls.as_ref().map_or(0, |r| r.0.theta.len())
}

/// Copies the current estimate into `theta` (length `len`).
///
/// # Safety
/// `rls` must be a live handle and `theta` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lqrl_rls_theta(
    rls: *const LqrlRls,
    theta: *mut f64,
    len: usize,
) -> LqrlStatus {
    guard(|| {
        let rls = handle(rls, "rls")?;
        if len != rls.0.theta.len() {
            return Err(lqrl::Error::Dimension(format!(
                "estimate has {} parameters, buffer has {len}",
                rls.0.theta.len()
            ))
            .into());
        }
        output(theta, len, "theta")?.copy_from_slice(rls.0.theta.as_slice());
        Ok(())
    })
}

/// # Safety
/// `rls` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn lqrl_rls_free(rls: *mut LqrlRls) {
    if !rls.is_null() {
        drop(Box::from_raw(rls));
    }
}
