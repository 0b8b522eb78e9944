use lqrl::envs::LinearQuadraticEnv;
use lqrl::numerics::{solve_dare, RngStream};
use lqrl::pg::{pg_train_lq, PgLqConfig};
use lqrl::qlearn::{q_learning_lq, LqQlConfig};

use crate::{guard, handle, matrix_in, matrix_out, store, FfiError, LqrlStatus};

/// Linear-quadratic system `s' = A s + B a + w`, `w ~ N(0, W)`, cost
/// `sᵀQs + aᵀRa`.
pub struct LqrlLqEnv(pub(crate) LinearQuadraticEnv);

/// Settings for LSTD policy iteration.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LqrlQlConfig {
    pub iterations: usize,
    pub horizon: usize,
    pub explore_mag: f64,
}

/// Settings for linear-Gaussian policy gradient with Adam.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LqrlPgConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub horizon: usize,
    pub explore_mag: f64,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub safeguard: f64,
}

impl From<LqrlQlConfig> for LqQlConfig {
    fn from(c: LqrlQlConfig) -> Self {
        LqQlConfig {
            iterations: c.iterations,
            horizon: c.horizon,
            explore_mag: c.explore_mag,
        }
    }
}

impl From<LqrlPgConfig> for PgLqConfig {
    fn from(c: LqrlPgConfig) -> Self {
        PgLqConfig {
            iterations: c.iterations,
            batch_size: c.batch_size,
            horizon: c.horizon,
            explore_mag: c.explore_mag,
            step_size: c.step_size,
            beta1: c.beta1,
            beta2: c.beta2,
            epsilon: c.epsilon,
            safeguard: c.safeguard,
        }
    }
}

#[no_mangle]
pub extern "C" fn lqrl_ql_config_default() -> LqrlQlConfig {
    let c = LqQlConfig::default();
    LqrlQlConfig {
        iterations: c.iterations,
        horizon: c.horizon,
        explore_mag: c.explore_mag,
    }
}

#[no_mangle]
pub extern "C" fn lqrl_pg_config_default() -> LqrlPgConfig {
    let c = PgLqConfig::default();
    LqrlPgConfig {
        iterations: c.iterations,
        batch_size: c.batch_size,
        horizon: c.horizon,
        explore_mag: c.explore_mag,
        step_size: c.step_size,
        beta1: c.beta1,
        beta2: c.beta2,
        epsilon: c.epsilon,
        safeguard: c.safeguard,
    }
}

/// Creates a system with `n` states and `m` inputs. `a`, `w`, `q` are n×n,
/// `b` is n×m and `r` is m×m.
///
/// # Safety
/// Each matrix pointer must reference the stated number of doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn lqrl_lq_env_new(
    n: usize,
    m: usize,
    a: *const f64,
    b: *const f64,
    w: *const f64,
    q: *const f64,
    r: *const f64,
    out: *mut *mut LqrlLqEnv,
) -> LqrlStatus {
    guard(|| {
        let env = LinearQuadraticEnv::new(
            matrix_in(a, n, n, "a")?,
            matrix_in(b, n, m, "b")?,
            matrix_in(w, n, n, "w")?,
            matrix_in(q, n, n, "q")?,
            matrix_in(r, m, m, "r")?,
        )?;
        store(out, LqrlLqEnv(env))
    })
}

/// Scalar benchmark `A = 0.9, B = 0.5, Q = R = 1, W = 0.01`.
#[no_mangle]
pub extern "C" fn lqrl_lq_env_scalar_benchmark() -> *mut LqrlLqEnv {
    Box::into_raw(Box::new(LqrlLqEnv(LinearQuadraticEnv::scalar_benchmark())))
}

/// Two-state benchmark `A = 0.99·[[1, 0.1], [0, 1]], B = [0, 0.1]ᵀ`.
#[no_mangle]
pub extern "C" fn lqrl_lq_env_two_state_benchmark() -> *mut LqrlLqEnv {
    Box::into_raw(Box::new(LqrlLqEnv(
        LinearQuadraticEnv::two_state_benchmark(),
    )))
}

/// # Safety
/// `env` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn lqrl_lq_env_free(env: *mut LqrlLqEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// State dimension, or 0 for NULL.
///
/// # Safety
/// `env` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lqrl_lq_env_n(env: *const LqrlLqEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.n())
}

/// Input dimension, or 0 for NULL.
///
/// # Safety
/// `env` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lqrl_lq_env_m(env: *const LqrlLqEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.m())
}

/// Writes whether `u = K s` stabilizes the system; `k` is m×n.
///
/// # Safety
/// `env` must be a live handle, `k` must hold m·n doubles and `stable` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lqrl_lq_env_is_stable(
    env: *const LqrlLqEnv,
    k: *const f64,
    stable: *mut bool,
) -> LqrlStatus {
    guard(|| {
        let env = &handle(env, "env")?.0;
        let k = matrix_in(k, env.m(), env.n(), "k")?;
        let result = env.is_stable(&k)?;
        *stable.as_mut().ok_or(FfiError::Null("stable"))? = result;
        Ok(())
    })
}

/// Stabilizing DARE solution: writes the n×n kernel to `p_out` and the m×n
/// gain to `k_out`. Either output may be NULL.
///
/// # Safety
/// Inputs must hold the stated number of doubles; non-NULL outputs must have
/// room for them.
#[no_mangle]
pub unsafe extern "C" fn lqrl_solve_dare(
    n: usize,
    m: usize,
    a: *const f64,
    b: *const f64,
    q: *const f64,
    r: *const f64,
    p_out: *mut f64,
    k_out: *mut f64,
) -> LqrlStatus {
    guard(|| {
        let sol = solve_dare(
            &matrix_in(a, n, n, "a")?,
            &matrix_in(b, n, m, "b")?,
            &matrix_in(q, n, n, "q")?,
            &matrix_in(r, m, m, "r")?,
        )?;
        if !p_out.is_null() {
            matrix_out(&sol.p, p_out, "p_out")?;
        }
        if !k_out.is_null() {
            matrix_out(&sol.k, k_out, "k_out")?;
        }
        Ok(())
    })
}

/// LSTD policy iteration from the m×n gain `k0`. A NULL `config` uses the
/// defaults. Writes the final kernel (n×n) and gain (m×n); both are zero if
/// an iterate stopped stabilizing the system.
///
/// # Safety
/// `env` must be a live handle, `k0` must hold m·n doubles and the outputs
/// must have room for n·n and m·n doubles.
#[no_mangle]
pub unsafe extern "C" fn lqrl_q_learning_lq(
    env: *const LqrlLqEnv,
    k0: *const f64,
    config: *const LqrlQlConfig,
    seed: u64,
    p_out: *mut f64,
    k_out: *mut f64,
) -> LqrlStatus {
    guard(|| {
        let env = &handle(env, "env")?.0;
        let k0 = matrix_in(k0, env.m(), env.n(), "k0")?;
        let config: LqQlConfig = config
            .as_ref()
            .map_or_else(LqQlConfig::default, |c| (*c).into());
        let (p, k) = q_learning_lq(env, &k0, &config, &mut RngStream::new(seed))?;
        matrix_out(&p, p_out, "p_out")?;
        matrix_out(&k, k_out, "k_out")
    })
}

/// Policy gradient from the m×n gain `k0`. A NULL `config` uses the
/// defaults. Writes the final m×n gain.
///
/// # Safety
/// `env` must be a live handle, `k0` must hold m·n doubles and `k_out` must
/// have room for m·n doubles.
#[no_mangle]
pub unsafe extern "C" fn lqrl_pg_train_lq(
    env: *const LqrlLqEnv,
    k0: *const f64,
    config: *const LqrlPgConfig,
    seed: u64,
    k_out: *mut f64,
) -> LqrlStatus {
    guard(|| {
        let env = &handle(env, "env")?.0;
        let k0 = matrix_in(k0, env.m(), env.n(), "k0")?;
        let config: PgLqConfig = config
            .as_ref()
            .map_or_else(PgLqConfig::default, |c| (*c).into());
        let k = pg_train_lq(env, &k0, &config, &mut RngStream::new(seed))?;
        matrix_out(&k, k_out, "k_out")
    })
}
