use super::trajectory::{Environment, Step};
use crate::error::{Error, Result};
use crate::numerics::{psd_sqrt, spectral_radius, Matrix, RngStream, Vector};

/// Margin below one that the closed-loop spectral radius must clear for a
/// gain to count as stabilizing.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Linear system `s' = A s + B a + w`, `w ~ N(0, W)`, with running cost
/// `sᵀQs + aᵀRa`.
#[derive(Debug, Clone)]
pub struct LinearQuadraticEnv {
    a: Matrix,
    b: Matrix,
    w: Matrix,
    q: Matrix,
    r: Matrix,
    noise_factor: Matrix,
    /// Standard deviation of each initial-state coordinate.
    pub init_std: f64,
}

fn is_symmetric(m: &Matrix) -> bool {
    (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0)
}

impl LinearQuadraticEnv {
    pub fn new(a: Matrix, b: Matrix, w: Matrix, q: Matrix, r: Matrix) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        if a.ncols() != n || b.nrows() != n {
            return Err(Error::dim(format!(
                "A is {:?} and B is {:?}",
                a.shape(),
                b.shape()
            )));
        }
        if w.shape() != (n, n) || q.shape() != (n, n) || r.shape() != (m, m) {
            return Err(Error::dim(format!(
                "W and Q must be {n}x{n}, R must be {m}x{m}"
            )));
        }
        if !is_symmetric(&w) || !is_symmetric(&q) || !is_symmetric(&r) {
            return Err(Error::domain("W, Q and R must be symmetric"));
        }
        if q.clone().symmetric_eigenvalues().min() < -1e-12 {
            return Err(Error::domain(
                "state weight Q must be positive semidefinite",
            ));
        }
        if r.clone().cholesky().is_none() {
            return Err(Error::domain("input weight R must be positive definite"));
        }
        let noise_factor = psd_sqrt(&w)?;
        Ok(Self {
            a,
            b,
            w,
            q,
            r,
            noise_factor,
            init_std: 1.0,
        })
    }

    /// Scalar system `A = 0.9, B = 0.5, Q = R = 1, W = 0.01`.
    pub fn scalar_benchmark() -> Self {
        let s = |v| Matrix::from_element(1, 1, v);
        Self::new(s(0.9), s(0.5), s(0.01), s(1.0), s(1.0)).expect("valid benchmark")
    }

    /// Two-state, one-input system `A = 0.99·[[1, 0.1], [0, 1]]`,
    /// `B = [0, 0.1]ᵀ`, `Q = I`, `R = 1`, `W = 0.01·I`.
    pub fn two_state_benchmark() -> Self {
        Self::new(
            Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]) * 0.99,
            Matrix::from_row_slice(2, 1, &[0.0, 0.1]),
            Matrix::identity(2, 2) * 0.01,
            Matrix::identity(2, 2),
            Matrix::identity(1, 1),
        )
        .expect("valid benchmark")
    }

    /// Same system with different process noise.
    pub fn with_noise(&self, w: Matrix) -> Result<Self> {
        let mut env = Self::new(
            self.a.clone(),
            self.b.clone(),
            w,
            self.q.clone(),
            self.r.clone(),
        )?;
        env.init_std = self.init_std;
        Ok(env)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn noise_covariance(&self) -> &Matrix {
        &self.w
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// Running cost `sᵀQs + aᵀRa`.
    pub fn cost(&self, s: &Vector, a: &Vector) -> Result<f64> {
        self.check(s, a)?;
        Ok(s.dot(&(&self.q * s)) + a.dot(&(&self.r * a)))
    }

    fn check(&self, s: &Vector, a: &Vector) -> Result<()> {
        if s.len() != self.n() || a.len() != self.m() {
            return Err(Error::dim(format!(
                "state/action have length {}/{}, system is n = {}, m = {}",
                s.len(),
                a.len(),
                self.n(),
                self.m()
            )));
        }
        Ok(())
    }

    /// Advances the system one step; returns the next state and the cost of
    /// `(s, a)`.
    pub fn transition(&self, s: &Vector, a: &Vector, rng: &mut RngStream) -> Result<(Vector, f64)> {
        let cost = self.cost(s, a)?;
        let xi = Vector::from_vec(rng.normal_vec(self.n()));
        let next = &self.a * s + &self.b * a + &self.noise_factor * xi;
        Ok((next, cost))
    }

    pub fn closed_loop(&self, k: &Matrix) -> Result<Matrix> {
        if k.shape() != (self.m(), self.n()) {
            return Err(Error::dim(format!(
                "gain must be {}x{}, got {:?}",
                self.m(),
                self.n(),
                k.shape()
            )));
        }
        Ok(&self.a + &self.b * k)
    }

    /// True when `ρ(A + BK) < 1 − 1e-9`.
    pub fn is_stable(&self, k: &Matrix) -> Result<bool> {
        let rho = spectral_radius(&self.closed_loop(k)?)?;
        Ok(rho < 1.0 - STABILITY_MARGIN)
    }
}

impl Environment for LinearQuadraticEnv {
    type State = Vector;
    type Action = Vector;

    /// Initial state with i.i.d. `N(0, init_std²)` coordinates.
    fn reset(&self, rng: &mut RngStream) -> Vector {
        Vector::from_vec(rng.normal_vec(self.n())) * self.init_std
    }

    fn step(&self, state: &Vector, action: &Vector, rng: &mut RngStream) -> Result<Step<Vector>> {
        let (next, cost) = self.transition(state, action, rng)?;
        Ok(Step {
            next,
            reward: cost,
            done: false,
        })
    }
}
