use super::Matrix;
use crate::error::{Error, Result};

/// Bias-corrected Adam moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first_moment: Matrix,
    second_moment: Matrix,
    steps: u64,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Adam with the linear-policy defaults: step 0.1, β₁ 0.9, β₂ 0.999, ε 1e-8.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self::with_hyperparameters(rows, cols, 0.1, 0.9, 0.999, 1e-8)
            .expect("default Adam hyperparameters are valid")
    }

    pub fn with_hyperparameters(
        rows: usize,
        cols: usize,
        step_size: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0) {
            return Err(Error::domain(format!(
                "Adam decay rates must lie in (0, 1), got {beta1} and {beta2}"
            )));
        }
        if !(step_size > 0.0) || !(epsilon > 0.0) {
            return Err(Error::domain("Adam step size and epsilon must be positive"));
        }
        Ok(Self {
            first_moment: Matrix::zeros(rows, cols),
            second_moment: Matrix::zeros(rows, cols),
            steps: 0,
            step_size,
            beta1,
            beta2,
            epsilon,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn shape(&self) -> (usize, usize) {
        self.first_moment.shape()
    }

    /// Advances the moments with `gradient` and returns the increment
    /// `α·m̂/(√v̂ + ε)`. The increment points along the gradient; add it to
    /// ascend, subtract it to descend.
    pub fn step(&mut self, gradient: &Matrix) -> Result<Matrix> {
        if gradient.shape() != self.first_moment.shape() {
            return Err(Error::dim(format!(
                "Adam state is {:?}, gradient is {:?}",
                self.first_moment.shape(),
                gradient.shape()
            )));
        }
        self.steps += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        self.first_moment
            .zip_apply(gradient, |m, g| *m = b1 * *m + (1.0 - b1) * g);
        self.second_moment
            .zip_apply(gradient, |v, g| *v = b2 * *v + (1.0 - b2) * g * g);
        let t = self.steps as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let (alpha, eps) = (self.step_size, self.epsilon);
        Ok(self.first_moment.zip_map(&self.second_moment, |m, v| {
            alpha * (m / c1) / ((v / c2).sqrt() + eps)
        }))
    }
}
