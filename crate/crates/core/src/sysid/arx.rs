use crate::error::{Error, Result};
use crate::numerics::{least_squares, Matrix, Vector};

/// Default regularization of the initial information matrix `D₀ = δ I`.
pub const RLS_DELTA: f64 = 1e-6;

/// `y(t) + a1 y(t−1) + … + an y(t−n) = b1 u(t−1) + … + bm u(t−m) + e(t)`,
/// with `θ = [a1 … an, b1 … bm]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArxModel {
    pub n: usize,
    pub m: usize,
    pub theta: Vector,
}

impl ArxModel {
    pub fn new(n: usize, m: usize, theta: Vector) -> Result<Self> {
        if theta.len() != n + m {
            return Err(Error::dim(format!(
                "ARX({n}, {m}) needs {} parameters, got {}",
                n + m,
                theta.len()
            )));
        }
        Ok(Self { n, m, theta })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            theta: Vector::zeros(n + m),
        }
    }

    pub fn a(&self) -> &[f64] {
        &self.theta.as_slice()[..self.n]
    }

    pub fn b(&self) -> &[f64] {
        &self.theta.as_slice()[self.n..]
    }
}

/// `φ(t) = [−y(t−1), …, −y(t−n), u(t−1), …, u(t−m)]` with zero-based `t`.
pub fn arx_regressor(y: &[f64], u: &[f64], t: usize, n: usize, m: usize) -> Result<Vector> {
    if t < n.max(m) || t > y.len() || t > u.len() {
        return Err(Error::domain(format!(
            "ARX({n}, {m}) regressor at t = {t} needs lags back to t − {} within {} outputs and {} inputs",
            n.max(m),
            y.len(),
            u.len()
        )));
    }
    let lagged_y = (1..=n).map(|k| -y[t - k]);
    let lagged_u = (1..=m).map(|k| u[t - k]);
    Ok(Vector::from_iterator(n + m, lagged_y.chain(lagged_u)))
}

/// `ŷ(t | θ) = φᵀ(t) θ`.
pub fn arx_predict(model: &ArxModel, phi: &Vector) -> Result<f64> {
    if phi.len() != model.theta.len() {
        return Err(Error::dim(format!(
            "regressor has length {}, model has {} parameters",
            phi.len(),
            model.theta.len()
        )));
    }
    Ok(phi.dot(&model.theta))
}

/// `dŷ/dθ`, which for an ARX predictor is the regressor itself.
pub fn prediction_error_gradient(model: &ArxModel, phi: &Vector) -> Result<Vector> {
    if phi.len() != model.theta.len() {
        return Err(Error::dim(format!(
            "regressor has length {}, model has {} parameters",
            phi.len(),
            model.theta.len()
        )));
    }
    Ok(phi.clone())
}

/// Least-squares ARX fit over every `t` with a full regressor.
pub fn arx_fit_batch(y: &[f64], u: &[f64], n: usize, m: usize) -> Result<ArxModel> {
    if y.len() != u.len() {
        return Err(Error::dim(format!(
            "{} outputs but {} inputs",
            y.len(),
            u.len()
        )));
    }
    let p = n + m;
    let start = n.max(m);
    if p == 0 || y.len() < start + p {
        return Err(Error::domain(format!(
            "ARX({n}, {m}) fit needs at least {} samples, got {}",
            start + p,
            y.len()
        )));
    }
    let rows = y.len() - start;
    let mut x = Matrix::zeros(rows, p);
    let mut target = Vector::zeros(rows);
    for (i, t) in (start..y.len()).enumerate() {
        x.row_mut(i)
            .copy_from(&arx_regressor(y, u, t, n, m)?.transpose());
        target[i] = y[t];
    }
    ArxModel::new(n, m, least_squares(&x, &target)?)
}

/// Recursive least squares in information form.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    pub theta: Vector,
    pub d: Matrix,
}

impl RlsState {
    /// `θ̂₀ = 0`, `D₀ = δ I`.
    pub fn new(p: usize, delta: f64) -> Result<Self> {
        if p == 0 || !(delta > 0.0) {
            return Err(Error::domain("RLS needs at least one parameter and δ > 0"));
        }
        Ok(Self {
            theta: Vector::zeros(p),
            d: Matrix::identity(p, p) * delta,
        })
    }

    /// `D ← D + φφᵀ`, then `θ̂ ← θ̂ + D⁻¹ (y − φᵀθ̂) φ`.
    pub fn update(&mut self, y: f64, phi: &Vector) -> Result<()> {
        if phi.len() != self.theta.len() {
            return Err(Error::dim(format!(
                "regressor has length {}, estimate has {}",
                phi.len(),
                self.theta.len()
            )));
        }
        self.d += phi * phi.transpose();
        let innovation = y - phi.dot(&self.theta);
        if innovation == 0.0 {
            return Ok(());
        }
        let step = self
            .d
            .clone()
            .cholesky()
            .ok_or_else(|| Error::singular("RLS information matrix", f64::INFINITY))?
            .solve(phi);
        self.theta += step * innovation;
        Ok(())
    }
}

/// Functional form of [`RlsState::update`].
pub fn rls_update(state: &RlsState, y: f64, phi: &Vector) -> Result<RlsState> {
    let mut next = state.clone();
    next.update(y, phi)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use proptest::prelude::*;

    fn simulate(theta_a: &[f64], theta_b: &[f64], u: &[f64], noise: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; u.len()];
        for t in 0..u.len() {
            let mut v = noise[t];
            for (k, a) in theta_a.iter().enumerate() {
                if t > k {
                    v -= a * y[t - k - 1];
                }
            }
            for (k, b) in theta_b.iter().enumerate() {
                if t > k {
                    v += b * u[t - k - 1];
                }
            }
            y[t] = v;
        }
        y
    }

    #[test]
    fn regressor_layout() {
        let y = [1.0, 2.0, 3.0];
        let u = [10.0, 20.0, 30.0];
        let phi = arx_regressor(&y, &u, 2, 1, 1).unwrap();
        assert_eq!(phi.as_slice(), &[-2.0, 20.0]);
        let phi = arx_regressor(&y, &u, 3, 2, 2).unwrap();
        assert_eq!(phi.as_slice(), &[-3.0, -2.0, 30.0, 20.0]);
        let phi = arx_regressor(&[0.0; 4], &[0.0; 4], 3, 2, 1).unwrap();
        assert_eq!(phi, Vector::zeros(3));
        assert!(matches!(
            arx_regressor(&y, &u, 1, 2, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn three_step_hand_example() {
        // y = [y0, y1, y2, y3], u = [u0, u1, u2, u3], ARX(2, 1)
        let y = [0.5, -1.0, 2.0, 4.0];
        let u = [3.0, 0.0, -2.0, 1.0];
        let rows: Vec<Vec<f64>> = (2..=4)
            .map(|t| arx_regressor(&y, &u, t, 2, 1).unwrap().as_slice().to_vec())
            .collect();
        assert_eq!(rows[0], vec![1.0, -0.5, 0.0]);
        assert_eq!(rows[1], vec![-2.0, 1.0, -2.0]);
        assert_eq!(rows[2], vec![-4.0, -2.0, 1.0]);
    }

    #[test]
    fn prediction_by_hand() {
        let model = ArxModel::new(1, 1, Vector::from_column_slice(&[-0.5, 1.0])).unwrap();
        assert_eq!(
            arx_predict(&model, &Vector::from_column_slice(&[-2.0, 3.0])).unwrap(),
            4.0
        );
        assert_eq!(
            arx_predict(
                &ArxModel::zeros(1, 1),
                &Vector::from_column_slice(&[5.0, 1.0])
            )
            .unwrap(),
            0.0
        );
        assert!(arx_predict(&model, &Vector::zeros(3)).is_err());
    }

    #[test]
    fn gradient_is_regressor() {
        let mut rng = RngStream::new(4);
        let model = ArxModel::new(2, 1, Vector::from_vec(rng.normal_vec(3))).unwrap();
        let phi = Vector::from_vec(rng.normal_vec(3));
        let g = prediction_error_gradient(&model, &phi).unwrap();
        assert_eq!(g, phi);
        assert_eq!(
            prediction_error_gradient(&model, &Vector::zeros(3)).unwrap(),
            Vector::zeros(3)
        );
        let numeric = crate::numerics::finite_difference_gradient(
            |th| {
                arx_predict(
                    &ArxModel::new(2, 1, Vector::from_column_slice(th)).unwrap(),
                    &phi,
                )
                .unwrap()
            },
            model.theta.as_slice(),
            1e-5,
        );
        for (a, b) in g.iter().zip(&numeric) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn noiseless_fit_recovers_parameters() {
        let mut rng = RngStream::new(1);
        let u = rng.normal_vec(200);
        let y = simulate(&[-0.5], &[1.0], &u, &[0.0; 200]);
        let model = arx_fit_batch(&y, &u, 1, 1).unwrap();
        assert!((model.theta[0] + 0.5).abs() < 1e-10);
        assert!((model.theta[1] - 1.0).abs() < 1e-10);
        for t in 1..y.len() {
            let phi = arx_regressor(&y, &u, t, 1, 1).unwrap();
            assert!((arx_predict(&model, &phi).unwrap() - y[t]).abs() < 1e-10);
        }
    }

    #[test]
    fn white_noise_estimate_shrinks() {
        let mut rng = RngStream::new(2);
        for len in [200usize, 2000, 20000] {
            let u = rng.normal_vec(len);
            let y = rng.normal_vec(len);
            let model = arx_fit_batch(&y, &u, 1, 1).unwrap();
            // LS std of each coefficient is about 1/√N
            let bound = 3.0 * 1.5 / (len as f64).sqrt();
            assert!(model.theta.amax() < bound, "N={len}: {}", model.theta);
        }
    }

    #[test]
    fn square_design_interpolates() {
        let y = [0.0, 1.0, 3.0, -1.0];
        let u = [1.0, 2.0, 0.5, 0.0];
        // ARX(1, 1) with 3 rows would be overdetermined; ARX(2, 1) uses rows t = 2, 3 only
        let y3 = [0.3, 1.0, 2.0];
        let u3 = [1.0, -1.0, 0.0];
        let model = arx_fit_batch(&y3, &u3, 1, 1).unwrap();
        for t in 1..3 {
            let phi = arx_regressor(&y3, &u3, t, 1, 1).unwrap();
            assert!((arx_predict(&model, &phi).unwrap() - y3[t]).abs() < 1e-12);
        }
        assert!(arx_fit_batch(&y, &u, 2, 2).is_err());
    }

    #[test]
    fn constant_input_is_rank_deficient() {
        let u = vec![1.0; 50];
        let y = vec![2.0; 50];
        assert!(matches!(
            arx_fit_batch(&y, &u, 1, 1),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn zero_innovation_keeps_estimate() {
        let mut s = RlsState::new(2, RLS_DELTA).unwrap();
        s.theta = Vector::from_column_slice(&[0.5, -1.0]);
        let phi = Vector::from_column_slice(&[2.0, 1.0]);
        let next = rls_update(&s, 0.0, &phi).unwrap();
        assert_eq!(next.theta, s.theta);
        assert_eq!(next.d, &s.d + &phi * phi.transpose());
    }

    #[test]
    fn scalar_stream_rises_to_two() {
        let mut s = RlsState::new(1, RLS_DELTA).unwrap();
        let phi = Vector::from_element(1, 1.0);
        let mut prev = 0.0;
        for _ in 0..50 {
            s.update(2.0, &phi).unwrap();
            let now = s.theta[0];
            assert!(now >= prev && now <= 2.0);
            prev = now;
        }
        // θ_N = 2N / (δ + N)
        assert!((prev - 100.0 / (50.0 + RLS_DELTA)).abs() < 1e-12);
    }

    fn regularized_ls(phis: &[Vector], ys: &[f64], delta: f64) -> Vector {
        let p = phis[0].len();
        let mut d = Matrix::identity(p, p) * delta;
        let mut f = Vector::zeros(p);
        for (phi, y) in phis.iter().zip(ys) {
            d += phi * phi.transpose();
            f += phi * *y;
        }
        d.lu().solve(&f).unwrap()
    }

    proptest! {
        #[test]
        fn rls_matches_regularized_batch(seed in any::<u64>(), p in 1usize..5, len in 1usize..120) {
            let mut rng = RngStream::new(seed);
            let phis: Vec<Vector> = (0..len).map(|_| Vector::from_vec(rng.normal_vec(p))).collect();
            let ys = rng.normal_vec(len);
            let mut s = RlsState::new(p, RLS_DELTA).unwrap();
            for (phi, y) in phis.iter().zip(&ys) {
                s.update(*y, phi).unwrap();
            }
            let batch = regularized_ls(&phis, &ys, RLS_DELTA);
            let scale = batch.amax().max(1.0);
            prop_assert!((&s.theta - &batch).amax() <= 1e-8 * scale);
        }
    }
}
