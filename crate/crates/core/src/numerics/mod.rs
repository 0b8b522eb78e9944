//! Dense small-matrix numerics shared by every learner: the symmetric
//! vectorization algebra behind quadratic Q-functions, regression solvers,
//! Riccati and Lyapunov oracles, Adam, seeded randomness and finite
//! differences.

mod adam;
mod fd;
mod linalg;
mod riccati;
mod rng;
mod symvec;

pub use adam::AdamState;
pub use fd::finite_difference_gradient;
pub use linalg::{
    condition_number, instrumental_variable_regression, least_squares, least_squares_multi,
    psd_sqrt, spectral_radius, symmetrize, MAX_CONDITION,
};
pub use riccati::{
    dare_residual, lyapunov_residual, solve_dare, solve_policy_lyapunov, DareSolution,
};
pub use rng::RngStream;
pub use symvec::{mat_from_vecs, sym_dim, vecs, vecv, SymVec, SYMMETRY_TOL};

/// Dense real matrix, row/column indexed. Shapes are checked at the API
/// boundary of each operation.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;
