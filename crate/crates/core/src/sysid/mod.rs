//! Model building: ARX predictors fitted by batch or recursive least squares,
//! linear state-space identification, and certainty-equivalence adaptive
//! control of a linear-quadratic system.

mod adaptive;
mod arx;

pub use adaptive::{adaptive_lq_control, identify_linear_ss, AdaptiveRun};
pub use arx::{
    arx_fit_batch, arx_predict, arx_regressor, prediction_error_gradient, rls_update, ArxModel,
    RlsState, RLS_DELTA,
};
