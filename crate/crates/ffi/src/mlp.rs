use std::ffi::{c_char, CStr};

use lqrl::mlp::{Activation, LossKind, Mlp};
use lqrl::Error;

use crate::{guard, handle, handle_mut, input, matrix_in, output, store, FfiError, LqrlStatus};

/// Fully connected network with its optimizer state.
pub struct LqrlMlp(pub(crate) Mlp);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LqrlActivation {
    Relu = 0,
    Softmax = 1,
    Linear = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LqrlLoss {
    WeightedCrossEntropy = 0,
    MeanSquaredError = 1,
}

impl From<LqrlActivation> for Activation {
    fn from(a: LqrlActivation) -> Self {
        match a {
            LqrlActivation::Relu => Activation::Relu,
            LqrlActivation::Softmax => Activation::Softmax,
            LqrlActivation::Linear => Activation::Linear,
        }
    }
}

impl From<LqrlLoss> for LossKind {
    fn from(l: LqrlLoss) -> Self {
        match l {
            LqrlLoss::WeightedCrossEntropy => LossKind::WeightedCrossEntropy,
            LqrlLoss::MeanSquaredError => LossKind::MeanSquaredError,
        }
    }
}

/// Builds a network from `n_sizes` layer widths (input first) and
/// `n_sizes - 1` activations, with seeded He-normal weights.
///
/// # Safety
/// `sizes` and `activations` must hold the stated counts and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lqrl_mlp_new(
    sizes: *const usize,
    n_sizes: usize,
    activations: *const LqrlActivation,
    loss: LqrlLoss,
    seed: u64,
    out: *mut *mut LqrlMlp,
) -> LqrlStatus {
    guard(|| {
        if sizes.is_null() {
            return Err(FfiError::Null("sizes"));
        }
        let sizes = std::slice::from_raw_parts(sizes, n_sizes);
        let n_act = n_sizes.saturating_sub(1);
        let acts: Vec<Activation> = if n_act == 0 {
            Vec::new()
        } else if activations.is_null() {
            return Err(FfiError::Null("activations"));
        } else {
            std::slice::from_raw_parts(activations, n_act)
                .iter()
                .map(|&a| a.into())
                .collect()
        };
        store(out, LqrlMlp(Mlp::new(sizes, &acts, loss.into(), seed)?))
    })
}

/// Restores a network from checkpoint text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lqrl_mlp_from_checkpoint(
    text: *const c_char,
    out: *mut *mut LqrlMlp,
) -> LqrlStatus {
    guard(|| {
        if text.is_null() {
            return Err(FfiError::Null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Error::Config(format!("checkpoint is not UTF-8: {e}")))?;
        store(out, LqrlMlp(Mlp::from_checkpoint(text)?))
    })
}

/// # Safety
/// `mlp` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lqrl_mlp_input_width(mlp: *const LqrlMlp) -> usize {
    mlp.as_ref().map_or(0, |m| m.0.input_width())
}

/// # Safety
/// `mlp` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lqrl_mlp_output_width(mlp: *const LqrlMlp) -> usize {
    mlp.as_ref().map_or(0, |m| m.0.output_width())
}

/// Evaluates the network on one input.
///
/// # Safety
/// `input_data` must hold `input_len` doubles and `output_data` must have room
/// for `output_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lqrl_mlp_forward(
    mlp: *const LqrlMlp,
    input_data: *const f64,
    input_len: usize,
    output_data: *mut f64,
    output_len: usize,
) -> LqrlStatus {
    guard(|| {
        let net = &handle(mlp, "mlp")?.0;
        if output_len != net.output_width() {
            return Err(Error::Dimension(format!(
                "network has {} outputs, buffer has {output_len}",
                net.output_width()
            ))
            .into());
        }
        let y = net.forward_one(input(input_data, input_len, "input")?)?;
        output(output_data, output_len, "output")?.copy_from_slice(&y);
        Ok(())
    })
}

/// One optimizer step on a batch of `batch` rows. `weights` may be NULL for
/// unit sample weights. Writes the loss before the update to `loss` if it is
/// not NULL.
///
/// # Safety
/// `inputs` must hold batch·input_width doubles, `targets` batch·output_width,
/// and `weights` (if not NULL) `batch`.
#[no_mangle]
pub unsafe extern "C" fn lqrl_mlp_train_on_batch(
    mlp: *mut LqrlMlp,
    inputs: *const f64,
    targets: *const f64,
    weights: *const f64,
    batch: usize,
    loss: *mut f64,
) -> LqrlStatus {
    guard(|| {
        let net = &mut handle_mut(mlp, "mlp")?.0;
        let x = matrix_in(inputs, batch, net.input_width(), "inputs")?;
        let y = matrix_in(targets, batch, net.output_width(), "targets")?;
        let w = if weights.is_null() {
            None
        } else {
            Some(input(weights, batch, "weights")?)
        };
        let value = net.train_on_batch(&x, &y, w)?;
        if let Some(l) = loss.as_mut() {
            *l = value;
        }
        Ok(())
    })
}

/// Writes the checkpoint text, NUL-terminated, into `buffer` of `capacity`
/// bytes. `needed` receives the required size including the NUL; a buffer
/// that is too small (or NULL) yields a domain error and writes nothing.
///
/// # Safety
/// `buffer` must have room for `capacity` bytes; `needed` must be NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lqrl_mlp_checkpoint(
    mlp: *const LqrlMlp,
    buffer: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> LqrlStatus {
    guard(|| {
        let text = handle(mlp, "mlp")?.0.to_checkpoint();
        let size = text.len() + 1;
        if let Some(n) = needed.as_mut() {
            *n = size;
        }
        if buffer.is_null() || capacity < size {
            return Err(Error::Domain(format!(
                "checkpoint needs {size} bytes, buffer has {capacity}"
            ))
            .into());
        }
        std::ptr::copy_nonoverlapping(text.as_ptr(), buffer.cast::<u8>(), text.len());
        *buffer.add(text.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `mlp` must come from this library and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn lqrl_mlp_free(mlp: *mut LqrlMlp) {
    if !mlp.is_null() {
        drop(Box::from_raw(mlp));
    }
}
