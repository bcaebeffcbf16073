//! Logit transform for residuals bounded in `[-1, 1]`.

use serde::{Deserialize, Serialize};

use super::{Correction, Corrector, CorrectorSpec, TrainingDiagnostics};
use crate::dataset::LabeledDataset;
use crate::error::{BapcError, Result};
use crate::exec::Execution;

/// Clamp bound applied before [`lgt`] so that residuals of exactly +-1 stay finite.
pub const DEFAULT_CLAMP: f64 = 1.0 - 1e-6;

/// `ln((1 + x) / (1 - x))`, defined for `|x| < 1`.
pub fn lgt(x: f64) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(BapcError::Domain(format!("lgt needs |x| < 1, got {x}")));
    }
    Ok(2.0 * x.atanh())
}

/// `(e^y - 1) / (e^y + 1)`.
pub fn lgt_inverse(y: f64) -> f64 {
    (0.5 * y).tanh()
}

/// Clamp into `[-bound, bound]` and apply [`lgt`].
pub fn clamped_lgt(x: f64, bound: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(BapcError::NonFinite("lgt argument"));
    }
    lgt(x.clamp(-bound, bound))
}

/// Clip a correction so that `s - eps_hat` lies in `[0, 1]`.
pub fn truncate_correction(s: f64, eps_hat: f64) -> f64 {
    let mut e = eps_hat.clamp(s - 1.0, s);
    // s - 1 can round; nudge until the subtraction lands inside exactly
    while s - e > 1.0 {
        e = e.next_up();
    }
    while s - e < 0.0 {
        e = e.next_down();
    }
    e
}

/// A corrector trained on `lgt` of the residuals whose predictions are
/// mapped back into `(-1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitWrapped {
    pub inner: Corrector,
    pub bound: f64,
}

impl LogitWrapped {
    pub fn train(
        spec: &CorrectorSpec,
        residuals: &LabeledDataset,
        bound: f64,
        exec: Execution,
    ) -> Result<(LogitWrapped, TrainingDiagnostics)> {
        if !(bound > 0.0 && bound < 1.0) {
            return Err(BapcError::Domain(format!("clamp bound must lie in (0, 1), got {bound}")));
        }
        let transformed = residuals
            .ys()
            .iter()
            .map(|&e| clamped_lgt(e, bound))
            .collect::<Result<Vec<_>>>()?;
        let data = residuals.with_labels(transformed)?;
        let (inner, diag) = Corrector::train(spec, &data, exec)?;
        Ok((LogitWrapped { inner, bound }, diag))
    }
}

impl Correction for LogitWrapped {
    fn correct(&self, x: &[f64]) -> f64 {
        lgt_inverse(self.inner.correct(x))
    }
}
