//! Before/after parameter comparison.
//!
//! 1. Fit the base model `f_theta` to the data.
//! 2. Train a corrector on the residuals `eps_i = y_i - f_theta(x_i)`.
//! 3. Subtract the predicted corrections from the labels inside a
//!    neighbourhood and refit, giving `theta'`.
//!
//! The explanation is the parameter shift together with the difference model
//! `delta_f(x) = f_theta(x) - f_theta'(x)`, whose reflection
//! `f_theta(x) + delta_f(x)` mimics the corrected prediction locally.

use serde::{Deserialize, Serialize};

use crate::base::{self, BaseModel, BaseModelFit};
use crate::correctors::{Correction, Corrector, CorrectorSpec, TrainingDiagnostics};
use crate::dataset::{LabeledDataset, NeighborhoodSpec};
use crate::error::{BapcError, Result};
use crate::exec::Execution;

pub fn fit_base(model: &BaseModel, data: &LabeledDataset) -> Result<BaseModelFit> {
    base::fit(model, data)
}

/// Second fit on modified labels; same contract as [`fit_base`].
pub fn refit_base(model: &BaseModel, modified: &LabeledDataset) -> Result<BaseModelFit> {
    base::fit(model, modified)
}

/// `y_i - f_theta(x_i)` in dataset order.
pub fn residuals(fit: &BaseModelFit, data: &LabeledDataset) -> Result<Vec<f64>> {
    data.xs().iter().zip(data.ys()).map(|(x, y)| Ok(y - fit.predict(x)?)).collect()
}

/// Labels `y_j - eps_hat_j` for `x_j` in the neighbourhood, unchanged elsewhere.
pub fn modified_labels(
    data: &LabeledDataset,
    corrector: &dyn Correction,
    nbhd: &NeighborhoodSpec,
) -> Result<LabeledDataset> {
    let eps_hat: Vec<f64> = data.xs().iter().map(|x| corrector.correct(x)).collect();
    modified_labels_with(data, &eps_hat, nbhd)
}

pub fn modified_labels_with(data: &LabeledDataset, eps_hat: &[f64], nbhd: &NeighborhoodSpec) -> Result<LabeledDataset> {
    if eps_hat.len() != data.len() {
        return Err(BapcError::DimensionMismatch { expected: data.len(), got: eps_hat.len() });
    }
    if nbhd.center.len() != data.dim() {
        return Err(BapcError::DimensionMismatch { expected: data.dim(), got: nbhd.center.len() });
    }
    let ys = data
        .xs()
        .iter()
        .zip(data.ys())
        .zip(eps_hat)
        .map(|((x, &y), &e)| if nbhd.contains(x) { y - e } else { y })
        .collect();
    data.with_labels(ys)
}

/// `f_theta(x) - f_theta'(x)`.
pub fn surrogate_delta_f(fit: &BaseModelFit, fit_prime: &BaseModelFit, x: &[f64]) -> Result<f64> {
    if fit.kind() != fit_prime.kind() {
        return Err(BapcError::ModelKindMismatch(fit.kind(), fit_prime.kind()));
    }
    Ok(fit.predict(x)? - fit_prime.predict(x)?)
}

/// `f_theta(x) + delta_f(x) = 2 f_theta(x) - f_theta'(x)`.
pub fn reflected_prediction(fit: &BaseModelFit, fit_prime: &BaseModelFit, x: &[f64]) -> Result<f64> {
    Ok(fit.predict(x)? + surrogate_delta_f(fit, fit_prime, x)?)
}

/// Direction conventions of the reported parameter shifts.
pub const SIGN_CONVENTION: &str =
    "delta_theta = theta_prime - theta; reflected_delta_theta = theta - theta_prime = theta_tilde - theta, \
     where f_theta_tilde = 2 f_theta - f_theta_prime";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BapcResult {
    pub theta: Vec<f64>,
    pub theta_prime: Vec<f64>,
    /// `theta' - theta`.
    pub delta_theta: Vec<f64>,
    /// `theta - theta'`: parameters of the reflected model minus `theta`.
    pub reflected_delta_theta: Vec<f64>,
    pub x_n: Vec<f64>,
    pub base_prediction: f64,
    pub eps_hat_at_xn: f64,
    pub corrected_prediction: f64,
    pub delta_f_at_xn: f64,
    pub neighborhood: NeighborhoodSpec,
    pub fit: BaseModelFit,
    pub fit_prime: BaseModelFit,
}

impl BapcResult {
    /// Test error `y_n - f_theta(x_n) - eps_hat(x_n)` when the label is known.
    pub fn delta_eps(&self, y_n: f64) -> f64 {
        y_n - self.corrected_prediction
    }

    pub fn delta_f(&self, x: &[f64]) -> Result<f64> {
        surrogate_delta_f(&self.fit, &self.fit_prime, x)
    }

    pub fn reflected(&self, x: &[f64]) -> Result<f64> {
        reflected_prediction(&self.fit, &self.fit_prime, x)
    }
}

/// Step 3 and the explanation, given a Step-1 fit and a trained corrector.
pub fn explain(
    model: &BaseModel,
    fit: &BaseModelFit,
    corrector: &dyn Correction,
    data: &LabeledDataset,
    x_n: &[f64],
    nbhd: &NeighborhoodSpec,
) -> Result<BapcResult> {
    if x_n.len() != data.dim() {
        return Err(BapcError::DimensionMismatch { expected: data.dim(), got: x_n.len() });
    }
    if !nbhd.contains(x_n) {
        return Err(BapcError::Domain("x_n lies outside the neighborhood".into()));
    }
    let modified = modified_labels(data, corrector, nbhd)?;
    let fit_prime = refit_base(model, &modified)?;
    let theta = fit.params().to_vec();
    let theta_prime = fit_prime.params().to_vec();
    let delta_theta = theta_prime.iter().zip(&theta).map(|(b, a)| b - a).collect();
    let reflected_delta_theta = theta.iter().zip(&theta_prime).map(|(a, b)| a - b).collect();
    let base_prediction = fit.predict(x_n)?;
    let eps_hat_at_xn = corrector.correct(x_n);
    let delta_f_at_xn = surrogate_delta_f(fit, &fit_prime, x_n)?;
    Ok(BapcResult {
        theta,
        theta_prime,
        delta_theta,
        reflected_delta_theta,
        x_n: x_n.to_vec(),
        base_prediction,
        eps_hat_at_xn,
        corrected_prediction: base_prediction + eps_hat_at_xn,
        delta_f_at_xn,
        neighborhood: nbhd.clone(),
        fit: fit.clone(),
        fit_prime,
    })
}

#[derive(Debug, Clone)]
pub struct BapcRun {
    pub result: BapcResult,
    pub corrector: Corrector,
    pub diagnostics: TrainingDiagnostics,
}

/// All three steps: fit, train a corrector on the residuals, refit locally.
pub fn run_bapc(
    model: &BaseModel,
    corrector_spec: &CorrectorSpec,
    data: &LabeledDataset,
    x_n: &[f64],
    nbhd: &NeighborhoodSpec,
    exec: Execution,
) -> Result<BapcRun> {
    let fit = fit_base(model, data)?;
    let eps = residuals(&fit, data)?;
    let xi = data.with_labels(eps)?;
    let (corrector, diagnostics) = Corrector::train(corrector_spec, &xi, exec)?;
    let result = explain(model, &fit, &corrector, data, x_n, nbhd)?;
    Ok(BapcRun { result, corrector, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correctors::{PointwiseCorrection, ZeroCorrection};

    fn line_data() -> LabeledDataset {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 0.3 * x + (x * 1.7).sin()).collect();
        LabeledDataset::from_scalar(&xs, &ys).unwrap()
    }

    #[test]
    fn residuals_of_perfect_fit_are_zero() {
        let d = LabeledDataset::from_scalar(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        let fit = fit_base(&BaseModel::OlsLinear, &d).unwrap();
        assert!(residuals(&fit, &d).unwrap().iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn residuals_of_zero_model_are_labels() {
        let d = LabeledDataset::from_scalar(&[0.0, 1.0], &[1.0, 2.0]).unwrap();
        let zero = BaseModelFit::OlsLinear { params: vec![0.0, 0.0], training_loss: 0.0 };
        assert_eq!(residuals(&zero, &d).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn residuals_dimension_mismatch() {
        let d = LabeledDataset::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 2.0]).unwrap();
        let fit = BaseModelFit::OlsLinear { params: vec![0.0, 1.0], training_loss: 0.0 };
        assert!(matches!(residuals(&fit, &d), Err(BapcError::DimensionMismatch { .. })));
    }

    #[test]
    fn empty_neighbourhood_leaves_labels() {
        let d = line_data();
        let n = NeighborhoodSpec::interval(0.25, 0.0).unwrap();
        let m = modified_labels(&d, &|_: &[f64]| 7.0, &n).unwrap();
        assert_eq!(m, d);
    }

    #[test]
    fn zero_corrector_leaves_labels() {
        let d = line_data();
        let m = modified_labels(&d, &ZeroCorrection, &NeighborhoodSpec::global(1)).unwrap();
        assert_eq!(m, d);
    }

    #[test]
    fn exact_residuals_globally_give_fitted_values() {
        let d = line_data();
        let fit = fit_base(&BaseModel::OlsLinear, &d).unwrap();
        let eps = residuals(&fit, &d).unwrap();
        let c = PointwiseCorrection::new(d.xs(), &eps).unwrap();
        let m = modified_labels(&d, &c, &NeighborhoodSpec::global(1)).unwrap();
        for (x, y) in m.xs().iter().zip(m.ys()) {
            assert!((y - fit.predict(x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn refit_on_unchanged_data_is_identical() {
        let d = line_data();
        let a = fit_base(&BaseModel::OlsLinear, &d).unwrap();
        let b = refit_base(&BaseModel::OlsLinear, &d.with_labels(d.ys().to_vec()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn delta_f_hand_example() {
        let a = BaseModelFit::OlsLinear { params: vec![0.0, 1.0], training_loss: 0.0 };
        let b = BaseModelFit::OlsLinear { params: vec![1.0, 0.0], training_loss: 0.0 };
        assert_eq!(surrogate_delta_f(&a, &b, &[2.0]).unwrap(), 1.0);
        assert_eq!(surrogate_delta_f(&a, &a, &[-3.5]).unwrap(), 0.0);
        assert_eq!(reflected_prediction(&a, &b, &[2.0]).unwrap(), 3.0);
    }

    #[test]
    fn zero_corrector_explains_nothing() {
        let d = line_data();
        let fit = fit_base(&BaseModel::OlsLinear, &d).unwrap();
        let n = NeighborhoodSpec::interval(2.0, 1.0).unwrap();
        let r = explain(&BaseModel::OlsLinear, &fit, &ZeroCorrection, &d, &[2.0], &n).unwrap();
        assert!(r.delta_theta.iter().all(|v| *v == 0.0));
        assert_eq!(r.delta_f_at_xn, 0.0);
        assert_eq!(r.corrected_prediction, r.base_prediction);
    }

    #[test]
    fn x_n_outside_neighbourhood_is_rejected() {
        let d = line_data();
        let fit = fit_base(&BaseModel::OlsLinear, &d).unwrap();
        let n = NeighborhoodSpec::interval(2.0, 0.5).unwrap();
        assert!(explain(&BaseModel::OlsLinear, &fit, &ZeroCorrection, &d, &[3.0], &n).is_err());
    }
}
