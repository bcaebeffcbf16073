//! Interpretable base models.

pub mod newsvendor_link;
pub mod ols;
pub mod quantile;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{BapcError, Result};

pub use newsvendor_link::{
    default_lambda_grid, fit_lambda, log_grid, parametric_critical_fractile, profit, LambdaFit,
    SuccessLink,
};
pub use ols::{delta_theta_closed_form, ols_fit, OlsDesign};
pub use quantile::empirical_quantile;

/// Options for fitting the newsvendor link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkFitOptions {
    pub price: f64,
    pub cost: f64,
    pub delta: f64,
    pub lambda_grid: Vec<f64>,
    pub smoothing_span: Option<f64>,
}

impl Default for LinkFitOptions {
    fn default() -> Self {
        Self {
            price: 2.0,
            cost: 1.0,
            delta: 0.1,
            lambda_grid: default_lambda_grid(),
            smoothing_span: Some(0.25),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseModel {
    OlsLinear,
    NewsvendorLink(LinkFitOptions),
}

impl BaseModel {
    pub fn name(&self) -> &'static str {
        match self {
            BaseModel::OlsLinear => "ols_linear",
            BaseModel::NewsvendorLink(_) => "newsvendor_link",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case")]
pub enum BaseModelFit {
    OlsLinear {
        params: Vec<f64>,
        training_loss: f64,
    },
    NewsvendorLink {
        params: Vec<f64>,
        training_loss: f64,
        link: SuccessLink,
    },
}

impl BaseModelFit {
    /// The base model family, `ols_linear` or `newsvendor_link`.
    pub fn kind(&self) -> &'static str {
        match self {
            BaseModelFit::OlsLinear { .. } => "ols_linear",
            BaseModelFit::NewsvendorLink { .. } => "newsvendor_link",
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            BaseModelFit::OlsLinear { params, .. } | BaseModelFit::NewsvendorLink { params, .. } => params,
        }
    }

    pub fn training_loss(&self) -> f64 {
        match self {
            BaseModelFit::OlsLinear { training_loss, .. }
            | BaseModelFit::NewsvendorLink { training_loss, .. } => *training_loss,
        }
    }

    /// Input dimension the model accepts.
    pub fn input_dim(&self) -> usize {
        match self {
            BaseModelFit::OlsLinear { params, .. } => params.len() - 1,
            BaseModelFit::NewsvendorLink { .. } => 1,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(BapcError::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        match self {
            BaseModelFit::OlsLinear { params, .. } => Ok(ols::predict_affine(params, x)),
            BaseModelFit::NewsvendorLink { params, link, .. } => link.success_indicator(params[0], x[0]),
        }
    }
}

/// Fit a base model to a dataset: OLS in closed form, or the link by
/// smoothed grid search with the dataset inputs as the demand sample.
pub fn fit(model: &BaseModel, data: &LabeledDataset) -> Result<BaseModelFit> {
    match model {
        BaseModel::OlsLinear => {
            let design = OlsDesign::from_dataset(data)?;
            let params = ols_fit(&design)?;
            let training_loss = data
                .xs()
                .iter()
                .zip(data.ys())
                .map(|(x, y)| {
                    let r = y - ols::predict_affine(&params, x);
                    r * r
                })
                .sum();
            Ok(BaseModelFit::OlsLinear { params, training_loss })
        }
        BaseModel::NewsvendorLink(opts) => {
            if data.dim() != 1 {
                return Err(BapcError::DimensionMismatch { expected: 1, got: data.dim() });
            }
            let demands: Vec<f64> = data.xs().iter().map(|x| x[0]).collect();
            let link = SuccessLink::new(opts.price, opts.cost, opts.delta, &demands)?;
            let lf = fit_lambda(&link, &demands, data.ys(), &opts.lambda_grid, opts.smoothing_span)?;
            Ok(BaseModelFit::NewsvendorLink {
                params: vec![lf.lambda_star],
                training_loss: lf.training_loss,
                link,
            })
        }
    }
}
