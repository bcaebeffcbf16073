//! Residual correctors ("difference models").

pub mod forest;
pub mod lbfgs;
pub mod logit;
pub mod mlp;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{BapcError, Result};
use crate::exec::Execution;

pub use forest::{ForestSpec, RandomForest};
pub use logit::{lgt, lgt_inverse, truncate_correction, LogitWrapped};
pub use mlp::{Mlp, MlpSpec};

/// Anything that predicts a residual correction at an input.
pub trait Correction: Sync {
    fn correct(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrectorSpec {
    Mlp(MlpSpec),
    RandomForest(ForestSpec),
}

impl CorrectorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CorrectorSpec::Mlp(_) => "mlp",
            CorrectorSpec::RandomForest(_) => "random_forest",
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            CorrectorSpec::Mlp(s) => CorrectorSpec::Mlp(MlpSpec { seed, ..s.clone() }),
            CorrectorSpec::RandomForest(s) => CorrectorSpec::RandomForest(ForestSpec { seed, ..s.clone() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Corrector {
    Mlp(Mlp),
    RandomForest(RandomForest),
}

impl Corrector {
    /// Train on `xi = {(x_i, eps_i)}`.
    pub fn train(spec: &CorrectorSpec, xi: &LabeledDataset, exec: Execution) -> Result<(Corrector, TrainingDiagnostics)> {
        match spec {
            CorrectorSpec::Mlp(s) => {
                let (m, d) = Mlp::train(s, xi)?;
                Ok((Corrector::Mlp(m), d))
            }
            CorrectorSpec::RandomForest(s) => {
                let f = RandomForest::train(s, xi, exec)?;
                let mse = xi.xs().iter().zip(xi.ys()).map(|(x, y)| (f.predict(x) - y).powi(2)).sum::<f64>()
                    / xi.len() as f64;
                let diag = TrainingDiagnostics { converged: true, iterations: s.n_trees, final_loss: mse, loss_history: vec![mse] };
                Ok((Corrector::RandomForest(f), diag))
            }
        }
    }
}

impl Correction for Corrector {
    fn correct(&self, x: &[f64]) -> f64 {
        match self {
            Corrector::Mlp(m) => m.predict(x),
            Corrector::RandomForest(f) => f.predict(x),
        }
    }
}

/// Predicts zero everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroCorrection;

impl Correction for ZeroCorrection {
    fn correct(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

/// Prescribed corrections at known inputs (zero elsewhere). Used to inject
/// exact residuals or synthetic perturbations.
#[derive(Debug, Clone, Default)]
pub struct PointwiseCorrection {
    values: HashMap<Vec<u64>, f64>,
}

impl PointwiseCorrection {
    pub fn new(xs: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(BapcError::DimensionMismatch { expected: xs.len(), got: values.len() });
        }
        let values = xs.iter().zip(values).map(|(x, &v)| (key(x), v)).collect();
        Ok(Self { values })
    }
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

impl Correction for PointwiseCorrection {
    fn correct(&self, x: &[f64]) -> f64 {
        self.values.get(&key(x)).copied().unwrap_or(0.0)
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Correction for F {
    fn correct(&self, x: &[f64]) -> f64 {
        self(x)
    }
}
