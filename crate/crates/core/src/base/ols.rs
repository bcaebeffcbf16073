//! Ordinary least squares through the normal equations.

use crate::dataset::LabeledDataset;
use crate::error::{BapcError, Result};
use crate::linalg;

/// Design matrix with a leading intercept column, plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsDesign {
    rows: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl OlsDesign {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(BapcError::DimensionMismatch { expected: rows.len(), got: labels.len() });
        }
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(BapcError::InvalidDataset("empty design".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(BapcError::DimensionMismatch { expected: k, got: r.len() });
        }
        if rows.len() < k {
            return Err(BapcError::RankDeficient { column: rows.len(), pivot: 0.0 });
        }
        if rows.iter().flatten().chain(&labels).any(|v| !v.is_finite()) {
            return Err(BapcError::NonFinite("design"));
        }
        Ok(Self { rows, labels })
    }

    pub fn from_dataset(data: &LabeledDataset) -> Result<Self> {
        let rows = data
            .xs()
            .iter()
            .map(|x| std::iter::once(1.0).chain(x.iter().copied()).collect())
            .collect();
        Self::new(rows, data.ys().to_vec())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn n_params(&self) -> usize {
        self.rows[0].len()
    }
}

/// `(X'X)^{-1} X'Y`.
pub fn ols_fit(design: &OlsDesign) -> Result<Vec<f64>> {
    project(design, design.labels())
}

/// Parameter change `(X'X)^{-1} X' eps_hat` caused by subtracting `eps_hat`
/// from every label.
pub fn delta_theta_closed_form(design: &OlsDesign, eps_hat: &[f64]) -> Result<Vec<f64>> {
    if eps_hat.len() != design.rows.len() {
        return Err(BapcError::DimensionMismatch { expected: design.rows.len(), got: eps_hat.len() });
    }
    if eps_hat.iter().any(|v| !v.is_finite()) {
        return Err(BapcError::NonFinite("eps_hat"));
    }
    project(design, eps_hat)
}

fn project(design: &OlsDesign, v: &[f64]) -> Result<Vec<f64>> {
    let g = linalg::gram(&design.rows);
    let rhs = linalg::xt_v(&design.rows, v);
    linalg::solve(&g, &rhs)
}

/// `theta[0] + sum_j theta[j+1] * x[j]`.
pub fn predict_affine(theta: &[f64], x: &[f64]) -> f64 {
    theta[0] + theta[1..].iter().zip(x).map(|(t, v)| t * v).sum::<f64>()
}
