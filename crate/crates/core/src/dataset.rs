use serde::{Deserialize, Serialize};

use crate::error::{BapcError, Result};

/// Ordered pairs `(x, y)` with `x` of a fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(BapcError::DimensionMismatch { expected: xs.len(), got: ys.len() });
        }
        if xs.len() < 2 {
            return Err(BapcError::InvalidDataset(format!("need at least 2 points, got {}", xs.len())));
        }
        let dim = xs[0].len();
        if dim == 0 {
            return Err(BapcError::InvalidDataset("inputs have dimension 0".into()));
        }
        if let Some(bad) = xs.iter().find(|x| x.len() != dim) {
            return Err(BapcError::DimensionMismatch { expected: dim, got: bad.len() });
        }
        if xs.iter().flatten().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(BapcError::NonFinite("dataset"));
        }
        Ok(Self { xs, ys, dim })
    }

    /// One-dimensional inputs.
    pub fn from_scalar(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec())
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i]
    }

    /// Same inputs, new labels.
    pub fn with_labels(&self, ys: Vec<f64>) -> Result<Self> {
        if ys.len() != self.len() {
            return Err(BapcError::DimensionMismatch { expected: self.len(), got: ys.len() });
        }
        if ys.iter().any(|v| !v.is_finite()) {
            return Err(BapcError::NonFinite("labels"));
        }
        Ok(Self { xs: self.xs.clone(), ys, dim: self.dim })
    }
}

/// Closed ball `{x : dist(x, center) <= radius}`.
///
/// In one dimension the distance is the absolute difference, otherwise the
/// Euclidean norm. A radius of zero selects the center only; an infinite
/// radius selects everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl NeighborhoodSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(BapcError::InvalidDataset("neighborhood center has dimension 0".into()));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(BapcError::NonFinite("neighborhood center"));
        }
        if radius.is_nan() || radius < 0.0 {
            return Err(BapcError::Domain(format!("radius must be nonnegative, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn interval(center: f64, radius: f64) -> Result<Self> {
        Self::new(vec![center], radius)
    }

    pub fn global(dim: usize) -> Self {
        Self { center: vec![0.0; dim.max(1)], radius: f64::INFINITY }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        if x.len() == 1 && self.center.len() == 1 {
            (x[0] - self.center[0]).abs()
        } else {
            x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.center.len());
        self.distance(x) <= self.radius
    }

    /// Indices of dataset points inside the ball.
    pub fn members(&self, data: &LabeledDataset) -> Vec<usize> {
        (0..data.len()).filter(|&i| self.contains(data.x(i))).collect()
    }
}
