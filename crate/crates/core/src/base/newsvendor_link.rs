//! One-parameter success-indicator link for the newsvendor base model.
//!
//! Demand is modelled as exponential with rate `price * lambda`, giving the
//! profit-maximising order `ln(price / cost) / (price * lambda)`. The link
//! value at a demand `d_i` is the fraction of sample demands within `delta`
//! of `d_i` for which that order makes a strictly positive profit.

use serde::{Deserialize, Serialize};

use crate::error::{BapcError, Result};
use crate::smooth;

/// `p * min(D, q) - c * q`.
pub fn profit(price: f64, cost: f64, order: f64, demand: f64) -> f64 {
    price * demand.min(order) - cost * order
}

/// Critical fractile of the exponential demand model with rate `p * lambda`.
pub fn parametric_critical_fractile(lambda: f64, price: f64, cost: f64) -> Result<f64> {
    check_prices(price, cost)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BapcError::Domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok((price / cost).ln() / (price * lambda))
}

fn check_prices(price: f64, cost: f64) -> Result<()> {
    if !(cost > 0.0 && price > cost && price.is_finite()) {
        return Err(BapcError::Domain(format!("need price > cost > 0, got p={price}, c={cost}")));
    }
    Ok(())
}

/// Link function template: prices, neighbourhood half-width and the demand
/// sample the neighbourhoods are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessLink {
    price: f64,
    cost: f64,
    delta: f64,
    demand: Vec<f64>,
}

impl SuccessLink {
    pub fn new(price: f64, cost: f64, delta: f64, demand: &[f64]) -> Result<Self> {
        check_prices(price, cost)?;
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(BapcError::Domain(format!("delta must be nonnegative, got {delta}")));
        }
        if demand.is_empty() {
            return Err(BapcError::EmptySample);
        }
        let demand = crate::base::quantile::sorted(demand)?;
        Ok(Self { price, cost, delta, demand })
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    /// Index range of the sorted demand sample with `|D - d_i| <= delta`.
    fn neighbourhood(&self, d_i: f64) -> std::ops::Range<usize> {
        let lo = self.demand.partition_point(|&d| d_i - d > self.delta);
        let hi = self.demand.partition_point(|&d| d - d_i <= self.delta);
        lo..hi.max(lo)
    }

    pub fn success_indicator(&self, lambda: f64, d_i: f64) -> Result<f64> {
        let q = parametric_critical_fractile(lambda, self.price, self.cost)?;
        let range = self.neighbourhood(d_i);
        self.fraction_positive(q, range)
    }

    fn fraction_positive(&self, order: f64, range: std::ops::Range<usize>) -> Result<f64> {
        if range.is_empty() {
            return Err(BapcError::EmptyNeighborhood);
        }
        let size = range.len();
        let hits = self.demand[range]
            .iter()
            .filter(|&&d| profit(self.price, self.cost, order, d) > 0.0)
            .count();
        Ok(hits as f64 / size as f64)
    }

    /// Link values for many demands at once, reusing neighbourhoods across
    /// the lambda grid.
    pub fn prepared(&self, demands: &[f64]) -> Result<PreparedLink<'_>> {
        let ranges: Vec<_> = demands.iter().map(|&d| self.neighbourhood(d)).collect();
        if ranges.iter().any(|r| r.is_empty()) {
            return Err(BapcError::EmptyNeighborhood);
        }
        Ok(PreparedLink { link: self, ranges })
    }
}

pub struct PreparedLink<'a> {
    link: &'a SuccessLink,
    ranges: Vec<std::ops::Range<usize>>,
}

impl PreparedLink<'_> {
    pub fn values(&self, lambda: f64) -> Result<Vec<f64>> {
        let q = parametric_critical_fractile(lambda, self.link.price, self.link.cost)?;
        self.ranges.iter().map(|r| self.link.fraction_positive(q, r.clone())).collect()
    }

    pub fn sse(&self, lambda: f64, targets: &[f64]) -> Result<f64> {
        Ok(self.values(lambda)?.iter().zip(targets).map(|(s, t)| (t - s) * (t - s)).sum())
    }
}

/// Geometric grid of `n` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(BapcError::InvalidGrid(format!("log grid needs 0 < lo < hi and n >= 2, got {lo}, {hi}, {n}")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(0.1, 10.0, 200).expect("static grid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    pub lambda_star: f64,
    pub grid: Vec<f64>,
    /// Raw sum of squared residuals per grid point.
    pub objective: Vec<f64>,
    /// Smoothed objective (equal to `objective` when no smoothing is used).
    pub smoothed: Vec<f64>,
    /// Raw objective at `lambda_star`.
    pub training_loss: f64,
}

/// Grid search for `lambda` minimising `sum (target_i - S_i(lambda))^2`.
///
/// The objective is smoothed over `ln(lambda)` with a local linear smoother
/// of the given span before taking the argmin; ties go to the smaller
/// lambda.
pub fn fit_lambda(
    link: &SuccessLink,
    demands: &[f64],
    targets: &[f64],
    grid: &[f64],
    smoothing_span: Option<f64>,
) -> Result<LambdaFit> {
    if demands.len() != targets.len() {
        return Err(BapcError::DimensionMismatch { expected: demands.len(), got: targets.len() });
    }
    if demands.is_empty() {
        return Err(BapcError::EmptySample);
    }
    if grid.is_empty() {
        return Err(BapcError::InvalidGrid("lambda grid is empty".into()));
    }
    if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BapcError::InvalidGrid("lambda grid must be positive and strictly increasing".into()));
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(BapcError::NonFinite("targets"));
    }
    let prepared = link.prepared(demands)?;
    let objective = grid
        .iter()
        .map(|&l| {
            let v = prepared.sse(l, targets)?;
            if v.is_finite() { Ok(v) } else { Err(BapcError::NonFiniteObjective(l)) }
        })
        .collect::<Result<Vec<f64>>>()?;
    let smoothed = match smoothing_span {
        Some(span) if grid.len() > 2 => {
            let logs: Vec<f64> = grid.iter().map(|l| l.ln()).collect();
            smooth::local_linear(&logs, &objective, span)?
        }
        _ => objective.clone(),
    };
    let best = argmin_first(&smoothed);
    Ok(LambdaFit {
        lambda_star: grid[best],
        grid: grid.to_vec(),
        training_loss: objective[best],
        objective,
        smoothed,
    })
}

fn argmin_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}
