//! Accuracy and fidelity criteria for a neighbourhood explanation.
//!
//! Accuracy (C1): `|delta_eps| < eta1 * |eps|`. Fidelity (C2):
//! `|eps_hat - delta_f| < eta2 * |eps|`. Both are strict; equality is a
//! violation. The weak versions are estimated by violation fractions over
//! a sample, and combine into a bound on the tail of the surrogate error.

use serde::{Deserialize, Serialize};

use crate::base::{BaseModel, BaseModelFit};
use crate::correctors::Correction;
use crate::dataset::{LabeledDataset, NeighborhoodSpec};
use crate::engine;
use crate::error::{BapcError, Result};
use crate::exec::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaParams {
    pub eta1: f64,
    pub eta2: f64,
}

impl CriteriaParams {
    pub fn new(eta1: f64, eta2: f64) -> Result<Self> {
        for (name, v) in [("eta1", eta1), ("eta2", eta2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(BapcError::Domain(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(Self { eta1, eta2 })
    }

    pub fn symmetric(eta: f64) -> Result<Self> {
        Self::new(eta, eta)
    }
}

pub fn check_c1(eps: f64, delta_eps: f64, eta1: f64) -> bool {
    delta_eps.abs() < eta1 * eps.abs()
}

pub fn check_c2(eps_hat: f64, delta_f: f64, eps: f64, eta2: f64) -> bool {
    (eps_hat - delta_f).abs() < eta2 * eps.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    pub y: f64,
    pub eps: f64,
    pub eps_hat: f64,
    pub delta_eps: f64,
    pub delta_f: f64,
    /// `|eps_hat - delta_f|`
    pub fidelity_gap: f64,
    pub c1_ok: bool,
    pub c2_ok: bool,
    /// `eps == 0`: the right-hand sides vanish and any nonzero left side
    /// counts as a violation.
    pub zero_residual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub params: CriteriaParams,
    pub records: Vec<PointRecord>,
    pub delta1_hat: f64,
    pub delta2_hat: f64,
}

impl CriteriaReport {
    pub fn mean_abs_eps(&self) -> f64 {
        self.records.iter().map(|r| r.eps.abs()).sum::<f64>() / self.records.len() as f64
    }
}

/// Evaluate C1 and C2 at every point of `points` and estimate the
/// violation fractions.
pub fn estimate_deltas(
    points: &[(Vec<f64>, f64)],
    fit: &BaseModelFit,
    fit_prime: &BaseModelFit,
    corrector: &dyn Correction,
    params: CriteriaParams,
) -> Result<CriteriaReport> {
    if points.is_empty() {
        return Err(BapcError::EmptyNeighborhood);
    }
    let records = points
        .iter()
        .map(|(x, y)| {
            let eps = y - fit.predict(x)?;
            let eps_hat = corrector.correct(x);
            let delta_eps = eps - eps_hat;
            let delta_f = engine::surrogate_delta_f(fit, fit_prime, x)?;
            Ok(PointRecord {
                x: x.clone(),
                y: *y,
                eps,
                eps_hat,
                delta_eps,
                delta_f,
                fidelity_gap: (eps_hat - delta_f).abs(),
                c1_ok: check_c1(eps, delta_eps, params.eta1),
                c2_ok: check_c2(eps_hat, delta_f, eps, params.eta2),
                zero_residual: eps == 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = records.len() as f64;
    let delta1_hat = records.iter().filter(|r| !r.c1_ok).count() as f64 / n;
    let delta2_hat = records.iter().filter(|r| !r.c2_ok).count() as f64 / n;
    Ok(CriteriaReport { params, records, delta1_hat, delta2_hat })
}

/// Points of `data` inside `nbhd`.
pub fn points_in(data: &LabeledDataset, nbhd: &NeighborhoodSpec) -> Vec<(Vec<f64>, f64)> {
    nbhd.members(data).into_iter().map(|i| (data.x(i).to_vec(), data.ys()[i])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub radius: f64,
    pub delta1_hat: f64,
    pub delta2_hat: f64,
    pub n_points: usize,
}

/// Everything a radius sweep holds fixed: the data, the Step-1 fit, the
/// trained corrector and the points the criteria are evaluated on.
pub struct SweepContext<'a> {
    pub model: &'a BaseModel,
    pub data: &'a LabeledDataset,
    pub fit: &'a BaseModelFit,
    pub corrector: &'a dyn Correction,
    pub eval_points: &'a [(Vec<f64>, f64)],
}

/// For every radius refit `theta'` on `N(x_m, r)` and estimate the violation
/// fractions on the fixed evaluation points. Only C2 depends on the radius.
pub fn radius_sweep(
    radii: &[f64],
    x_m: &[f64],
    ctx: &SweepContext<'_>,
    params: CriteriaParams,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BapcError::InvalidGrid("radii must be positive and ascending".into()));
    }
    exec::map_slice(exec, radii, |&radius| {
        let nbhd = NeighborhoodSpec::new(x_m.to_vec(), radius)?;
        let modified = engine::modified_labels(ctx.data, ctx.corrector, &nbhd)?;
        let fit_prime = engine::refit_base(ctx.model, &modified)?;
        let rep = estimate_deltas(ctx.eval_points, ctx.fit, &fit_prime, ctx.corrector, params)?;
        Ok(SweepRow { radius, delta1_hat: rep.delta1_hat, delta2_hat: rep.delta2_hat, n_points: rep.records.len() })
    })
    .into_iter()
    .collect()
}

/// Upper bound on `P[|Y - (f(x) + delta_f(x))| > alpha]` under weak
/// accuracy and fidelity:
/// `(eta1 + eta2) / alpha * E|eps| + delta1 + delta2 + delta1 * delta2`.
pub fn theorem_bound(eta1: f64, eta2: f64, delta1: f64, delta2: f64, alpha: f64, mean_abs_eps: f64) -> Result<f64> {
    if [eta1, eta2, delta1, delta2, mean_abs_eps].iter().any(|v| !(*v >= 0.0)) {
        return Err(BapcError::Domain("bound inputs must be nonnegative".into()));
    }
    if !(alpha > 0.0) {
        return Err(BapcError::Domain(format!("alpha must be positive, got {alpha}")));
    }
    Ok((eta1 + eta2) / alpha * mean_abs_eps + delta1 + delta2 + delta1 * delta2)
}

/// Fraction of points with `|y - (f_theta(x) + delta_f(x))| > alpha`.
pub fn empirical_surrogate_tail(
    points: &[(Vec<f64>, f64)],
    fit: &BaseModelFit,
    fit_prime: &BaseModelFit,
    alpha: f64,
) -> Result<f64> {
    if points.is_empty() {
        return Err(BapcError::EmptySample);
    }
    let mut over = 0usize;
    for (x, y) in points {
        let surrogate = engine::reflected_prediction(fit, fit_prime, x)?;
        if (y - surrogate).abs() > alpha {
            over += 1;
        }
    }
    Ok(over as f64 / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c1_is_strict() {
        assert!(check_c1(1.0, 0.1, 1.0));
        assert!(!check_c1(1.0, 1.0, 1.0));
        assert!(check_c1(-2.0, -1.5, 1.0));
    }

    #[test]
    fn c2_cases() {
        assert!(check_c2(0.4, 0.4, 0.1, 0.5));
        assert!(!check_c2(0.4, 0.3, 0.0, 1.0));
        assert!(!check_c2(0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn bound_examples() {
        let b = theorem_bound(0.5, 0.5, 0.1, 0.1, 1.0, 1.0).unwrap();
        assert!((b - 1.21).abs() < 1e-12);
        let far = theorem_bound(0.5, 0.5, 0.1, 0.2, 1e12, 1.0).unwrap();
        assert!((far - (0.1 + 0.2 + 0.02)).abs() < 1e-11);
        let tight = theorem_bound(0.3, 0.2, 0.0, 0.0, 2.0, 4.0).unwrap();
        assert!((tight - 1.0).abs() < 1e-15);
        assert!(theorem_bound(0.5, 0.5, 0.1, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(CriteriaParams::new(0.0, 1.0).is_err());
        assert!(CriteriaParams::new(1.0, 1.1).is_err());
        assert!(CriteriaParams::symmetric(0.1).is_ok());
    }

    fn fits() -> (BaseModelFit, BaseModelFit) {
        (
            BaseModelFit::OlsLinear { params: vec![0.0, 1.0], training_loss: 0.0 },
            BaseModelFit::OlsLinear { params: vec![0.5, 1.0], training_loss: 0.0 },
        )
    }

    #[test]
    fn perfect_corrector_has_no_accuracy_violations() {
        let (f, fp) = fits();
        // eps = 1 everywhere, eps_hat = 1
        let pts: Vec<_> = (0..5).map(|i| (vec![i as f64], i as f64 + 1.0)).collect();
        let rep = estimate_deltas(&pts, &f, &fp, &|_: &[f64]| 1.0, CriteriaParams::symmetric(1.0).unwrap()).unwrap();
        assert_eq!(rep.delta1_hat, 0.0);
        // delta_f = -0.5, gap 1.5 >= 1: every point violates C2
        assert_eq!(rep.delta2_hat, 1.0);
        assert!(estimate_deltas(&[], &f, &fp, &|_: &[f64]| 1.0, rep.params).is_err());
    }

    #[test]
    fn tail_extremes() {
        let (f, fp) = fits();
        let pts: Vec<_> = (0..4).map(|i| (vec![i as f64], i as f64 + 0.25 * i as f64)).collect();
        assert_eq!(empirical_surrogate_tail(&pts, &f, &fp, 100.0).unwrap(), 0.0);
        // surrogate is x - 0.5, every deviation is nonzero
        assert_eq!(empirical_surrogate_tail(&pts, &f, &fp, 0.0).unwrap(), 1.0);
        assert!(empirical_surrogate_tail(&[], &f, &fp, 1.0).is_err());
    }
}
