//! Single-hidden-layer rectifier network trained full-batch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lbfgs::{self, LbfgsOptions};
use super::TrainingDiagnostics;
use crate::dataset::LabeledDataset;
use crate::error::Result;
use crate::rng::{SeedTree, CORRECTOR_INIT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub hidden_units: usize,
    pub max_iterations: usize,
    /// Relative loss decrease below which training stops.
    pub tolerance: f64,
    /// L2 penalty on the weights (not the biases).
    pub l2: f64,
    pub seed: u64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self { hidden_units: 32, max_iterations: 500, tolerance: 1e-13, l2: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    dim: usize,
    hidden: usize,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    /// `[w1 (hidden x dim, row-major), b1 (hidden), w2 (hidden), b2]`
    params: Vec<f64>,
}

struct Layout {
    dim: usize,
    hidden: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.hidden * self.dim + 2 * self.hidden + 1
    }
    fn b1(&self) -> usize {
        self.hidden * self.dim
    }
    fn w2(&self) -> usize {
        self.b1() + self.hidden
    }
    fn b2(&self) -> usize {
        self.w2() + self.hidden
    }
}

impl Mlp {
    pub fn train(spec: &MlpSpec, data: &LabeledDataset) -> Result<(Mlp, TrainingDiagnostics)> {
        let dim = data.dim();
        let hidden = spec.hidden_units.max(1);
        let n = data.len() as f64;
        let (x_mean, x_scale) = standardization(data);
        let xs: Vec<Vec<f64>> = data
            .xs()
            .iter()
            .map(|x| x.iter().zip(&x_mean).zip(&x_scale).map(|((v, m), s)| (v - m) / s).collect())
            .collect();
        let ys = data.ys();
        let lay = Layout { dim, hidden };

        let mut rng = SeedTree::new(spec.seed).stream(CORRECTOR_INIT);
        let mut p = vec![0.0; lay.len()];
        let in_bound = 1.0 / (dim as f64).sqrt();
        for v in &mut p[..lay.w2()] {
            *v = rng.random_range(-in_bound..in_bound);
        }
        // output layer starts as the constant model at the label mean
        p[lay.b2()] = ys.iter().sum::<f64>() / n;

        let l2 = spec.l2;
        let mut z = vec![0.0; hidden];
        let objective = |p: &[f64], grad: &mut [f64]| -> f64 {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut sse = 0.0;
            for (x, &y) in xs.iter().zip(ys) {
                let mut out = p[lay.b2()];
                for j in 0..hidden {
                    let mut zj = p[lay.b1() + j];
                    for k in 0..dim {
                        zj += p[j * dim + k] * x[k];
                    }
                    z[j] = zj;
                    if zj > 0.0 {
                        out += p[lay.w2() + j] * zj;
                    }
                }
                let r = out - y;
                sse += r * r;
                let rn = r / n;
                grad[lay.b2()] += rn;
                for j in 0..hidden {
                    if z[j] > 0.0 {
                        grad[lay.w2() + j] += rn * z[j];
                        let dz = rn * p[lay.w2() + j];
                        grad[lay.b1() + j] += dz;
                        for k in 0..dim {
                            grad[j * dim + k] += dz * x[k];
                        }
                    }
                }
            }
            let mut penalty = 0.0;
            for i in (0..lay.b1()).chain(lay.w2()..lay.b2()) {
                penalty += p[i] * p[i];
                grad[i] += l2 / n * p[i];
            }
            0.5 * sse / n + 0.5 * l2 / n * penalty
        };
        let report = lbfgs::minimize(
            objective,
            p,
            LbfgsOptions {
                max_iterations: spec.max_iterations,
                loss_tolerance: spec.tolerance,
                ..Default::default()
            },
        );
        let diag = TrainingDiagnostics {
            converged: report.converged,
            iterations: report.iterations,
            final_loss: report.loss,
            loss_history: report.history,
        };
        if !diag.converged {
            log::debug!("mlp did not converge within {} iterations (loss {:e})", spec.max_iterations, diag.final_loss);
        }
        Ok((Mlp { dim, hidden, x_mean, x_scale, params: report.x }, diag))
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let lay = Layout { dim: self.dim, hidden: self.hidden };
        let p = &self.params;
        let mut out = p[lay.b2()];
        for j in 0..self.hidden {
            let mut zj = p[lay.b1() + j];
            for k in 0..self.dim {
                zj += p[j * self.dim + k] * (x[k] - self.x_mean[k]) / self.x_scale[k];
            }
            if zj > 0.0 {
                out += p[lay.w2() + j] * zj;
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Per-feature mean and standard deviation (1 for constant features).
fn standardization(data: &LabeledDataset) -> (Vec<f64>, Vec<f64>) {
    let n = data.len() as f64;
    let d = data.dim();
    let mut mean = vec![0.0; d];
    for x in data.xs() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for x in data.xs() {
        for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    (mean, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_data() -> LabeledDataset {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 / 20.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (2.0 * x).sin()).collect();
        LabeledDataset::from_scalar(&xs, &ys).unwrap()
    }

    #[test]
    fn fits_a_smooth_curve() {
        let data = sine_data();
        let (m, diag) = Mlp::train(&MlpSpec { seed: 3, ..Default::default() }, &data).unwrap();
        let max_err = data.xs().iter().zip(data.ys()).map(|(x, y)| (m.predict(x) - y).abs()).fold(0.0, f64::max);
        assert!(max_err < 0.05, "max error {max_err}, diag {diag:?}");
    }

    #[test]
    fn loss_history_is_non_increasing() {
        let (_, diag) = Mlp::train(&MlpSpec { seed: 11, ..Default::default() }, &sine_data()).unwrap();
        assert!(diag.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_targets_give_zero_predictions() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let data = LabeledDataset::from_scalar(&xs, &[0.0; 30]).unwrap();
        let (m, diag) = Mlp::train(&MlpSpec { seed: 5, ..Default::default() }, &data).unwrap();
        assert!(diag.converged);
        for x in [-1.0, 0.0, 0.7, 1.5, 2.9, 5.0] {
            assert!(m.predict(&[x]).abs() < 1e-6, "{} at {x}", m.predict(&[x]));
        }
    }

    #[test]
    fn seed_determinism() {
        let data = sine_data();
        let spec = MlpSpec { seed: 42, max_iterations: 50, ..Default::default() };
        let (a, _) = Mlp::train(&spec, &data).unwrap();
        let (b, _) = Mlp::train(&spec, &data).unwrap();
        assert_eq!(a, b);
        let (c, _) = Mlp::train(&MlpSpec { seed: 43, ..spec }, &data).unwrap();
        assert_ne!(a, c);
    }
}
