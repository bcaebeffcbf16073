//! Library results checked against independent computations.

use bapc::base::{self, BaseModel, SuccessLink};
use bapc::correctors::{truncate_correction, PointwiseCorrection, ZeroCorrection};
use bapc::drag::{self, DragParams, NoiseSpec};
use bapc::engine;
use bapc::newsvendor::{self, NewsvendorConfig};
use bapc::rng::SeedTree;
use bapc::{LabeledDataset, NeighborhoodSpec};

/// Intercept and slope by Cramer's rule on the 2x2 normal equations.
fn cramer_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sy: f64 = ys.iter().sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    ((sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det)
}

/// Classical fourth-order Runge-Kutta on dv/dt = g - rho A Cd v^2 / (2 m).
fn rk4_velocity(t_end: f64, p: &DragParams, steps: usize) -> f64 {
    let k = p.rho * p.area * p.drag_coefficient / (2.0 * p.mass);
    let f = |v: f64| p.g - k * v * v;
    let h = t_end / steps as f64;
    let mut v = p.v_initial;
    for _ in 0..steps {
        let k1 = f(v);
        let k2 = f(v + 0.5 * h * k1);
        let k3 = f(v + 0.5 * h * k2);
        let k4 = f(v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    v
}

#[test]
fn ols_matches_cramer() {
    let xs = [0.0, 0.5, 1.3, 2.0, 2.2, 3.9];
    let ys = [1.0, 0.7, 2.9, 3.1, 4.4, 6.0];
    let data = LabeledDataset::from_scalar(&xs, &ys).unwrap();
    let fit = engine::fit_base(&BaseModel::OlsLinear, &data).unwrap();
    let (a, b) = cramer_line(&xs, &ys);
    assert!((fit.params()[0] - a).abs() < 1e-12);
    assert!((fit.params()[1] - b).abs() < 1e-12);
}

#[test]
fn local_refit_matches_cramer_on_modified_labels() {
    let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 2.0 + x + (4.0 * x).sin()).collect();
    let data = LabeledDataset::from_scalar(&xs, &ys).unwrap();
    let fit = engine::fit_base(&BaseModel::OlsLinear, &data).unwrap();
    let eps_hat: Vec<f64> = xs.iter().map(|x| 0.3 * x.cos()).collect();
    let corr = PointwiseCorrection::new(data.xs(), &eps_hat).unwrap();
    let nbhd = NeighborhoodSpec::interval(1.0, 0.5).unwrap();
    let res = engine::explain(&BaseModel::OlsLinear, &fit, &corr, &data, &[1.0], &nbhd).unwrap();
    let modified: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .zip(&eps_hat)
        .map(|((x, y), e)| if (x - 1.0).abs() <= 0.5 { y - e } else { *y })
        .collect();
    let (a, b) = cramer_line(&xs, &modified);
    assert!((res.theta_prime[0] - a).abs() < 1e-12);
    assert!((res.theta_prime[1] - b).abs() < 1e-12);
    let (a0, b0) = cramer_line(&xs, &ys);
    assert!((res.delta_theta[1] - (b - b0)).abs() < 1e-12);
    assert!((res.reflected_delta_theta[0] - (a0 - a)).abs() < 1e-12);
}

#[test]
fn zero_correction_is_a_fixed_point() {
    let xs = [0.0, 1.0, 2.0, 3.0];
    let ys = [0.1, 1.2, 1.9, 3.3];
    let data = LabeledDataset::from_scalar(&xs, &ys).unwrap();
    let fit = engine::fit_base(&BaseModel::OlsLinear, &data).unwrap();
    let res = engine::explain(&BaseModel::OlsLinear, &fit, &ZeroCorrection, &data, &[1.0], &NeighborhoodSpec::interval(1.0, 1.0).unwrap()).unwrap();
    assert_eq!(res.theta, res.theta_prime);
    assert_eq!(res.delta_f(&[7.0]).unwrap(), 0.0);
}

#[test]
fn velocity_matches_rk4() {
    let p = DragParams::default();
    for i in 1..=30 {
        let t = i as f64 * 0.1;
        let exact = drag::velocity(t, &p).unwrap();
        let rk = rk4_velocity(t, &p, 20_000);
        assert!(((exact - rk) / rk).abs() < 1e-8, "t={t}: {exact} vs {rk}");
    }
    let v1 = drag::velocity(1.0, &p).unwrap();
    assert!((v1 - 9.00).abs() < 0.01, "{v1}");
    let vt = (2.0 * p.mass * p.g / (p.rho * p.area * p.drag_coefficient)).sqrt();
    assert!((drag::terminal_velocity(&p).unwrap() - vt).abs() < 1e-12);
    assert!((vt - 18.651).abs() < 1e-3);
}

#[test]
fn gaussian_noise_scale() {
    let p = DragParams::default();
    for seed in 0..5 {
        let ds = drag::generate_drag_dataset(100, NoiseSpec::gaussian(1.0), &p, seed).unwrap();
        let noise: Vec<f64> = ds.data.ys().iter().zip(&ds.v_true).map(|(y, v)| y - v).collect();
        let mean = noise.iter().sum::<f64>() / 100.0;
        let sd = (noise.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
        assert!((sd - 1.0).abs() < 2.0 / 50f64.sqrt(), "seed {seed}: sd {sd}");
    }
}

#[test]
fn uniform_noise_is_bounded_and_times_are_shared() {
    let p = DragParams::default();
    let u = drag::generate_drag_dataset(100, NoiseSpec::uniform(3.0), &p, 4).unwrap();
    let g = drag::generate_drag_dataset(100, NoiseSpec::gaussian(3.0), &p, 4).unwrap();
    assert_eq!(u.data.xs(), g.data.xs());
    assert!(u.data.ys().iter().zip(&u.v_true).all(|(y, v)| (y - v).abs() <= 3.0));
    assert_eq!(u.data.xs().iter().filter(|x| x[0] <= 2.0).count(), 90);
}

#[test]
fn profit_examples() {
    assert_eq!(base::profit(2.0, 1.0, 1.0, 2.0), 1.0);
    assert_eq!(base::profit(2.0, 1.0, 1.0, 0.5), 0.0);
    assert_eq!(base::profit(2.0, 1.0, 0.0, 3.0), 0.0);
    let q = base::parametric_critical_fractile(2.0, 2.0, 1.0).unwrap();
    assert!((q - 0.25 * std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn empirical_fractile_of_exponential_sample() {
    // exponential with rate 2: F^{-1}(1/2) = ln 2 / 2
    let cfg = NewsvendorConfig { n_total: 40_000, ..Default::default() };
    let (_, q_hat) = newsvendor::generate_newsvendor_dataset(&cfg, &SeedTree::new(3)).unwrap();
    assert!((q_hat - std::f64::consts::LN_2 / 2.0).abs() < 0.02, "{q_hat}");
}

#[test]
fn inverse_ecdf_convention() {
    let s = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(base::empirical_quantile(&s, 0.5).unwrap(), 2.0);
    assert_eq!(base::empirical_quantile(&s, 0.51).unwrap(), 3.0);
    assert_eq!(base::empirical_quantile(&s, 1.0).unwrap(), 4.0);
    assert_eq!(base::empirical_quantile(&s, 0.1).unwrap(), 1.0);
}

#[test]
fn lambda_fit_recovers_exact_grid_value() {
    let grid = base::default_lambda_grid();
    let (p, c) = (2.0f64, 1.0f64);
    // success threshold on demand at order q*(lambda) is c/p * q*(lambda)
    let threshold = |l: f64| c / p * (p / c).ln() / (p * l);
    let k0 = 120;
    let lambda0 = grid[k0];
    // one demand between every pair of neighbouring thresholds, so only
    // lambda0 reproduces the labels exactly
    let demands: Vec<f64> = grid.windows(2).map(|w| (threshold(w[0]) * threshold(w[1])).sqrt()).collect();
    let targets: Vec<f64> = demands.iter().map(|&d| if d > threshold(lambda0) { 1.0 } else { 0.0 }).collect();
    let link = SuccessLink::new(p, c, 0.0, &demands).unwrap();
    let fit = base::fit_lambda(&link, &demands, &targets, &grid, None).unwrap();
    assert_eq!(fit.lambda_star, lambda0);
    assert_eq!(fit.objective.len(), grid.len());
    assert_eq!(fit.objective[k0], 0.0);
}

#[test]
fn truncated_targets_stay_in_unit_interval() {
    for s in [0.0, 1.0] {
        for e in [-3.0, -1.0, -0.999_999_9, -0.2, 0.0, 0.3, 0.999_999_9, 1.0, 2.5] {
            let t = s - truncate_correction(s, e);
            assert!((0.0..=1.0).contains(&t), "s={s} e={e} -> {t}");
        }
    }
}
