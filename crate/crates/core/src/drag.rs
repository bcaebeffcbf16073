//! Falling body with quadratic drag.
//!
//! `dv/dt = g - rho A C_d / (2 m) v^2` has the closed form
//! `v(t) = v_t tanh(t g / v_t + atanh(v_i / v_t))` with terminal velocity
//! `v_t = sqrt(2 m g / (rho A C_d))`. A straight line is fitted to noisy
//! samples of `v`, an MLP learns the residuals, and the line is refitted on
//! the early interval `[0, 2]` and the late interval `[2, 3]` separately.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::base::{BaseModel, BaseModelFit};
use crate::correctors::{Corrector, CorrectorSpec, MlpSpec, TrainingDiagnostics};
use crate::criteria::{self, CriteriaParams, CriteriaReport, SweepContext, SweepRow};
use crate::dataset::{LabeledDataset, NeighborhoodSpec};
use crate::engine::{self, BapcResult};
use crate::error::{BapcError, Result};
use crate::exec::{self, Execution};
use crate::rng::{self, SeedTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragParams {
    pub g: f64,
    pub mass: f64,
    pub rho: f64,
    pub area: f64,
    pub drag_coefficient: f64,
    pub v_initial: f64,
}

impl Default for DragParams {
    /// A sphere falling through air at sea level.
    fn default() -> Self {
        Self { g: 9.81, mass: 10.0, rho: 1.2, area: 1.0, drag_coefficient: 0.47, v_initial: 0.0 }
    }
}

impl DragParams {
    fn validate(&self) -> Result<()> {
        let positive = [self.g, self.mass, self.rho, self.area, self.drag_coefficient];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !(self.v_initial >= 0.0) {
            return Err(BapcError::Domain("drag parameters must be positive (v_initial >= 0)".into()));
        }
        Ok(())
    }
}

pub fn terminal_velocity(p: &DragParams) -> Result<f64> {
    p.validate()?;
    Ok((2.0 * p.mass * p.g / (p.rho * p.area * p.drag_coefficient)).sqrt())
}

pub fn velocity(t: f64, p: &DragParams) -> Result<f64> {
    let vt = terminal_velocity(p)?;
    if !(p.v_initial < vt) {
        return Err(BapcError::Domain(format!("initial velocity {} must be below terminal velocity {vt}", p.v_initial)));
    }
    if !(t >= 0.0) {
        return Err(BapcError::Domain(format!("time must be nonnegative, got {t}")));
    }
    Ok(vt * (t * p.g / vt + (p.v_initial / vt).atanh()).tanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Gaussian,
    Uniform,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = BapcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NoiseKind::None),
            "gaussian" => Ok(NoiseKind::Gaussian),
            "uniform" => Ok(NoiseKind::Uniform),
            other => Err(BapcError::Domain(format!("unknown noise kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec { kind: NoiseKind::None, sigma: 0.0 };

    pub fn gaussian(sigma: f64) -> Self {
        Self { kind: NoiseKind::Gaussian, sigma }
    }

    pub fn uniform(sigma: f64) -> Self {
        Self { kind: NoiseKind::Uniform, sigma }
    }

    /// Noise-free plus gaussian and uniform noise at sigma 1, 2, 3.
    pub fn standard_settings() -> Vec<NoiseSpec> {
        let mut v = vec![NoiseSpec::NONE];
        for kind in [NoiseKind::Gaussian, NoiseKind::Uniform] {
            for sigma in [1.0, 2.0, 3.0] {
                v.push(NoiseSpec { kind, sigma });
            }
        }
        v
    }

    pub fn label(&self) -> String {
        match self.kind {
            NoiseKind::None => "none".to_string(),
            k => format!("{}_sigma{}", k.name(), self.sigma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragDataset {
    pub data: LabeledDataset,
    /// Noise-free velocities at the sampled times.
    pub v_true: Vec<f64>,
    pub noise: NoiseSpec,
}

/// `n` time points, 90% uniform on `[0, 2]` and the rest uniform on
/// `[2, 3]`, labelled with `v(t) + sigma * Z`.
///
/// Times and noise come from separate substreams, so the same seed gives
/// the same times under every noise setting.
pub fn generate_drag_dataset(n: usize, noise: NoiseSpec, params: &DragParams, seed: u64) -> Result<DragDataset> {
    if n < 10 {
        return Err(BapcError::InvalidDataset(format!("need at least 10 time points, got {n}")));
    }
    if noise.kind != NoiseKind::None && !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
        return Err(BapcError::Domain(format!("noise sigma must be nonnegative, got {}", noise.sigma)));
    }
    let seeds = SeedTree::new(seed);
    let mut time_rng = seeds.stream(rng::TIME_POINTS);
    let early = n * 9 / 10;
    let times: Vec<f64> = (0..n)
        .map(|i| if i < early { 2.0 * time_rng.random::<f64>() } else { 2.0 + time_rng.random::<f64>() })
        .collect();
    let v_true = times.iter().map(|&t| velocity(t, params)).collect::<Result<Vec<_>>>()?;
    let mut noise_rng = seeds.stream(rng::NOISE);
    let labels = v_true
        .iter()
        .map(|&v| match noise.kind {
            NoiseKind::None => v,
            NoiseKind::Gaussian => v + noise.sigma * noise_rng.sample::<f64, _>(StandardNormal),
            NoiseKind::Uniform => v + noise.sigma * (2.0 * noise_rng.random::<f64>() - 1.0),
        })
        .collect::<Vec<_>>();
    Ok(DragDataset { data: LabeledDataset::from_scalar(&times, &labels)?, v_true, noise })
}

/// An interval `N(center, radius)` on the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub center: f64,
    pub radius: f64,
}

impl Interval {
    pub fn neighborhood(&self) -> Result<NeighborhoodSpec> {
        NeighborhoodSpec::interval(self.center, self.radius)
    }
}

/// `I1 = N(1, 1) = [0, 2]` and `I2 = N(2.5, 0.5) = [2, 3]`.
pub fn default_intervals() -> [Interval; 2] {
    [Interval { center: 1.0, radius: 1.0 }, Interval { center: 2.5, radius: 0.5 }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragOptions {
    pub n: usize,
    pub params: DragParams,
    pub mlp: MlpSpec,
    pub intervals: Vec<Interval>,
    pub curve_points: usize,
}

impl Default for DragOptions {
    fn default() -> Self {
        Self {
            n: 100,
            params: DragParams::default(),
            mlp: MlpSpec::default(),
            intervals: default_intervals().to_vec(),
            curve_points: 301,
        }
    }
}

/// One row of the curve table on a uniform grid over `[0, 3]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: f64,
    pub v_true: f64,
    pub f_theta: f64,
    pub f_corrected: f64,
    /// `(f_theta', f_theta_tilde)` per interval.
    pub per_interval: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct DragRun {
    pub dataset: DragDataset,
    pub fit: BaseModelFit,
    pub corrector: Corrector,
    pub diagnostics: TrainingDiagnostics,
    pub intervals: Vec<Interval>,
    pub results: Vec<BapcResult>,
    pub curves: Vec<CurveRow>,
}

impl DragRun {
    /// Slope of the reflected model minus the slope of `f_theta`, per interval.
    pub fn reflected_slope_shifts(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.reflected_delta_theta[1]).collect()
    }

    /// Index of the first interval containing `t`.
    pub fn interval_of(&self, t: f64) -> Option<usize> {
        self.intervals.iter().position(|iv| (t - iv.center).abs() <= iv.radius)
    }
}

/// Fit the line once, train the MLP once on all residuals, then refit per
/// interval.
pub fn run_drag(noise: NoiseSpec, seed: u64, opts: &DragOptions) -> Result<DragRun> {
    let dataset = generate_drag_dataset(opts.n, noise, &opts.params, seed)?;
    let data = &dataset.data;
    let model = BaseModel::OlsLinear;
    let fit = engine::fit_base(&model, data)?;
    let eps = engine::residuals(&fit, data)?;
    let mlp_seed = SeedTree::new(seed).derive_seed(rng::CORRECTOR_INIT, 0);
    let spec = CorrectorSpec::Mlp(MlpSpec { seed: mlp_seed, ..opts.mlp.clone() });
    let (corrector, diagnostics) = Corrector::train(&spec, &data.with_labels(eps)?, Execution::Sequential)?;
    let results = opts
        .intervals
        .iter()
        .map(|iv| engine::explain(&model, &fit, &corrector, data, &[iv.center], &iv.neighborhood()?))
        .collect::<Result<Vec<_>>>()?;
    let curves = curve_table(&opts.params, &fit, &corrector, &results, opts.curve_points)?;
    Ok(DragRun { dataset, fit, corrector, diagnostics, intervals: opts.intervals.clone(), results, curves })
}

fn curve_table(
    params: &DragParams,
    fit: &BaseModelFit,
    corrector: &Corrector,
    results: &[BapcResult],
    points: usize,
) -> Result<Vec<CurveRow>> {
    use crate::correctors::Correction;
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let t = 3.0 * i as f64 / (points - 1) as f64;
            let x = [t];
            let f_theta = fit.predict(&x)?;
            let per_interval = results
                .iter()
                .map(|r| Ok((r.fit_prime.predict(&x)?, r.reflected(&x)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(CurveRow { t, v_true: velocity(t, params)?, f_theta, f_corrected: f_theta + corrector.correct(&x), per_interval })
        })
        .collect()
}

/// Run every noise setting for one seed.
pub fn run_drag_scenarios(settings: &[NoiseSpec], seed: u64, opts: &DragOptions, exec: Execution) -> Result<Vec<DragRun>> {
    exec::map_slice(exec, settings, |&noise| run_drag(noise, seed, opts)).into_iter().collect()
}

/// Per-point criteria for the whole sample, each point judged against the
/// refit of the first interval containing it.
pub fn pointwise_criteria(run: &DragRun, params: CriteriaParams) -> Result<Vec<(usize, CriteriaReport)>> {
    let data = &run.dataset.data;
    let mut out = Vec::new();
    for (k, res) in run.results.iter().enumerate() {
        let pts: Vec<_> = (0..data.len())
            .filter(|&i| run.interval_of(data.x(i)[0]) == Some(k))
            .map(|i| (data.x(i).to_vec(), data.ys()[i]))
            .collect();
        if pts.is_empty() {
            continue;
        }
        out.push((k, criteria::estimate_deltas(&pts, &run.fit, &res.fit_prime, &run.corrector, params)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub noise: NoiseSpec,
    pub eta: f64,
    pub rows: Vec<SweepRow>,
}

/// Per-point reports for one (noise, eta) pair, keyed by interval index.
pub type PointwiseEntry = (NoiseSpec, f64, Vec<(usize, CriteriaReport)>);

#[derive(Debug, Clone)]
pub struct CriteriaSweep {
    pub runs: Vec<DragRun>,
    /// Per-point tables, one per (noise, eta).
    pub pointwise: Vec<PointwiseEntry>,
    pub sweeps: Vec<SweepTable>,
}

/// Radius sweep around the centre of the first interval. The criteria are
/// evaluated on the training points of that interval for every radius, so
/// only the refit changes between rows.
pub fn sweep_for_run(run: &DragRun, eta: f64, radii: &[f64], exec: Execution) -> Result<SweepTable> {
    let reference = *run.intervals.first().ok_or_else(|| BapcError::Domain("no intervals".into()))?;
    let eval_points = criteria::points_in(&run.dataset.data, &reference.neighborhood()?);
    let ctx = SweepContext {
        model: &BaseModel::OlsLinear,
        data: &run.dataset.data,
        fit: &run.fit,
        corrector: &run.corrector,
        eval_points: &eval_points,
    };
    let rows = criteria::radius_sweep(radii, &[reference.center], &ctx, CriteriaParams::symmetric(eta)?, exec)?;
    Ok(SweepTable { noise: run.dataset.noise, eta, rows })
}

/// Every noise setting crossed with every eta: per-point tables and radius
/// sweeps.
pub fn run_criteria_sweep(
    noises: &[NoiseSpec],
    etas: &[f64],
    radii: &[f64],
    seed: u64,
    opts: &DragOptions,
    exec: Execution,
) -> Result<CriteriaSweep> {
    let runs = run_drag_scenarios(noises, seed, opts, exec)?;
    let mut pointwise = Vec::new();
    let mut sweeps = Vec::new();
    for run in &runs {
        for &eta in etas {
            pointwise.push((run.dataset.noise, eta, pointwise_criteria(run, CriteriaParams::symmetric(eta)?)?));
            sweeps.push(sweep_for_run(run, eta, radii, exec)?);
        }
    }
    Ok(CriteriaSweep { runs, pointwise, sweeps })
}

/// The eta values of the appendix sweeps.
pub const ETA_GRID: [f64; 5] = [1.0, 0.75, 0.5, 0.3, 0.1];

/// `start:stop:step` inclusive, e.g. `0.1:2.0:0.1`.
pub fn parse_radii(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| BapcError::InvalidGrid(format!("bad number '{s}' in '{spec}'")));
    match parts.as_slice() {
        [a, b, c] => {
            let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
            if !(start > 0.0 && stop >= start && step > 0.0) {
                return Err(BapcError::InvalidGrid(format!("need 0 < start <= stop and step > 0 in '{spec}'")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|k| start + k as f64 * step).collect())
        }
        _ => spec.split(',').map(num).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_velocity_scaling() {
        let p = DragParams::default();
        let vt = terminal_velocity(&p).unwrap();
        assert!((vt - (196.2f64 / 0.564).sqrt()).abs() < 1e-12);
        assert!((vt - 18.651).abs() < 1e-3);
        let heavy = DragParams { mass: 40.0, ..p };
        assert!((terminal_velocity(&heavy).unwrap() - 2.0 * vt).abs() < 1e-12);
        let dense = DragParams { rho: 4.8, ..p };
        assert!((terminal_velocity(&dense).unwrap() - vt / 2.0).abs() < 1e-12);
    }

    #[test]
    fn velocity_limits() {
        let p = DragParams::default();
        assert_eq!(velocity(0.0, &p).unwrap(), 0.0);
        let vt = terminal_velocity(&p).unwrap();
        assert!((velocity(100.0, &p).unwrap() - vt).abs() < 1e-9);
        assert!(velocity(-1.0, &p).is_err());
        assert!(velocity(1.0, &DragParams { v_initial: 30.0, ..p }).is_err());
    }

    #[test]
    fn split_counts() {
        let d = generate_drag_dataset(100, NoiseSpec::NONE, &DragParams::default(), 1).unwrap();
        let ts: Vec<f64> = d.data.xs().iter().map(|x| x[0]).collect();
        assert_eq!(ts[..90].iter().filter(|&&t| (0.0..=2.0).contains(&t)).count(), 90);
        assert_eq!(ts[90..].iter().filter(|&&t| (2.0..=3.0).contains(&t)).count(), 10);
        assert_eq!(d.data.ys(), d.v_true.as_slice());
    }

    #[test]
    fn times_shared_across_noise() {
        let p = DragParams::default();
        let a = generate_drag_dataset(100, NoiseSpec::NONE, &p, 5).unwrap();
        let b = generate_drag_dataset(100, NoiseSpec::gaussian(2.0), &p, 5).unwrap();
        let c = generate_drag_dataset(100, NoiseSpec::uniform(3.0), &p, 5).unwrap();
        assert_eq!(a.data.xs(), b.data.xs());
        assert_eq!(a.data.xs(), c.data.xs());
        assert_ne!(a.data.ys(), b.data.ys());
    }

    #[test]
    fn uniform_noise_is_bounded() {
        let d = generate_drag_dataset(100, NoiseSpec::uniform(2.0), &DragParams::default(), 3).unwrap();
        assert!(d.data.ys().iter().zip(&d.v_true).all(|(y, v)| (y - v).abs() <= 2.0));
    }

    #[test]
    fn radii_parsing() {
        let r = parse_radii("0.1:2.0:0.1").unwrap();
        assert_eq!(r.len(), 20);
        assert!((r[19] - 2.0).abs() < 1e-12);
        assert_eq!(parse_radii("0.5,1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_radii("1:0.5:0.1").is_err());
        assert!(parse_radii("a:b").is_err());
    }
}
