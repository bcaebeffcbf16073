//! Synthetic newsvendor months and the success-indicator explanation.
//!
//! Demand is exponential with rate `price * lambda_true`. Half of the
//! months order the empirical critical fractile, the other half order it
//! plus a fixed perturbation. A month is successful when its profit is
//! strictly positive. The link model is fitted to the success labels, a
//! corrector learns the (logit-transformed) residuals on one fold, and the
//! link is refitted on the corrected labels of the other fold. The shift
//! `lambda' - lambda` is the explanation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::base::{self, empirical_quantile, LambdaFit, SuccessLink};
use crate::correctors::{
    logit, Correction, CorrectorSpec, ForestSpec, LogitWrapped, MlpSpec, TrainingDiagnostics,
};
use crate::dataset::LabeledDataset;
use crate::error::{BapcError, Result};
use crate::exec::{self, Execution};
use crate::rng::{self, SeedTree};

pub use crate::base::profit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorKind {
    RandomForest,
    Mlp,
}

impl CorrectorKind {
    pub fn short_name(self) -> &'static str {
        match self {
            CorrectorKind::RandomForest => "rf",
            CorrectorKind::Mlp => "mlp",
        }
    }

    pub fn default_spec(self) -> CorrectorSpec {
        match self {
            CorrectorKind::RandomForest => CorrectorSpec::RandomForest(ForestSpec::default()),
            CorrectorKind::Mlp => CorrectorSpec::Mlp(MlpSpec::default()),
        }
    }
}

impl std::str::FromStr for CorrectorKind {
    type Err = BapcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rf" | "random_forest" => Ok(CorrectorKind::RandomForest),
            "mlp" | "nnet" => Ok(CorrectorKind::Mlp),
            other => Err(BapcError::Domain(format!("unknown corrector '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsvendorConfig {
    pub price: f64,
    pub cost: f64,
    pub lambda_true: f64,
    /// Total number of months (both folds together); must be divisible by 4
    /// so each fold holds equal perturbed and unperturbed counts.
    pub n_total: usize,
    pub perturbation: f64,
    pub delta: f64,
    pub delta_grid: Vec<f64>,
    pub mc_repeats: usize,
    pub lambda_grid: Vec<f64>,
    pub smoothing_span: Option<f64>,
    pub logit_clamp: f64,
    pub seed: u64,
}

impl Default for NewsvendorConfig {
    fn default() -> Self {
        Self {
            price: 2.0,
            cost: 1.0,
            lambda_true: 1.0,
            n_total: 200,
            perturbation: 1.0,
            delta: 0.1,
            delta_grid: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4],
            mc_repeats: 100,
            lambda_grid: base::default_lambda_grid(),
            smoothing_span: Some(0.25),
            logit_clamp: logit::DEFAULT_CLAMP,
            seed: 0,
        }
    }
}

impl NewsvendorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.price > self.cost) {
            return Err(BapcError::Domain(format!("need price > cost > 0, got {} and {}", self.price, self.cost)));
        }
        if !(self.lambda_true > 0.0) {
            return Err(BapcError::Domain("lambda_true must be positive".into()));
        }
        if self.n_total < 4 || !self.n_total.is_multiple_of(4) {
            return Err(BapcError::InvalidDataset(format!("n_total must be a positive multiple of 4, got {}", self.n_total)));
        }
        if !(self.delta >= 0.0) || self.delta_grid.iter().any(|d| !(*d >= 0.0)) {
            return Err(BapcError::Domain("delta values must be nonnegative".into()));
        }
        if self.mc_repeats == 0 {
            return Err(BapcError::Domain("mc_repeats must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthRecord {
    pub demand: f64,
    pub order: f64,
    pub profit: f64,
    pub success: bool,
    pub perturbed: bool,
}

impl MonthRecord {
    pub fn success_value(&self) -> f64 {
        if self.success { 1.0 } else { 0.0 }
    }
}

/// Exponential draws by inverse transform of seeded uniforms.
pub fn sample_exponential<R: Rng>(rng: &mut R, rate: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln() / rate).collect()
}

/// `n_total` months; every odd index is perturbed.
pub fn generate_newsvendor_dataset(config: &NewsvendorConfig, seeds: &SeedTree) -> Result<(Vec<MonthRecord>, f64)> {
    config.validate()?;
    let mut rng = seeds.stream(rng::DEMAND);
    let demand = sample_exponential(&mut rng, config.price * config.lambda_true, config.n_total);
    let sorted = base::quantile::sorted(&demand)?;
    let q_hat = empirical_quantile(&sorted, 1.0 - config.cost / config.price)?;
    let records = demand
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let perturbed = i % 2 == 1;
            let order = if perturbed { q_hat + config.perturbation } else { q_hat };
            let profit = profit(config.price, config.cost, order, d);
            MonthRecord { demand: d, order, profit, success: profit > 0.0, perturbed }
        })
        .collect();
    Ok((records, q_hat))
}

/// Random two-fold split with equal perturbed counts in each fold.
pub fn stratified_split<R: Rng>(records: &[MonthRecord], rng: &mut R) -> Result<(Vec<MonthRecord>, Vec<MonthRecord>)> {
    let mut perturbed: Vec<usize> = (0..records.len()).filter(|&i| records[i].perturbed).collect();
    let mut plain: Vec<usize> = (0..records.len()).filter(|&i| !records[i].perturbed).collect();
    if !perturbed.len().is_multiple_of(2) || !plain.len().is_multiple_of(2) {
        return Err(BapcError::InvalidDataset("strata must have even sizes".into()));
    }
    perturbed.shuffle(rng);
    plain.shuffle(rng);
    let (hp, hu) = (perturbed.len() / 2, plain.len() / 2);
    let mut train: Vec<usize> = perturbed[..hp].iter().chain(&plain[..hu]).copied().collect();
    let mut test: Vec<usize> = perturbed[hp..].iter().chain(&plain[hu..]).copied().collect();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train.iter().map(|&i| records[i]).collect(), test.iter().map(|&i| records[i]).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRow {
    pub demand: f64,
    pub success: f64,
    pub perturbed: bool,
    pub s_hat: f64,
    pub eps_hat: f64,
    pub corrected_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewsvendorBapc {
    pub lambda_star: f64,
    pub lambda_prime_star: f64,
    /// `lambda' - lambda`.
    pub delta_lambda: f64,
    pub step1: LambdaFit,
    pub step3: LambdaFit,
    pub corrections: Vec<CorrectionRow>,
    /// Link values on the evaluation fold at `lambda'`.
    pub step3_values: Vec<f64>,
    pub diagnostics: TrainingDiagnostics,
    /// All training targets were identical.
    pub degenerate: bool,
}

fn demands(records: &[MonthRecord]) -> Vec<f64> {
    records.iter().map(|r| r.demand).collect()
}

fn successes(records: &[MonthRecord]) -> Vec<f64> {
    records.iter().map(MonthRecord::success_value).collect()
}

/// Step 1 on the training fold, the corrector trained on the training
/// residuals, Step 3 on the corrected labels of the evaluation fold.
pub fn run_newsvendor_bapc(
    train: &[MonthRecord],
    test: &[MonthRecord],
    spec: &CorrectorSpec,
    config: &NewsvendorConfig,
    delta: f64,
    exec: Execution,
) -> Result<NewsvendorBapc> {
    let trained = |xi: &LabeledDataset| LogitWrapped::train(spec, xi, config.logit_clamp, exec);
    run_with(train, test, config, delta, |xi| {
        let (c, d) = trained(xi)?;
        Ok((Box::new(c) as Box<dyn Correction>, d))
    })
}

/// Same as [`run_newsvendor_bapc`] with a caller-provided corrector factory
/// that receives the raw residuals of the training fold.
pub fn run_with<F>(
    train: &[MonthRecord],
    test: &[MonthRecord],
    config: &NewsvendorConfig,
    delta: f64,
    make_corrector: F,
) -> Result<NewsvendorBapc>
where
    F: FnOnce(&LabeledDataset) -> Result<(Box<dyn Correction>, TrainingDiagnostics)>,
{
    if train.is_empty() || test.is_empty() {
        return Err(BapcError::EmptySample);
    }
    let train_d = demands(train);
    let train_s = successes(train);
    let degenerate = train_s.iter().all(|&s| s == train_s[0]);
    if degenerate {
        log::warn!("all training success labels are identical; lambda fit is degenerate");
    }
    let train_link = SuccessLink::new(config.price, config.cost, delta, &train_d)?;
    let step1 = base::fit_lambda(&train_link, &train_d, &train_s, &config.lambda_grid, config.smoothing_span)?;
    let s_hat_train = train_link.prepared(&train_d)?.values(step1.lambda_star)?;
    let eps: Vec<f64> = train_s.iter().zip(&s_hat_train).map(|(s, h)| s - h).collect();
    let xi = LabeledDataset::from_scalar(&train_d, &eps)?;
    let (corrector, diagnostics) = make_corrector(&xi)?;

    let test_d = demands(test);
    let test_link = SuccessLink::new(config.price, config.cost, delta, &test_d)?;
    let s_hat_test = test_link.prepared(&test_d)?.values(step1.lambda_star)?;
    let corrections: Vec<CorrectionRow> = test
        .iter()
        .zip(&s_hat_test)
        .map(|(r, &s_hat)| {
            let s = r.success_value();
            let eps_hat = logit::truncate_correction(s, corrector.correct(&[r.demand]));
            CorrectionRow { demand: r.demand, success: s, perturbed: r.perturbed, s_hat, eps_hat, corrected_target: s - eps_hat }
        })
        .collect();
    let targets: Vec<f64> = corrections.iter().map(|c| c.corrected_target).collect();
    let step3 = base::fit_lambda(&test_link, &test_d, &targets, &config.lambda_grid, config.smoothing_span)?;
    let step3_values = test_link.prepared(&test_d)?.values(step3.lambda_star)?;
    Ok(NewsvendorBapc {
        lambda_star: step1.lambda_star,
        lambda_prime_star: step3.lambda_star,
        delta_lambda: step3.lambda_star - step1.lambda_star,
        step1,
        step3,
        corrections,
        step3_values,
        diagnostics,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSample {
    pub repeat: usize,
    pub lambda_star: f64,
    pub lambda_prime_star: f64,
    pub delta_lambda: f64,
}

/// One stratified Monte Carlo cross-validation repeat.
pub fn mc_repeat(config: &NewsvendorConfig, kind: CorrectorKind, delta: f64, repeat: usize, exec: Execution) -> Result<(NewsvendorBapc, Vec<MonthRecord>)> {
    let seeds = SeedTree::new(config.seed).child(rng::REPEAT, repeat as u64);
    let (records, _) = generate_newsvendor_dataset(config, &seeds)?;
    let (train, test) = stratified_split(&records, &mut seeds.stream(rng::FOLD_SPLIT))?;
    let spec = kind.default_spec().with_seed(seeds.derive_seed(rng::CORRECTOR_INIT, 0));
    let out = run_newsvendor_bapc(&train, &test, &spec, config, delta, exec)?;
    Ok((out, records))
}

/// `mc_repeats` independent repeats; each draws a fresh dataset of
/// `n_total` months and a fresh stratified split.
pub fn monte_carlo_cv(config: &NewsvendorConfig, kind: CorrectorKind, delta: f64, exec: Execution) -> Result<Vec<ShiftSample>> {
    config.validate()?;
    exec::map_range(exec, config.mc_repeats, |r| {
        // repeats already run in parallel, so each one trains sequentially
        let (out, _) = mc_repeat(config, kind, delta, r, Execution::Sequential)?;
        Ok(ShiftSample {
            repeat: r,
            lambda_star: out.lambda_star,
            lambda_prime_star: out.lambda_prime_star,
            delta_lambda: out.delta_lambda,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftStats {
    pub mean: f64,
    pub std: f64,
    pub std_error: f64,
    pub count: usize,
}

/// Mean, sample standard deviation and standard error of the mean.
pub fn shift_stats(samples: &[ShiftSample]) -> ShiftStats {
    let n = samples.len();
    let mean = samples.iter().map(|s| s.delta_lambda).sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples.iter().map(|s| (s.delta_lambda - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let std = var.sqrt();
    ShiftStats { mean, std, std_error: std / (n as f64).sqrt(), count: n }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub delta: f64,
    pub stats: ShiftStats,
}

/// Run the cross-validation for every `delta` and pick the one with the
/// smallest standard deviation of the shift (ties to the smaller delta).
/// Every delta reuses the same repeat seeds.
pub fn optimize_delta(config: &NewsvendorConfig, grid: &[f64], kind: CorrectorKind, exec: Execution) -> Result<(f64, Vec<DeltaPoint>)> {
    if grid.is_empty() {
        return Err(BapcError::InvalidGrid("delta grid is empty".into()));
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &delta in grid {
        let samples = monte_carlo_cv(config, kind, delta, exec)?;
        curve.push(DeltaPoint { delta, stats: shift_stats(&samples) });
    }
    let best = curve.iter().fold(&curve[0], |b, p| if p.stats.std < b.stats.std { p } else { b });
    Ok((best.delta, curve))
}
