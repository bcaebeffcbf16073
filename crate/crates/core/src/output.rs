//! Tables and the summary document written by the command-line tool.
//!
//! CSV files have a header row, comma separators and LF line endings. Reals
//! are written in scientific notation with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{DragSettings, NewsvendorSettings, RunConfig, Settings, SweepSettings};
use crate::drag::{self, DragOptions, DragRun, PointwiseEntry, SweepTable};
use crate::engine::SIGN_CONVENTION;
use crate::exec::Execution;
use crate::newsvendor::{self, DeltaPoint, MonthRecord, NewsvendorBapc, ShiftSample, ShiftStats};
use crate::rng::{self, SeedTree};

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        f.write_all(self.render().as_bytes())?;
        f.flush()
    }
}

/// Training points first (with their noisy label), then the curve grid
/// (noisy label empty).
pub fn fits_table(run: &DragRun) -> crate::Result<Table> {
    let mut t = Table::new(&[
        "t", "v_true", "v_noisy_or_empty", "f_theta", "f_corrected",
        "f_theta_prime_I1", "f_tilde_I1", "f_theta_prime_I2", "f_tilde_I2",
    ]);
    let per_interval = |x: &[f64]| -> crate::Result<Vec<String>> {
        let mut cells = Vec::new();
        for k in 0..2 {
            match run.results.get(k) {
                Some(r) => {
                    cells.push(real(r.fit_prime.predict(x)?));
                    cells.push(real(r.reflected(x)?));
                }
                None => cells.extend([String::new(), String::new()]),
            }
        }
        Ok(cells)
    };
    let data = &run.dataset.data;
    for i in 0..data.len() {
        let x = data.x(i);
        let f = run.fit.predict(x)?;
        let mut row = vec![
            real(x[0]),
            real(run.dataset.v_true[i]),
            real(data.ys()[i]),
            real(f),
            real(f + crate::correctors::Correction::correct(&run.corrector, x)),
        ];
        row.extend(per_interval(x)?);
        t.push(row);
    }
    for c in &run.curves {
        let mut row = vec![real(c.t), real(c.v_true), String::new(), real(c.f_theta), real(c.f_corrected)];
        row.extend(per_interval(&[c.t])?);
        t.push(row);
    }
    Ok(t)
}

pub fn criteria_table(entries: &[PointwiseEntry]) -> Table {
    let mut t = Table::new(&[
        "noise", "sigma", "eta", "interval", "t", "y", "eps", "eps_hat", "delta_eps", "delta_f",
        "fidelity_gap", "c1_ok", "c2_ok",
    ]);
    for (noise, eta, reports) in entries {
        for (k, report) in reports {
            for r in &report.records {
                t.push(vec![
                    noise.kind.name().to_string(),
                    real(noise.sigma),
                    real(*eta),
                    format!("I{}", k + 1),
                    real(r.x[0]),
                    real(r.y),
                    real(r.eps),
                    real(r.eps_hat),
                    real(r.delta_eps),
                    real(r.delta_f),
                    real(r.fidelity_gap),
                    flag(r.c1_ok),
                    flag(r.c2_ok),
                ]);
            }
        }
    }
    t
}

pub fn sweep_table(tables: &[SweepTable]) -> Table {
    let mut t = Table::new(&["noise", "sigma", "eta", "radius", "delta1_hat", "delta2_hat", "n_points"]);
    for table in tables {
        for row in &table.rows {
            t.push(vec![
                table.noise.kind.name().to_string(),
                real(table.noise.sigma),
                real(table.eta),
                real(row.radius),
                real(row.delta1_hat),
                real(row.delta2_hat),
                row.n_points.to_string(),
            ]);
        }
    }
    t
}

pub fn months_table(records: &[MonthRecord], q_hat: f64) -> Table {
    let mut t = Table::new(&["index", "demand", "order", "profit", "success", "perturbed", "q_hat"]);
    for (i, r) in records.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            real(r.demand),
            real(r.order),
            real(r.profit),
            flag(r.success),
            flag(r.perturbed),
            real(q_hat),
        ]);
    }
    t
}

pub fn corrections_table(run: &NewsvendorBapc) -> Table {
    let mut t = Table::new(&["demand", "success", "perturbed", "s_hat", "eps_hat", "corrected_target", "s_hat_prime"]);
    for (c, s_prime) in run.corrections.iter().zip(&run.step3_values) {
        t.push(vec![
            real(c.demand),
            real(c.success),
            flag(c.perturbed),
            real(c.s_hat),
            real(c.eps_hat),
            real(c.corrected_target),
            real(*s_prime),
        ]);
    }
    t
}

pub fn shift_histogram_table(corrector: &str, delta: f64, samples: &[ShiftSample]) -> Table {
    let mut t = Table::new(&["repeat_index", "corrector", "delta", "delta_lambda", "lambda_star", "lambda_prime_star"]);
    for s in samples {
        t.push(vec![
            s.repeat.to_string(),
            corrector.to_string(),
            real(delta),
            real(s.delta_lambda),
            real(s.lambda_star),
            real(s.lambda_prime_star),
        ]);
    }
    t
}

pub fn delta_curve_table(corrector: &str, curve: &[DeltaPoint]) -> Table {
    let mut t = Table::new(&["corrector", "delta", "mean_delta_lambda", "std_delta_lambda", "std_error", "repeats"]);
    for p in curve {
        t.push(vec![
            corrector.to_string(),
            real(p.delta),
            real(p.stats.mean),
            real(p.stats.std),
            real(p.stats.std_error),
            p.stats.count.to_string(),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalSummary {
    pub center: f64,
    pub radius: f64,
    pub theta_prime: Vec<f64>,
    pub delta_theta: Vec<f64>,
    pub reflected_delta_theta: Vec<f64>,
    pub delta1_hat: Option<f64>,
    pub delta2_hat: Option<f64>,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectorSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DragSummary {
    pub noise: String,
    pub sigma: f64,
    pub eta: f64,
    pub theta: Vec<f64>,
    pub intervals: Vec<IntervalSummary>,
    pub corrector: CorrectorSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub noise: String,
    pub sigma: f64,
    pub eta: f64,
    pub delta1_hat: f64,
    pub delta2_hat_min: f64,
    pub delta2_hat_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewsvendorSummary {
    pub corrector: String,
    pub delta: f64,
    pub q_hat: f64,
    pub example_lambda_star: f64,
    pub example_lambda_prime_star: f64,
    pub example_corrector: CorrectorSummary,
    pub delta_lambda: ShiftStats,
    pub delta_star: f64,
    pub delta_curve: Vec<DeltaPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Results {
    Drag { scenarios: Vec<DragSummary>, sweeps: Vec<SweepSummary> },
    Newsvendor(NewsvendorSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub root: u64,
    pub substreams: Vec<&'static str>,
    pub derived: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub sign_convention: &'static str,
    pub seeds: Seeds,
    pub config: RunConfig,
    pub results: Results,
}

fn drag_summary(run: &DragRun, eta: f64) -> crate::Result<DragSummary> {
    let reports = drag::pointwise_criteria(run, crate::criteria::CriteriaParams::symmetric(eta)?)?;
    let intervals = run
        .results
        .iter()
        .zip(&run.intervals)
        .enumerate()
        .map(|(k, (r, iv))| {
            let report = reports.iter().find(|(j, _)| *j == k).map(|(_, rep)| rep);
            IntervalSummary {
                center: iv.center,
                radius: iv.radius,
                theta_prime: r.theta_prime.clone(),
                delta_theta: r.delta_theta.clone(),
                reflected_delta_theta: r.reflected_delta_theta.clone(),
                delta1_hat: report.map(|r| r.delta1_hat),
                delta2_hat: report.map(|r| r.delta2_hat),
                n_points: report.map_or(0, |r| r.records.len()),
            }
        })
        .collect();
    Ok(DragSummary {
        noise: run.dataset.noise.kind.name().to_string(),
        sigma: run.dataset.noise.sigma,
        eta,
        theta: run.fit.params().to_vec(),
        intervals,
        corrector: CorrectorSummary {
            converged: run.diagnostics.converged,
            iterations: run.diagnostics.iterations,
            final_loss: run.diagnostics.final_loss,
        },
    })
}

fn sweep_summary(t: &SweepTable) -> SweepSummary {
    let d2 = t.rows.iter().map(|r| r.delta2_hat);
    SweepSummary {
        noise: t.noise.kind.name().to_string(),
        sigma: t.noise.sigma,
        eta: t.eta,
        delta1_hat: t.rows.first().map_or(0.0, |r| r.delta1_hat),
        delta2_hat_min: d2.clone().fold(f64::INFINITY, f64::min),
        delta2_hat_max: d2.fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] crate::BapcError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

struct Emitter<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Emitter<'_> {
    fn table(&mut self, name: &str, t: &Table) -> Result<(), RunError> {
        let path = self.dir.join(name);
        t.write(&path).map_err(io_at(&path))?;
        self.written.push(path);
        Ok(())
    }

    fn summary(&mut self, s: &Summary) -> Result<(), RunError> {
        let path = self.dir.join("summary.json");
        let mut text = serde_json::to_string_pretty(s).expect("summary serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io_at(&path))?;
        self.written.push(path);
        Ok(())
    }
}

fn drag_options(n: usize) -> DragOptions {
    DragOptions { n, ..DragOptions::default() }
}

/// Run the configured experiment and write its files into `config.out_dir`.
/// Returns the paths written.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    let exec = if config.sequential { Execution::Sequential } else { Execution::Parallel };
    fs::create_dir_all(&config.out_dir).map_err(io_at(&config.out_dir))?;
    let mut out = Emitter { dir: &config.out_dir, written: Vec::new() };
    let seeds = SeedTree::new(config.seed);
    let mut derived = BTreeMap::new();
    let (substreams, results) = match &config.settings {
        Settings::Drag(s) => {
            derived.insert("corrector_init".to_string(), seeds.derive_seed(rng::CORRECTOR_INIT, 0));
            (vec![rng::TIME_POINTS, rng::NOISE, rng::CORRECTOR_INIT], run_drag(s, config.seed, exec, &mut out)?)
        }
        Settings::CriteriaSweep(s) => {
            derived.insert("corrector_init".to_string(), seeds.derive_seed(rng::CORRECTOR_INIT, 0));
            (vec![rng::TIME_POINTS, rng::NOISE, rng::CORRECTOR_INIT], run_sweep(s, config.seed, exec, &mut out)?)
        }
        Settings::Newsvendor(s) => {
            derived.insert("repeat_0".to_string(), seeds.child(rng::REPEAT, 0).root());
            (
                vec![rng::REPEAT, rng::DEMAND, rng::FOLD_SPLIT, rng::CORRECTOR_INIT, rng::BOOTSTRAP],
                run_newsvendor(s, exec, &mut out)?,
            )
        }
    };
    out.summary(&Summary {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment().name(),
        sign_convention: SIGN_CONVENTION,
        seeds: Seeds { root: config.seed, substreams, derived },
        config: config.clone(),
        results,
    })?;
    Ok(out.written)
}

fn run_drag(s: &DragSettings, seed: u64, exec: Execution, out: &mut Emitter) -> Result<Results, RunError> {
    let run = drag::run_drag(s.noise, seed, &drag_options(s.n))?;
    let params = crate::criteria::CriteriaParams::symmetric(s.eta)?;
    let pointwise = vec![(s.noise, s.eta, drag::pointwise_criteria(&run, params)?)];
    let sweep = drag::sweep_for_run(&run, s.eta, &s.radii, exec)?;
    out.table("fits.csv", &fits_table(&run)?)?;
    out.table("criteria.csv", &criteria_table(&pointwise))?;
    out.table("delta_sweep.csv", &sweep_table(std::slice::from_ref(&sweep)))?;
    Ok(Results::Drag { scenarios: vec![drag_summary(&run, s.eta)?], sweeps: vec![sweep_summary(&sweep)] })
}

fn run_sweep(s: &SweepSettings, seed: u64, exec: Execution, out: &mut Emitter) -> Result<Results, RunError> {
    let sweep = drag::run_criteria_sweep(&s.noises, &s.etas, &s.radii, seed, &DragOptions::default(), exec)?;
    out.table("criteria.csv", &criteria_table(&sweep.pointwise))?;
    out.table("delta_sweep.csv", &sweep_table(&sweep.sweeps))?;
    let mut scenarios = Vec::new();
    for run in &sweep.runs {
        for &eta in &s.etas {
            scenarios.push(drag_summary(run, eta)?);
        }
    }
    Ok(Results::Drag { scenarios, sweeps: sweep.sweeps.iter().map(sweep_summary).collect() })
}

fn run_newsvendor(s: &NewsvendorSettings, exec: Execution, out: &mut Emitter) -> Result<Results, RunError> {
    let cfg = &s.model;
    let name = s.corrector.short_name();
    let (example, records) = newsvendor::mc_repeat(cfg, s.corrector, cfg.delta, 0, exec)?;
    let q_hat = records.iter().find(|r| !r.perturbed).map_or(f64::NAN, |r| r.order);
    let samples = newsvendor::monte_carlo_cv(cfg, s.corrector, cfg.delta, exec)?;
    let (delta_star, curve) = newsvendor::optimize_delta(cfg, &cfg.delta_grid, s.corrector, exec)?;
    out.table("months.csv", &months_table(&records, q_hat))?;
    out.table("corrections.csv", &corrections_table(&example))?;
    out.table("shift_histogram.csv", &shift_histogram_table(name, cfg.delta, &samples))?;
    out.table("delta_curve.csv", &delta_curve_table(name, &curve))?;
    Ok(Results::Newsvendor(NewsvendorSummary {
        corrector: name.to_string(),
        delta: cfg.delta,
        q_hat,
        example_lambda_star: example.lambda_star,
        example_lambda_prime_star: example.lambda_prime_star,
        example_corrector: CorrectorSummary {
            converged: example.diagnostics.converged,
            iterations: example.diagnostics.iterations,
            final_loss: example.diagnostics.final_loss,
        },
        delta_lambda: newsvendor::shift_stats(&samples),
        delta_star,
        delta_curve: curve,
    }))
}
