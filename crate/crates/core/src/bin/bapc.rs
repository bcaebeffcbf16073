use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bapc::config::{self, Experiment, FileConfig, Overrides};
use bapc::output;

/// Explain residual correctors through base-model parameter shifts.
#[derive(Debug, Parser)]
#[command(name = "bapc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Root seed for every random substream.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML configuration file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Linear fit to a falling body with drag, MLP residual corrector.
    Drag {
        #[command(flatten)]
        common: Common,
        /// none, gaussian or uniform.
        #[arg(long)]
        noise: Option<String>,
        /// Noise scale, one of 1, 2, 3.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// `start:stop:step` or a comma list.
        #[arg(long)]
        radii: Option<String>,
        /// Permit sigma outside {1, 2, 3}.
        #[arg(long)]
        allow_extrapolation: bool,
    },
    /// Newsvendor success indicator, Monte Carlo cross-validated shift.
    Newsvendor {
        #[command(flatten)]
        common: Common,
        /// rf or mlp.
        #[arg(long)]
        corrector: Option<String>,
        /// Demand neighbourhood half-width.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Accuracy and fidelity criteria over a radius grid.
    CriteriaSweep {
        #[command(flatten)]
        common: Common,
        /// Single eta; all of 1, 0.75, 0.5, 0.3, 0.1 when omitted.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        radii: Option<String>,
        /// Restrict to one noise kind; all settings when omitted.
        #[arg(long)]
        noise: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        allow_extrapolation: bool,
    },
}

fn true_or_none(b: bool) -> Option<bool> {
    b.then_some(true)
}

fn split(command: Command) -> (Experiment, Common, Overrides) {
    match command {
        Command::Drag { common, noise, sigma, eta, radii, allow_extrapolation } => {
            let o = Overrides { noise, sigma, eta, radii, allow_extrapolation: true_or_none(allow_extrapolation), ..Default::default() };
            (Experiment::Drag, common, o)
        }
        Command::Newsvendor { common, corrector, delta, repeats } => {
            (Experiment::Newsvendor, common, Overrides { corrector, delta, repeats, ..Default::default() })
        }
        Command::CriteriaSweep { common, eta, radii, noise, sigma, allow_extrapolation } => {
            let o = Overrides { noise, sigma, eta, radii, allow_extrapolation: true_or_none(allow_extrapolation), ..Default::default() };
            (Experiment::CriteriaSweep, common, o)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let (experiment, common, mut overrides) = split(cli.command);
    overrides.seed = common.seed;
    overrides.out = common.out;
    overrides.sequential = true_or_none(common.sequential);
    let file = match common.config.as_deref().map(FileConfig::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let config = match config::resolve(experiment, file, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match output::run(&config) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
