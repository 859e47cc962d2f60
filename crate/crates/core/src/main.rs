use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tai_core::scenario::{self, ScenarioConfig};
use tai_core::timeline::FitSettings;
use tai_core::Error;

#[derive(Parser)]
#[command(name = "tai", version, about = "Transition paths under uncertain TAI arrival")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write spine.csv, branches.csv and summary.csv.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to report.output_dir, then the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve each scenario at each of its report.lambdas and write table1.csv.
    Table {
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a negative beta-binomial timeline to cumulative-probability anchors.
    FitTimeline {
        #[arg(long)]
        anchors: PathBuf,
        /// Distribution file to write; the fit report goes next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_n: u32,
        #[arg(long, default_value_t = 3)]
        max_range_len: u32,
        #[arg(long, default_value_t = 60)]
        horizon_years: u32,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Parse { .. } => 2,
        Error::NonConvergence { .. } | Error::Infeasible(_) => 3,
        Error::Io { .. } => 4,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("TAI_SOLVER_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| {
        Error::Config(format!(
            "TAI_SOLVER_THREADS must be a non-negative integer, got '{value}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::Solve { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let dir = scenario::output_dir(&cfg, out.as_deref());
            let o = scenario::run_solve(&cfg, &dir)?;
            if let Some(r) = o.table.first() {
                eprintln!(
                    "{} lambda={}: year-1 rate_1y {:.4}, rate_30y {:.4}, savings {:.4} ({} iterations)",
                    o.source_label, o.params.lambda, r.rate_1y, r.rate_30y, r.savings, o.spine.iterations
                );
            }
        }
        Command::Table { config, out } => {
            let cfgs = config.iter().map(ScenarioConfig::load).collect::<Result<Vec<_>, _>>()?;
            let dir = scenario::output_dir(&cfgs[0], out.as_deref());
            let outputs = scenario::run_table(&cfgs, &dir)?;
            eprintln!("wrote {} rows to {}", outputs.len(), dir.join("table1.csv").display());
        }
        Command::FitTimeline {
            anchors,
            out,
            max_n,
            max_range_len,
            horizon_years,
        } => {
            let settings = FitSettings {
                max_n,
                max_range_len,
                horizon_years,
                ..FitSettings::default()
            };
            let report = scenario::run_fit(&anchors, &settings, &out)?;
            eprintln!(
                "fitted n={:?} a={:.6} b={:.6} loss={:.3e}",
                report.spec.n_support, report.spec.a, report.spec.b, report.loss
            );
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
