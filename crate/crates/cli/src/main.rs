use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsbm::harness::{self, ExperimentConfig, Mode};
use gsbm::GsbmError;

#[derive(Parser)]
#[command(name = "gsbm", version, about = "Geometric SBM simulator and exact-recovery toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the information metric and related quantities as one CSV row.
    Metric(Common),
    /// Sample one instance and write it in the graph file format.
    Sample(Common),
    /// Run two-phase recovery on the graph file named in the config.
    Recover(Common),
    /// Seeded trials over every n; one CSV row per trial, resumable.
    Sweep(Common),
    /// Genie likelihood ratio per vertex of one sample.
    Genie(Common),
    /// Flip-bad vertex counts per (n, trial).
    Flipbad(Common),
    /// Block and vertex visibility connectivity per trial.
    Connectivity(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Command::Metric(c) => (Mode::Metric, c),
            Command::Sample(c) => (Mode::Sample, c),
            Command::Recover(c) => (Mode::Recover, c),
            Command::Sweep(c) => (Mode::Sweep, c),
            Command::Genie(c) => (Mode::Genie, c),
            Command::Flipbad(c) => (Mode::Flipbad, c),
            Command::Connectivity(c) => (Mode::Connectivity, c),
        }
    }
}

fn exit_code(err: &GsbmError) -> u8 {
    match err {
        GsbmError::Config(_) => 2,
        GsbmError::Io(_) | GsbmError::Csv(_) | GsbmError::GraphFormat { .. } => 3,
        _ => 1,
    }
}

fn load(mode: Mode, args: &Common) -> Result<ExperimentConfig, GsbmError> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = ExperimentConfig::parse(&text)?;
    if config.mode != mode {
        return Err(GsbmError::Config(vec![gsbm::ConfigIssue {
            line: None,
            message: format!(
                "config mode `{}` does not match subcommand `{}`",
                config.mode.as_str(),
                mode.as_str()
            ),
        }]));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(GsbmError::Config(vec![gsbm::ConfigIssue {
                line: None,
                message: "constraint violated: trials >= 1".into(),
            }]));
        }
        config.trials = trials;
    }
    if args.out.is_some() {
        config.output = args.out.clone();
    }
    Ok(config)
}

fn sink(config: &ExperimentConfig) -> Result<Box<dyn Write>, GsbmError> {
    Ok(match &config.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(mode: Mode, config: &ExperimentConfig) -> Result<(), GsbmError> {
    match mode {
        Mode::Metric => {
            harness::run_metric(config, sink(config)?)?;
        }
        Mode::Sample => {
            harness::run_sample(config, sink(config)?)?;
        }
        Mode::Recover => {
            let summary = harness::run_recover(config, sink(config)?)?;
            for v in &summary.validation.violations {
                eprintln!("warning: {v}");
            }
            eprintln!("{}", summary.csv_row());
        }
        Mode::Sweep => match &config.output {
            Some(path) => {
                harness::run_sweep(config, Some(path))?;
            }
            None => {
                let rows = harness::run_sweep(config, None)?;
                harness::write_trials(&rows, io::stdout().lock())?;
            }
        },
        Mode::Genie => harness::run_genie(config, sink(config)?)?,
        Mode::Flipbad => {
            harness::run_flipbad(config, sink(config)?)?;
        }
        Mode::Connectivity => {
            harness::run_connectivity(config, sink(config)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let (mode, args) = Cli::parse().command.split();
    let result = load(mode, &args).and_then(|config| {
        if matches!(mode, Mode::Sweep | Mode::Recover) {
            let profile = config.profile()?;
            let params = config.block_params(config.d, config.lambda, profile.r());
            if let (Mode::Sweep, Ok(p)) = (mode, params) {
                for v in &p.report.violations {
                    eprintln!("warning: {v}");
                }
            }
        }
        run(mode, &config)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
