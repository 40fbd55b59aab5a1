use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use value_probe::config::RunConfig;
use value_probe::figures::FigureKind;
use value_probe::gateway::Mode;
use value_probe::pipeline::{self, PipelineError};
use value_probe::prompt::StrategyKind;

#[derive(Parser)]
#[command(version, about = "Administer a values questionnaire to language models and analyze the answers")]
struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Administer the questionnaire with the configured provider
    Collect,
    /// Generate a dataset from the synthetic circumplex respondent
    Synth {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        strategy: Option<StrategyKind>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Build a structure report per transcript store
    Analyze {
        /// Stores to analyze; defaults to every store under the output root
        stores: Vec<PathBuf>,
        /// CSV (value,x,y) to align against instead of the ideal circumplex
        #[arg(long)]
        human_reference: Option<PathBuf>,
    },
    /// Render SVG figures from reports
    Figures {
        reports: Vec<PathBuf>,
        #[arg(long)]
        kind: Option<FigureKind>,
        /// Output file (with --kind) or directory
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Export CSV tables from reports
    Tables {
        reports: Vec<PathBuf>,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "batch" => Ok(Mode::Batch),
        "serial" => Ok(Mode::Serial),
        _ => Err(format!("unknown mode `{s}`")),
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    match cli.command {
        Command::Collect => {
            let o = pipeline::cmd_collect(&config)?;
            println!("{} ({} new sessions, {} excluded)", o.store.display(), o.new_sessions, o.exclusions.len());
        }
        Command::Synth { n, strategy, mode, temperature } => {
            config.n_sessions = n.unwrap_or(config.n_sessions);
            config.strategy = strategy.unwrap_or(config.strategy);
            config.mode = mode.unwrap_or(config.mode);
            config.temperature = temperature.unwrap_or(config.temperature);
            let o = pipeline::cmd_synth(&config)?;
            println!("{} ({} new sessions, {} excluded)", o.store.display(), o.new_sessions, o.exclusions.len());
        }
        Command::Analyze { stores, human_reference } => {
            if human_reference.is_some() {
                config.analysis.human_reference = human_reference;
            }
            let o = pipeline::cmd_analyze(&stores, &config)?;
            for p in &o.reports {
                println!("{}", p.display());
            }
            if let Some((store, e)) = o.failures.into_iter().next() {
                return Err(PipelineError::Analysis(format!("{}: {e}", store.display())));
            }
        }
        Command::Figures { reports, kind, output } => {
            for p in pipeline::cmd_figures(&reports, kind, output.as_deref(), &config)? {
                println!("{}", p.display());
            }
        }
        Command::Tables { reports, dir } => {
            for p in pipeline::cmd_tables(&reports, dir.as_deref(), &config)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
