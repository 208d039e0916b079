use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seqcmc_bench::config::OutputFormat;
use seqcmc_bench::{emit_results, run_experiment, ConfigError, ScenarioConfig};

/// Exit code for a rejected config.
const EXIT_CONFIG: u8 = 2;
/// Exit code when more than a tenth of the runs degenerated.
const EXIT_DEGENERATE: u8 = 3;
const DEGENERATE_LIMIT: f64 = 0.1;

#[derive(Parser)]
#[command(name = "seqcmc", version, about = "Crude versus conditional Monte Carlo filtering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scalar hidden Markov models (linear, ARCH, stochastic volatility).
    Single(RunArgs),
    /// Manoeuvring target with a jump Markov coordinated-turn model.
    Jmss(RunArgs),
    /// Multi-target PHD filtering.
    Phd(RunArgs),
    /// Check a config file against the schema.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load(path: &Path) -> Result<ScenarioConfig, ExitCode> {
    ScenarioConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {}", ConfigError::Invalid(msg.to_string()));
    ExitCode::from(EXIT_CONFIG)
}

fn run(kind: &str, args: RunArgs) -> Result<ExitCode, ExitCode> {
    let mut cfg = load(&args.config)?;
    if cfg.scenario.kind() != kind {
        return Err(config_error(format!(
            "config describes a {} scenario, not {kind}",
            cfg.scenario.kind()
        )));
    }
    if let Some(seeds) = args.seeds {
        cfg.seeds = Some(seeds);
    }
    if let Some(f) = args.format {
        cfg.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    cfg.validate().map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    let out = match (args.out, &cfg.output.dir) {
        (Some(o), _) => o,
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => return Err(config_error("no output directory (use --out)")),
    };
    let result = run_experiment(&cfg).map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })?;
    let written = emit_results(&result, cfg.output.format, &out).map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })?;
    for p in &written {
        println!("{}", p.display());
    }
    let m = &result.metadata;
    if m.runs_degenerate > 0 {
        eprintln!("{} of {} runs degenerate and excluded", m.runs_degenerate, m.seeds.len());
    }
    if result.degenerate_fraction() > DEGENERATE_LIMIT {
        return Ok(ExitCode::from(EXIT_DEGENERATE));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Single(a) => run("single", a),
        Command::Jmss(a) => run("jmss", a),
        Command::Phd(a) => run("phd", a),
        Command::Validate { config } => load(&config).map(|cfg| {
            println!("{}: valid {} scenario", cfg.name, cfg.scenario.kind());
            ExitCode::SUCCESS
        }),
    };
    outcome.unwrap_or_else(|code| code)
}
