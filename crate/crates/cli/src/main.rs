use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hstlink::Execution;
use hstlink_cli::{cmd_analyze, cmd_mc, cmd_tradeoff, CliError, ExperimentConfig, Mode};

/// Link-level analysis and simulation of pilot-aided MMSE estimation on a
/// staticized high-speed-train channel.
#[derive(Parser)]
#[command(name = "hstlink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical BER, MSE and spectral efficiency on the configured grid.
    Analyze(Common),
    /// Monte Carlo simulation compared against the analysis.
    Mc(Common),
    /// BER versus spectral-efficiency tradeoff curve.
    Tradeoff(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path (overrides `output` in the config; stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides `base_seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the config echo and progress output.
    #[arg(long)]
    quiet: bool,
    /// Worker threads: 0 = all cores, 1 = sequential.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn execute(mode: Mode, args: Common) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::parse("")?,
    };
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(CliError::Config {
                key: "mode".into(),
                reason: format!("config says `{}` but the subcommand is `{}`", m.as_str(), mode.as_str()),
            });
        }
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
        cfg.defaulted.remove("base_seed");
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
        cfg.defaulted.remove("output");
    }
    cfg.mode = Some(mode);
    cfg.defaulted.remove("mode");
    if !args.quiet {
        eprint!("{}", cfg.echo());
        eprintln!();
    }

    let exec = Execution::from_workers(args.workers);
    let table = match mode {
        Mode::Analyze => cmd_analyze(&cfg, exec)?,
        Mode::Mc => cmd_mc(&cfg, exec, !args.quiet)?,
        Mode::Tradeoff => cmd_tradeoff(&cfg, exec)?,
    };
    match &cfg.output {
        Some(p) => table.write_csv(BufWriter::new(File::create(p)?)),
        None => table.write_csv(io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Analyze(a) => (Mode::Analyze, a),
        Command::Mc(a) => (Mode::Mc, a),
        Command::Tradeoff(a) => (Mode::Tradeoff, a),
    };
    let level = if args.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
