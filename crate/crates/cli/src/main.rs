use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdlps_cli::config::{ExperimentConfig, LoadedConfig, Mode};
use sdlps_cli::validate::validate_path;
use sdlps_cli::{run, write_artifacts, CliError, Overrides};
use sdlps_core::control::RoundingRule;

const THREADS_ENV: &str = "SDLPS_THREADS";

#[derive(Parser)]
#[command(name = "sdlps", version, about = "Concurrency control experiments for limited processor sharing queues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel replications (default: $SDLPS_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate mean headcount for each static level.
    ApproxStatic(RunArgs),
    /// Simulate every static level next to its approximation.
    SweepStatic(RunArgs),
    /// Solve for the dynamic concurrency policy and write it as a policy file.
    SolveDynamic(RunArgs),
    /// Simulate a static level or a solved policy file.
    SimulatePolicy(RunArgs),
    /// Solve and simulate the six (lambda, c_s^2) cells of the H* benchmark.
    #[command(name = "reproduce-table1")]
    ReproduceTable1(Table1Args),
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct Table1Args {
    /// Optional config; the built-in cells are used without one.
    config: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Solver tolerance on the average cost.
    #[arg(long)]
    eps: Option<f64>,
    /// Simulation horizon in events, warmup included.
    #[arg(long)]
    events: Option<u64>,
    /// Directory for all artifacts; without it the main artifact goes to stdout.
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
    /// Rounding of k(w) to an integer level: `up` or `nearest-half-up`.
    #[arg(long, value_parser = parse_rounding)]
    rounding: Option<RoundingRule>,
}

fn parse_rounding(s: &str) -> Result<RoundingRule, String> {
    match s {
        "up" => Ok(RoundingRule::Up),
        "nearest-half-up" => Ok(RoundingRule::NearestHalfUp),
        _ => Err(format!("unknown rounding `{s}` (expected `up` or `nearest-half-up`)")),
    }
}

fn init_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{THREADS_ENV}=`{v}` is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn execute(mode: Mode, loaded: LoadedConfig, common: CommonArgs) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: common.seed,
        eps: common.eps,
        events: common.events,
        rounding: common.rounding,
    };
    let dir = common
        .out_dir
        .or_else(|| loaded.config.output.dir.as_ref().map(|d| loaded.base_dir.join(d)));
    let artifacts = run(mode, &loaded, &overrides)?;
    write_artifacts(&artifacts, dir.as_deref())
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    let (mode, args) = match cmd {
        Command::Validate { config } => {
            let report = validate_path(&config);
            print!("{}", report.render());
            return match report.exit_code() {
                0 => Ok(()),
                2 => Err(CliError::Config(format!("{} failed validation", config.display()))),
                _ => Err(CliError::Domain(format!("{} failed validation", config.display()))),
            };
        }
        Command::ReproduceTable1(a) => {
            let loaded = match a.config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => LoadedConfig {
                    config: ExperimentConfig::default(),
                    base_dir: PathBuf::from("."),
                },
            };
            return execute(Mode::ReproduceTable1, loaded, a.common);
        }
        Command::ApproxStatic(a) => (Mode::ApproxStatic, a),
        Command::SweepStatic(a) => (Mode::SweepStatic, a),
        Command::SolveDynamic(a) => (Mode::SolveDynamic, a),
        Command::SimulatePolicy(a) => (Mode::SimulatePolicy, a),
    };
    let loaded = ExperimentConfig::load(&args.config)?;
    execute(mode, loaded, args.common)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = init_threads(cli.threads).and_then(|_| dispatch(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdlps: {e}");
            e.to_exit()
        }
    }
}
