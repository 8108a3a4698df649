use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ionreg::config::{Experiment, Overrides, RunConfig};
use ionreg::run::run;
use ionreg::{CliError, EXIT_CONFIG};

/// Simulate, calibrate and benchmark a microwave-driven two-ion register.
#[derive(Parser)]
#[command(name = "ionreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rabi flop of one ion seen through global fluorescence.
    Rabi(RunArgs),
    /// Random π-pulse sequences probing the spectator ion.
    Crosstalk(RunArgs),
    /// Parity scan and phase-offset calibration.
    ParityScan(RunArgs),
    /// Cycle benchmarking of the dressed entangling gate.
    CycleBench(RunArgs),
    /// Composite fidelity over a grid of ion displacements.
    ZeemanSweep(RunArgs),
    /// Lower a circuit to native operations and minimize transports.
    Transpile {
        #[command(flatten)]
        run: RunArgs,
        /// Circuit text file, one gate per line.
        #[arg(long = "in", value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Check a configuration file without running anything.
    Validate {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, replacing `out_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    shots: Option<i64>,
    /// Use exact probabilities instead of sampled shots.
    #[arg(long)]
    exact: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            shots: self.shots,
            exact: self.exact,
            out_dir: self.out.clone(),
        }
    }
}

fn read_circuit(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn execute(experiment: Experiment, args: &RunArgs, input: Option<&Path>) -> Result<(), CliError> {
    let mut config = RunConfig::load(&args.config)?;
    config.apply(&args.overrides());
    config.validate()?;
    let circuit = match (experiment, input.or(config.transpile.circuit.as_deref())) {
        (Experiment::Transpile, Some(path)) => Some(read_circuit(path)?),
        _ => None,
    };
    let outputs = run(experiment, &config, circuit.as_deref())?;
    outputs.write_all(&config.out_dir)?;
    println!("{}", config.out_dir.display());
    Ok(())
}

fn validate(path: &Path) -> Result<bool, CliError> {
    let violations = match RunConfig::load(path) {
        Ok(config) => config.violations(),
        Err(e @ CliError::Read { .. }) => return Err(e),
        Err(e) => {
            eprintln!("{}", e.to_json());
            return Ok(false);
        }
    };
    let report = serde_json::json!({ "path": path, "valid": violations.is_empty(), "violations": violations });
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
    Ok(violations.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IONREG_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rabi(a) => execute(Experiment::Rabi, a, None),
        Command::Crosstalk(a) => execute(Experiment::Crosstalk, a, None),
        Command::ParityScan(a) => execute(Experiment::ParityScan, a, None),
        Command::CycleBench(a) => execute(Experiment::CycleBench, a, None),
        Command::ZeemanSweep(a) => execute(Experiment::ZeemanSweep, a, None),
        Command::Transpile { run, input } => execute(Experiment::Transpile, run, input.as_deref()),
        Command::Validate { config } => match validate(config) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_CONFIG as u8),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
