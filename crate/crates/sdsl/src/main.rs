use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdsl::{run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "sdsl", version, about = "Linear waves on the expanding region of Schwarzschild-de Sitter")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the configuration's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Horizon radii, surface gravity, Kruskal exponents and their residuals.
    Geometry,
    /// Evolve Cauchy data outward, emit the trajectory, energies and extracted asymptotics.
    Forward,
    /// Construct the solution with given data at infinity on the initial hypersurface.
    Backward,
    /// Backward construction followed by forward extraction of the data.
    Roundtrip,
    /// Energy ledger and monotonicity verdicts along a forward trajectory.
    EnergyReport,
    /// Residual orders of the asymptotic solution and decay of the remainder.
    ResidualScan,
    /// Asymptotics and backward construction for a conformal metric model.
    Perturbed,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Geometry => Command::Geometry,
            Cmd::Forward => Command::Forward,
            Cmd::Backward => Command::Backward,
            Cmd::Roundtrip => Command::RoundTrip,
            Cmd::EnergyReport => Command::EnergyReport,
            Cmd::ResidualScan => Command::ResidualScan,
            Cmd::Perturbed => Command::Perturbed,
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".to_string()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    sdsl::parallel::init_thread_pool(cli.threads).map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    let command = Command::from(cli.command);
    let outcome = run(command, &cfg)?;
    outcome.outputs.write_all(&cli.out)?;
    for v in outcome.verdicts.iter().filter(|v| !v.pass) {
        eprintln!("verdict[{}]: {} failed: {}", command.name(), v.name, v.detail);
    }
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.module());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
