use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kvshape_cli::{parse_config, report, run, CliError, Command};

#[derive(Parser)]
#[command(name = "kvshape", version, about = "Inclusion reconstruction with the Kohn-Vogelius criterion")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to runs/<config hash>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Write synthetic measurements (theta, f, g) from the target shape.
    Synth(Common),
    /// Solve the Dirichlet state on the target and write boundary traces.
    Forward(Common),
    /// Run the verification battery.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Negate the first-order jumps; a negative control.
        #[arg(long)]
        debug_flip_jump_sign: bool,
    },
    /// Reconstruct the target from synthetic data.
    Reconstruct(Common),
    /// Hessian spectrum at the target over Fourier normal fields.
    Spectrum(Common),
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (cmd, common, flip) = match cli.command {
        Sub::Synth(c) => (Command::Synth, c, false),
        Sub::Forward(c) => (Command::Forward, c, false),
        Sub::Verify { common, debug_flip_jump_sign } => (Command::Verify, common, debug_flip_jump_sign),
        Sub::Reconstruct(c) => (Command::Reconstruct, c, false),
        Sub::Spectrum(c) => (Command::Spectrum, c, false),
    };
    let cfg = parse_config(&common.config)?;
    let dir = common.out.unwrap_or_else(|| cfg.output_dir());
    let outcome = run(cmd, &cfg, flip)?;
    report::write_all(&dir, &outcome.artifacts)?;
    println!("{}", outcome.summary);
    println!("wrote {} files to {}", outcome.artifacts.len(), dir.display());
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(outcome.failures))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
