use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cocycle_cli::{emit, run, CliError, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "cocycle", version, about = "Experiments on locally constant linear cocycles over shifts of finite type")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-scale, Monte Carlo and periodic Lyapunov exponents.
    Exponents(Common),
    /// Holonomy identities, Lipschitz bound and truncation checks.
    Holonomy(Common),
    /// Block membership decisions against exhaustive checking.
    Blocks(Common),
    /// Growth along shadowing periodic orbits.
    Shadow(Common),
    /// Recover a transfer map by holonomy propagation and peeling.
    Reconstruct(Common),
    /// Periodic exponents and distortion growth of a block-group cocycle.
    VerifyZimmer(Common),
    /// The two-dimensional unipotent coboundary example.
    ExampleUnipotent(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Exponents(c) => ("exponents", c),
            Command::Holonomy(c) => ("holonomy", c),
            Command::Blocks(c) => ("blocks", c),
            Command::Shadow(c) => ("shadow", c),
            Command::Reconstruct(c) => ("reconstruct", c),
            Command::VerifyZimmer(c) => ("verify-zimmer", c),
            Command::ExampleUnipotent(c) => ("example-unipotent", c),
        }
    }
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `experiment.budgets.words`.
    #[arg(long)]
    budget_words: Option<u64>,
    /// Overrides `experiment.budgets.samples`.
    #[arg(long)]
    budget_samples: Option<u64>,
}

fn execute(command: &Command) -> Result<bool, CliError> {
    let (name, args) = command.parts();
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    let kind = config.experiment.params.kind();
    if kind != name {
        return Err(CliError::KindMismatch { subcommand: name.into(), kind: kind.into() });
    }
    if let Some(seed) = args.seed {
        config.experiment.seed = seed;
    }
    if let Some(w) = args.budget_words {
        config.experiment.budgets.words = w;
    }
    if let Some(s) = args.budget_samples {
        config.experiment.budgets.samples = s;
    }
    let report = run(&config)?;
    let out = emit(&report, args.format)?;
    match &args.out {
        Some(path) => std::fs::write(path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{out}"),
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
