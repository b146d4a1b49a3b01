use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qifs_cli::{run, CliError, OutputFormat, Overrides, ScenarioConfig, Task};

/// Thermodynamic quantities of quantum iterated function systems.
#[derive(Parser, Debug)]
#[command(name = "qifs-thermo", version)]
struct Cli {
    #[command(subcommand)]
    task: Command,

    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// table, json or csv.
    #[arg(long, global = true, default_value = "table")]
    out: String,

    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true)]
    max_iter: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Embedding kind: hom4, nonhom4, hom2, nonhom2, perron, classic.
    #[arg(long, global = true)]
    embed: Option<String>,

    /// Column-stochastic P, row-major, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    p: Option<String>,

    /// Column-stochastic Q, row-major, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    q: Option<String>,

    /// Potential matrix A, row-major, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Parse and check the model.
    Validate,
    /// Fixed point of the barycenter map.
    Fixpoint,
    /// Leading eigenpair of the Ruelle operator.
    Eigen,
    /// Entropy at the invariant state.
    Entropy,
    /// Pressure inequality report.
    Pressure,
    /// Classical Markov-chain pressure inequality.
    Classic,
    /// Holevo quantities of the induced ensemble.
    Holevo,
    /// Markov-chain embedding checks.
    MarkovCheck,
    /// Monte-Carlo barycenter and entropy estimates.
    Sample,
    /// Pressure gaps over random weight families.
    Sweep,
}

impl From<Command> for Task {
    fn from(c: Command) -> Task {
        match c {
            Command::Validate => Task::Validate,
            Command::Fixpoint => Task::Fixpoint,
            Command::Eigen => Task::Eigen,
            Command::Entropy => Task::Entropy,
            Command::Pressure => Task::Pressure,
            Command::Classic => Task::Classic,
            Command::Holevo => Task::Holevo,
            Command::MarkovCheck => Task::MarkovCheck,
            Command::Sample => Task::Sample,
            Command::Sweep => Task::Sweep,
        }
    }
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let out: OutputFormat = cli.out.parse()?;
    let cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let overrides = Overrides {
        tol: cli.tol,
        max_iter: cli.max_iter,
        seed: cli.seed,
        jobs: cli.jobs,
        embed: cli.embed,
        p: cli.p,
        q: cli.q,
        a: cli.a,
    };
    let report = run(cli.task.into(), cfg, &overrides)?;
    Ok(report.render(out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message.replace('\n', " "));
            ExitCode::from(e.code as u8)
        }
    }
}
