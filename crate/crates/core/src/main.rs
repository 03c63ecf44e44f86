use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use psh_lab::cli::{run, Command, CounterStage};
use psh_lab::config::Config;
use psh_lab::Error;

#[derive(Parser)]
#[command(name = "pshlab", version, about = "Reproducible experiments on psh regularization near Lipschitz boundaries")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the resolved config, CSV tables and field files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Stage {
    Build(Common),
    Verify(Common),
    Falsify(Common),
}

#[derive(Subcommand)]
enum Cmd {
    /// Envelope solver: 3×3 instance, idempotence, monotonicity, maximality.
    Envelope(Common),
    /// Decreasing regularization on a cap with all per-k checks.
    Regularize(Common),
    /// Continuity certificate at a point for a computed or stored field.
    LemmaCheck(Common),
    /// Log-potential domain: certificates and the falsification chain.
    Counterexample {
        #[command(subcommand)]
        stage: Stage,
    },
    /// Envelope of a continuous obstacle on the ball at several resolutions.
    Q2Demo(Common),
    /// Lipschitz bound of the cap height over a seeded graph suite.
    Lipschitz(Common),
    /// Solid-angle fraction of the shift cone against closed forms and Monte Carlo.
    ConeFraction(Common),
}

fn split(cmd: Cmd) -> (Command, Common) {
    match cmd {
        Cmd::Envelope(c) => (Command::Envelope, c),
        Cmd::Regularize(c) => (Command::Regularize, c),
        Cmd::LemmaCheck(c) => (Command::LemmaCheck, c),
        Cmd::Counterexample { stage: Stage::Build(c) } => (Command::Counterexample(CounterStage::Build), c),
        Cmd::Counterexample { stage: Stage::Verify(c) } => (Command::Counterexample(CounterStage::Verify), c),
        Cmd::Counterexample { stage: Stage::Falsify(c) } => (Command::Counterexample(CounterStage::Falsify), c),
        Cmd::Q2Demo(c) => (Command::Q2Demo, c),
        Cmd::Lipschitz(c) => (Command::Lipschitz, c),
        Cmd::ConeFraction(c) => (Command::ConeFraction, c),
    }
}

fn execute(command: Command, common: &Common) -> Result<bool, Error> {
    let mut cfg = match &common.config {
        Some(path) => Config::parse(&std::fs::read_to_string(path)?)?,
        None => Config::default(),
    };
    // reject unknown keys before touching the thread pool or the output directory
    cfg.check_keys(command.known_keys())?;
    if let Some(seed) = common.seed {
        cfg.set("seed", seed);
    }
    let report = match common.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            pool.install(|| run(command, &cfg))?
        }
        None => run(command, &cfg)?,
    };
    report.write(&common.out)?;
    print!("{}", report.summary());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = split(cli.command);
    match execute(command, &common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("pshlab {}: {e}", command.name());
            ExitCode::from(2)
        }
    }
}
