use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spinbath_cli::{config, CliError};

/// Run a spin-bath decoherence experiment from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "spinbath", version)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Override a config field, e.g. `--set bath.n_spins=24`. Repeatable;
    /// applied in order.
    #[arg(long = "set", value_name = "DOTPATH=VALUE")]
    set: Vec<String>,

    /// Run directory. Defaults to the config's `output`, then
    /// `runs/<experiment>`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads. Results do not depend on this.
    #[arg(long, env = "SPINBATH_THREADS")]
    threads: Option<usize>,

    /// Check the config, print every violation and exit.
    #[arg(long)]
    validate_only: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(args: Args) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut overrides = args.set;
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = config::parse(&text, &overrides)?;

    let violations = config::validate(&cfg);
    if args.validate_only {
        if violations.is_empty() {
            println!("config ok");
            return Ok(());
        }
        return Err(CliError::Invalid(violations));
    }
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations));
    }

    let out = args
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.name()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let manifest = pool.install(|| spinbath_cli::run(&cfg, &out))?;
    println!(
        "{} run complete: {} files in {}",
        manifest.experiment,
        manifest.artifacts.len(),
        out.display()
    );
    Ok(())
}
