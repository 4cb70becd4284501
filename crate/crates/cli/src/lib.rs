//! Command-line front end for `conformal-core`: reads CSV or JSON input,
//! runs one of the conformal methods, and writes a JSON result document and
//! optionally an SVG plot.

pub mod config;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod output;
pub mod plot;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use config::{MethodName, Mode, RunArgs, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "conformal",
    version,
    about = "Conformal prediction regions for multivariate and functional regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMethod {
    Full,
    Split,
    Msplit,
    Jackplus,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multivariate responses from a CSV file
    Multi {
        #[arg(value_enum)]
        method: MethodName,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Functional responses from a JSON file
    Fd {
        #[arg(value_enum)]
        method: MethodName,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Leave-one-out coverage, size and timing over the training rows
    Evaluate {
        #[arg(value_enum)]
        mode: Mode,
        #[arg(value_enum)]
        method: EvalMethod,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Rerun the configuration echoed in a result document
    Replay {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        verbose: bool,
    },
    /// Render an SVG from an existing result document
    Plot {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

impl Command {
    pub fn verbose(&self) -> bool {
        match self {
            Command::Multi { args, .. }
            | Command::Fd { args, .. }
            | Command::Evaluate { args, .. } => args.verbose,
            Command::Replay { verbose, .. } => *verbose,
            Command::Plot { .. } => false,
        }
    }

    fn threads(&self) -> Option<usize> {
        match self {
            Command::Multi { args, .. }
            | Command::Fd { args, .. }
            | Command::Evaluate { args, .. } => args.threads,
            Command::Replay { threads, .. } => *threads,
            Command::Plot { .. } => None,
        }
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(f),
    }
}

fn log_seeds(cfg: &RunConfig) {
    if let Some(s) = cfg.seed {
        log::info!("split seed {s}");
    }
    if let Some(s) = cfg.seed_rand {
        log::info!("smoothing seed {s}");
    }
}

/// Executes a parsed command. Returns text for stdout.
pub fn dispatch(command: Command) -> Result<String, CliError> {
    let threads = command.threads();
    match command {
        Command::Multi { method, args } => run_one(Mode::Multi, method, args, threads),
        Command::Fd { method, args } => run_one(Mode::Fd, method, args, threads),
        Command::Evaluate { mode, method, args } => {
            if args.plot.is_some() {
                return Err(CliError::Usage("evaluate does not produce plots".into()));
            }
            let methods: Vec<MethodName> = match method {
                EvalMethod::Full => vec![MethodName::Full],
                EvalMethod::Split => vec![MethodName::Split],
                EvalMethod::Msplit => vec![MethodName::Msplit],
                EvalMethod::Jackplus => vec![MethodName::Jackplus],
                EvalMethod::All => {
                    let mut all = vec![MethodName::Split, MethodName::Msplit, MethodName::Jackplus];
                    if mode == Mode::Multi {
                        all.insert(0, MethodName::Full);
                    }
                    all
                }
            };
            let configs: Vec<RunConfig> = methods
                .iter()
                .map(|&m| {
                    let a = if method == EvalMethod::All {
                        args.restricted_to(mode, m)
                    } else {
                        args.clone()
                    };
                    a.resolve(mode, m)
                })
                .collect::<Result<_, _>>()?;
            let rows = with_threads(threads, || {
                configs
                    .into_iter()
                    .map(|cfg| {
                        log_seeds(&cfg);
                        let summary = evaluate::evaluate(&cfg)?;
                        Ok((cfg, summary))
                    })
                    .collect::<Result<Vec<_>, CliError>>()
            })?;
            output::write_json(&args.output, &evaluate::report(&rows))?;
            Ok(evaluate::table(&rows))
        }
        Command::Replay {
            from, output, plot, ..
        } => {
            let doc = output::read_json(&from)?;
            let cfg: RunConfig =
                serde_json::from_value(doc["config"].clone()).map_err(|e| CliError::Schema {
                    path: "config".into(),
                    msg: e.to_string(),
                })?;
            with_threads(threads, || run::execute(&cfg, &output, plot.as_deref()))?;
            Ok(format!("wrote {}\n", output.display()))
        }
        Command::Plot { result, output } => {
            let doc = output::read_json(&result)?;
            output::write_text(&output, &plot::render(&doc)?)?;
            Ok(format!("wrote {}\n", output.display()))
        }
    }
}

fn run_one(
    mode: Mode,
    method: MethodName,
    args: RunArgs,
    threads: Option<usize>,
) -> Result<String, CliError> {
    let cfg = args.resolve(mode, method)?;
    log_seeds(&cfg);
    with_threads(threads, || {
        run::execute(&cfg, &args.output, args.plot.as_deref())
    })?;
    Ok(format!("wrote {}\n", args.output.display()))
}
