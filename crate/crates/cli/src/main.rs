//! `fractal-renorm`: build structures, solve for eigenforms, check the
//! existence and uniqueness criteria, and validate the resulting reports.

mod commands;
mod report;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fractal_renorm::Error;

use crate::report::{emit, Report};

#[derive(Debug, Parser)]
#[command(name = "fractal-renorm", version, about = "Resistance-form renormalization workbench")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CtxArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    /// Angle `p/q` of the first critical point.
    #[arg(long)]
    theta: Option<String>,
    /// Read the structure from a `structure` report (or bare structure JSON).
    #[arg(long, conflicts_with_all = ["n", "m", "theta"])]
    structure: Option<PathBuf>,
    /// Use the rotation-symmetrized boundary and average every iterate over the rotations.
    #[arg(long)]
    symmetrize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Random restarts of the ratio search.
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Boundary set, glue points and the glued level sets.
    Structure {
        #[command(flatten)]
        ctx: CtxArgs,
        /// Deepest level to include.
        #[arg(long, default_value_t = 1)]
        levels: usize,
    },
    /// Solve the renormalization fixed-point equation.
    Solve {
        #[command(flatten)]
        ctx: CtxArgs,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Enumerate preserved relations, decide the criteria and certify uniqueness.
    Relations {
        #[command(flatten)]
        ctx: CtxArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Enumerate every preserved relation, not only rotation-invariant ones.
        #[arg(long)]
        all: bool,
        /// Largest boundary size for exhaustive enumeration.
        #[arg(long, default_value_t = fractal_renorm::relations::DEFAULT_CAP)]
        cap: usize,
        /// Largest power tried by the uniqueness certificate.
        #[arg(long, default_value_t = fractal_renorm::relations::DEFAULT_K_MAX)]
        k_max: usize,
    },
    /// Pairwise effective resistances on the level-k vertices.
    Resistance {
        #[command(flatten)]
        ctx: CtxArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// Per-cell flows of the level-1 harmonic extension of boundary values.
    Flows {
        #[command(flatten)]
        ctx: CtxArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Comma-separated boundary values in boundary order.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Graph-directed model for maps with a fixed critical point.
    Gd {
        #[command(subcommand)]
        command: GdCommand,
    },
    /// Check a report against the schema and recompute its claims.
    Validate { path: PathBuf },
}

#[derive(Debug, Subcommand)]
enum GdCommand {
    Build {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
    },
    Solve {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        #[command(flatten)]
        solve: SolveArgs,
    },
    Rhos {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        #[command(flatten)]
        search: SearchArgs,
    },
}

/// Invalid command-line input that the library never sees.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Report failed validation.
#[derive(Debug)]
pub struct Invalid(pub Vec<String>);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "report is invalid: {}", self.0.join("; "))
    }
}

impl std::error::Error for Invalid {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() || err.downcast_ref::<Invalid>().is_some() {
        return 2;
    }
    if err.downcast_ref::<std::io::Error>().is_some() || err.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::NonConvergence(_) | Error::CapExceeded { .. }) => 3,
        Some(
            Error::Internal(_)
            | Error::DegeneratePencil
            | Error::DegenerateQuotient(_)
            | Error::NotInMJ(_),
        ) => 4,
        Some(_) => 2,
        None => 4,
    }
}

fn run(cli: Cli, argv: Vec<String>) -> anyhow::Result<()> {
    if let Command::Validate { path } = &cli.command {
        let summary = validate::validate_file(path)?;
        return emit(&summary, cli.out.as_deref());
    }
    let start = Instant::now();
    let outcome = match cli.command {
        Command::Structure { ctx, levels } => commands::structure(&ctx, levels),
        Command::Solve { ctx, solve } => commands::solve(&ctx, &solve),
        Command::Relations { ctx, solve, search, all, cap, k_max } => {
            commands::relations(&ctx, &solve, &search, all, cap, k_max)
        }
        Command::Resistance { ctx, solve, level } => commands::resistance(&ctx, &solve, level),
        Command::Flows { ctx, solve, values } => commands::flows(&ctx, &solve, &values),
        Command::Gd { command } => match command {
            GdCommand::Build { n, m } => commands::gd_build(n, m),
            GdCommand::Solve { n, m, solve } => commands::gd_solve(n, m, &solve),
            GdCommand::Rhos { n, m, search } => commands::gd_rhos(n, m, &search),
        },
        Command::Validate { .. } => unreachable!("handled above"),
    }?;
    let text = match cli.format {
        Format::Json => {
            let report = Report::new(
                argv,
                outcome.input,
                outcome.outputs,
                outcome.tolerances,
                start.elapsed().as_secs_f64(),
            );
            report.to_json_string()?
        }
        Format::Csv => match &outcome.table {
            Some(table) => table.to_csv()?,
            None => return Err(Usage("CSV output is available for resistance matrices and rho tables only".into()).into()),
        },
    };
    emit(&text, cli.out.as_deref())?;
    match outcome.failure {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
