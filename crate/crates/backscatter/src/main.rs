//! Thin command-line front end: `run`, `plot`, `oracle`.

use backscatter::cli::{self, CliError, OracleRequest};
use backscatter::plot::PlotKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "backscatter",
    about = "Recover convex polygonal obstacles from a few high-frequency far-field measurements",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scene config end to end and persist the record directory.
    Run {
        /// Scene configuration (TOML).
        config: PathBuf,
        /// Replace the config's noise seed.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Output directory (overrides config and BACKSCATTER_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render plots from a persisted record into <record>/plots/.
    Plot {
        /// Record directory written by `run`.
        record: PathBuf,
        /// polar | overlay
        #[arg(long)]
        kind: String,
        /// Skip the green normal arrows.
        #[arg(long)]
        no_normals: bool,
        /// Canvas size in pixels.
        #[arg(long, default_value_t = 600)]
        size: u32,
    },
    /// Print brute-force reference values at full precision.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Dense-trapezoid segment integral of e^{iky·w} over [a, b].
    Segint(SegintArgs),
    /// Householder reflection of d across the line with normal nu.
    Reflect {
        #[arg(long, allow_hyphen_values = true)]
        d: String,
        #[arg(long, allow_hyphen_values = true)]
        nu: String,
    },
    /// Dense-sampled symmetric Hausdorff distance of two polygon files.
    Hausdorff {
        poly_a: PathBuf,
        poly_b: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples_per_edge: usize,
    },
}

#[derive(Args)]
struct SegintArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: String,
    #[arg(long, allow_hyphen_values = true)]
    b: String,
    #[arg(long, allow_hyphen_values = true)]
    k: f64,
    #[arg(long, allow_hyphen_values = true)]
    w: String,
    #[arg(long, default_value_t = 100_000)]
    panels: usize,
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("error[{}]: {err}", err.code());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed_override, out } => {
            match cli::cmd_run(&config, seed_override, out) {
                Ok(report) => {
                    print!("{}", report.summary);
                    if report.failed_stages > 0 {
                        fail(CliError::StageFailure { failed: report.failed_stages })
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Plot { record, kind, no_normals, size } => {
            let kind = match kind.as_str() {
                "polar" => PlotKind::PolarSquaredModulus,
                "overlay" => PlotKind::ReconstructionOverlay,
                other => {
                    return fail(CliError::BadArgument {
                        flag: "--kind",
                        reason: format!("expected polar or overlay, got {other:?}"),
                    })
                }
            };
            match cli::cmd_plot(&record, kind, no_normals, size) {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Oracle { which } => {
            let request = match &which {
                OracleCommand::Segint(args) => OracleRequest::SegInt {
                    a: &args.a,
                    b: &args.b,
                    k: args.k,
                    w: &args.w,
                    panels: args.panels,
                },
                OracleCommand::Reflect { d, nu } => OracleRequest::Reflect { d, nu },
                OracleCommand::Hausdorff { poly_a, poly_b, samples_per_edge } => {
                    OracleRequest::Hausdorff {
                        poly_a,
                        poly_b,
                        samples_per_edge: *samples_per_edge,
                    }
                }
            };
            match cli::cmd_oracle(request) {
                Ok(text) => {
                    println!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
