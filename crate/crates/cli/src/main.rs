//! Command-line surface for shape-space smoothing splines.

mod args;
mod commands;
mod outputs;

use clap::{Parser, Subcommand};

use args::SharedFitArgs;
use commands::{CompareArgs, PcaArgs, PredictArgs, SimulateArgs};

#[derive(Parser)]
#[command(
    name = "shapespline",
    version,
    about = "Smoothing splines for landmark shape trajectories on Kendall shape spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a shape spline to a trajectory
    Fit(SharedFitArgs),
    /// Leave-one-out cross-validation of the smoothing parameter
    Cv(SharedFitArgs),
    /// Fit and predict shapes at additional times
    Predict(PredictArgs),
    /// Generate a simulated trajectory
    Simulate(SimulateArgs),
    /// Principal component scores in the Procrustes tangent space
    Pca(PcaArgs),
    /// Compare mean models by information criteria
    Compare(CompareArgs),
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    match err.downcast_ref::<shapespline::Error>() {
        Some(shapespline::Error::DegenerateConfiguration { .. }) => "degenerate_configuration",
        Some(shapespline::Error::ZeroDistance { .. }) => "zero_distance",
        Some(shapespline::Error::CutLocus { .. }) => "cut_locus",
        Some(shapespline::Error::VectorTooLong { .. }) => "vector_too_long",
        Some(shapespline::Error::RankDeficient { .. }) => "rank_deficient",
        Some(shapespline::Error::TimeOutOfRange { .. }) => "time_out_of_range",
        Some(shapespline::Error::DuplicateTimes { .. }) => "duplicate_times",
        Some(shapespline::Error::TooFewPoints { .. }) => "too_few_points",
        Some(shapespline::Error::SingularDesign { .. }) => "singular_design",
        Some(shapespline::Error::InvalidInput { .. }) => "invalid_input",
        Some(shapespline::Error::Parse { .. }) => "parse_error",
        Some(shapespline::Error::Validation { .. }) => "validation_error",
        Some(shapespline::Error::Construction { .. }) => "construction_failed",
        Some(shapespline::Error::Io(_)) => "io_error",
        Some(shapespline::Error::Json(_)) => "json_error",
        None => "error",
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Fit(args) => commands::cmd_fit(args),
        Command::Cv(args) => commands::cmd_cv(args),
        Command::Predict(args) => commands::cmd_predict(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Pca(args) => commands::cmd_pca(args),
        Command::Compare(args) => commands::cmd_compare(args),
    };
    if let Err(err) = outcome {
        eprintln!(
            "{}",
            serde_json::json!({
                "error": format!("{err:#}"),
                "kind": error_kind(&err),
            })
        );
        std::process::exit(1);
    }
}
