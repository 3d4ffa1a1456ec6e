//! `netclear`: clearing payments for liability networks from JSON instance
//! files.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netclear_core::{Method, PaymentMode};

#[derive(Debug, Parser)]
#[command(name = "netclear", version, about = "Clearing payments in static and multi-period liability networks")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute clearing payments
    #[command(subcommand)]
    Clear(ClearCommand),
    /// Certify a payment schedule against an instance
    Validate(ValidateArgs),
    /// Strongly connected components, sinks and stability of the liability graph
    AnalyzeGraph(GraphArgs),
    /// Run every solver on one instance and tabulate the results
    Compare(CompareArgs),
}

#[derive(Debug, Subcommand)]
enum ClearCommand {
    /// Single-period clearing; the file must hold one period of inflows
    Static(StaticArgs),
    /// Multi-period clearing with unpaid debt rolled forward
    Dynamic(DynamicArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Matrix,
    Prorata,
}

impl From<ModeArg> for PaymentMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Matrix => PaymentMode::Matrix,
            ModeArg::Prorata => PaymentMode::ProRata,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Full,
    Sequential,
    Fda,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Full => Method::Full,
            MethodArg::Sequential => Method::Sequential,
            MethodArg::Fda => Method::Fda,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write a JSON report (full precision) to this path
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Omit the generation timestamp from the JSON report
    #[arg(long)]
    pub no_timestamp: bool,
}

/// Overrides for the dynamic parameters stored in the instance file.
#[derive(Debug, Args)]
pub struct Overrides {
    /// Interest factor on unpaid debt, at least 1
    #[arg(long, value_name = "F")]
    pub alpha: Option<f64>,
    /// Weight of the terminal residual in the loss, in [0, 1)
    #[arg(long, value_name = "F")]
    pub eta: Option<f64>,
    /// Number of periods; extra periods get zero inflow
    #[arg(long, value_name = "N")]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StaticArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "matrix")]
    pub mode: ModeArg,
    /// `full` solves the LP; `fda` iterates (pro-rata only)
    #[arg(long, value_enum, default_value = "full")]
    pub method: MethodArg,
    /// Absolute tolerance for the certification checks
    #[arg(long, value_name = "F")]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DynamicArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "matrix")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "full")]
    pub method: MethodArg,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Absolute tolerance for the certification checks
    #[arg(long, value_name = "F")]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub file: PathBuf,
    /// Schedule file, or a report written with --out
    #[arg(long, value_name = "PATH")]
    pub schedule: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Absolute tolerance for the certification checks
    #[arg(long, value_name = "F")]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    pub file: PathBuf,
    /// Also test Schur stability of the relative liabilities restricted to
    /// these 1-based nodes
    #[arg(long, value_delimiter = ',', value_name = "NODES")]
    pub subset: Option<Vec<usize>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Clear(ClearCommand::Static(a)) => commands::clear_static(&a),
        Command::Clear(ClearCommand::Dynamic(a)) => commands::clear_dynamic(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::AnalyzeGraph(a) => commands::analyze_graph(&a),
        Command::Compare(a) => commands::compare(&a),
    };
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_documented_invocations() {
        let cli = Cli::try_parse_from([
            "netclear", "clear", "dynamic", "--mode", "matrix", "--alpha", "1.01", "--horizon", "3", "x.json",
        ])
        .unwrap();
        match cli.command {
            Command::Clear(ClearCommand::Dynamic(a)) => {
                assert_eq!(a.overrides.alpha, Some(1.01));
                assert_eq!(a.overrides.horizon, Some(3));
                assert_eq!(a.method, MethodArg::Full);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["netclear", "validate", "x.json"]).is_err());
        assert!(Cli::try_parse_from(["netclear", "analyze-graph", "x.json", "--subset", "1,2"]).is_ok());
        assert!(Cli::try_parse_from(["netclear", "clear", "static", "--mode", "both", "x.json"]).is_err());
    }
}
