use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lhacheck::num::Time;

mod run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "lhacheck", version, about = "Simulate, search and model check linear hybrid automata")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Timing {
    /// Exploration stops once elapsed time would reach this bound.
    #[arg(long, value_parser = parse_positive_time)]
    pub time_bound: Time,
    #[arg(long, value_parser = parse_positive_time, default_value = "1")]
    pub increment: Time,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the tick trace from the initial state.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        timing: Timing,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// List reachable timed states matching a pattern.
    Search {
        #[arg(long)]
        model: PathBuf,
        /// `*`, or terms `hose=N` and `R<id>.hth=<rat>|*`.
        #[arg(long)]
        pattern: String,
        #[command(flatten)]
        timing: Timing,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Exit with status 1 if any solution is found.
        #[arg(long)]
        expect_none: bool,
    },
    /// Check an LTL formula on the time-bounded state graph.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        timing: Timing,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compose components synchronously, then check a formula.
    ProductCheck {
        #[arg(long, num_args = 1.., required = true)]
        components: Vec<PathBuf>,
        #[arg(long)]
        formula: String,
        /// Required when any component has tick rules.
        #[arg(long, value_parser = parse_positive_time)]
        time_bound: Option<Time>,
        #[arg(long, value_parser = parse_positive_time, default_value = "1")]
        increment: Time,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn parse_positive_time(s: &str) -> Result<Time, String> {
    let t: Time = s.parse()?;
    if t.is_zero() {
        return Err("must be > 0".into());
    }
    Ok(t)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::run(cli.command) {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::from(out.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
