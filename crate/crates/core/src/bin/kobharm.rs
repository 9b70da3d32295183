use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kobharm::scenario::{registry_list, run_scenario, Experiment, Scenario, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "kobharm", version, about = "Run disc, MPSH and Kobayashi experiments")]
struct Cli {
    /// Scenario JSON; its `experiment` must match the subcommand when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default runs/<name>-<experiment>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Disc grid resolution.
    #[arg(long, global = true, num_args = 2, value_names = ["NR", "NT"])]
    resolution: Option<Vec<usize>>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    MpshCheck,
    SolveDisc,
    Kobayashi,
    Distance,
    BallProbe,
    BoundaryScan,
    Hyperbolicity,
    HolderProbe,
    /// List the registered domains.
    Registry,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let experiment = match cli.command {
        Command::MpshCheck => Experiment::MpshCheck,
        Command::SolveDisc => Experiment::SolveDisc,
        Command::Kobayashi => Experiment::Kobayashi,
        Command::Distance => Experiment::Distance,
        Command::BallProbe => Experiment::BallProbe,
        Command::BoundaryScan => Experiment::BoundaryScan,
        Command::Hyperbolicity => Experiment::Hyperbolicity,
        Command::HolderProbe => Experiment::HolderProbe,
        Command::Registry => {
            println!("{}", serde_json::to_string_pretty(&registry_list()).expect("registry serializes"));
            return ExitCode::SUCCESS;
        }
    };
    let mut sc = match &cli.config {
        Some(path) => match Scenario::from_file(path, Some(experiment)) {
            Ok(s) => s,
            Err(e) => {
                println!("{}", serde_json::json!({"status": EXIT_ERROR, "error": {"kind": "config", "message": e.to_string()}}));
                return ExitCode::from(EXIT_ERROR as u8);
            }
        },
        None => Scenario::new(experiment),
    };
    if let Some(s) = cli.seed {
        sc.seed = s;
    }
    if let Some(r) = &cli.resolution {
        sc.resolution = Some((r[0], r[1]));
    }
    let out = cli
        .out
        .unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-{}", sc.name, sc.experiment)));
    let outcome = run_scenario(&sc, &out);
    if !cli.quiet {
        eprintln!("{}: {} -> {}", sc.experiment, outcome.summary, out.display());
    }
    if outcome.status != 0 {
        if let Some(e) = outcome.report.get("error") {
            println!("{e}");
        }
    }
    ExitCode::from(outcome.status as u8)
}
