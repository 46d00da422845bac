//! `bogdyn <subcommand> --config <path> [--out <dir>]`
//!
//! Exit codes: 0 pass, 2 validation, 3 capacity, 4 numerical, 5 check failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bogdyn::config::SimulationConfig;
use bogdyn::output::ArtifactWriter;
use bogdyn::scenarios::{self, ScenarioOutput};
use bogdyn::Error;
use clap::{Parser, Subcommand};

const EXIT_CHECK_FAILED: u8 = 5;

#[derive(Parser)]
#[command(name = "bogdyn", version, about = "Hartree and Bogoliubov dynamics on periodic lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Condensate trajectory and conservation report.
    Hartree(Args),
    /// Pair trajectory `(γ, α)` and quasi-free defect report.
    Pair(Args),
    /// Pair dynamics against the exact Fock-space evolution.
    CompareOracle(Args),
    /// Many-body error and generator residual over `N_list`.
    NormScaling(Args),
    /// Grönwall and particle-number envelopes against the pair trajectory.
    BoundsCheck(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Args) {
        match self {
            Command::Hartree(a) => ("hartree", a),
            Command::Pair(a) => ("pair", a),
            Command::CompareOracle(a) => ("compare-oracle", a),
            Command::NormScaling(a) => ("norm-scaling", a),
            Command::BoundsCheck(a) => ("bounds-check", a),
        }
    }
}

fn run(name: &str, args: &Args) -> Result<ScenarioOutput, Error> {
    let cfg = SimulationConfig::load(&args.config)?;
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| Path::new(&cfg.output.directory).to_path_buf());
    let out = scenarios::run_named(name, &cfg)?;
    let writer = ArtifactWriter::new(&cfg, &dir)?;
    for (file, table) in &out.tables {
        writer.write_csv(file, table)?;
    }
    writer.write_json(&format!("{}_summary", file_stem(name)), &out.summary)?;
    println!("{}", writer.json_text(&out.summary)?.trim_end());
    Ok(out)
}

fn file_stem(name: &str) -> String {
    name.replace('-', "_")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.parts();
    match run(name, args) {
        Ok(out) if out.passed => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("{name}: check failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.exit_code() {
                c @ 2..=4 => c as u8,
                _ => 1,
            })
        }
    }
}
