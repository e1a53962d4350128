mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::args::*;
use crate::commands::Failure;

#[derive(Parser)]
#[command(name = "edgemorph", version, about = "Align depth borders to segmentation edges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect edges of a disparity map or mask
    Edges(EdgesArgs),
    /// Edge-edge consistency between a mask and a disparity map
    Consistency(ConsistencyArgs),
    /// Morph a disparity map onto segmentation edges
    Morph(MorphArgs),
    /// Stereo occlusion mask of a disparity map
    Occlusion(OcclusionArgs),
    /// Photometric, morph and proxy losses of a stereo pair
    Loss(LossArgs),
    /// Depth metrics, region splits and delta profiles
    Eval(EvalCmdArgs),
    /// Render a synthetic stereo scene
    Synth(SynthArgs),
    /// Synthetic end-to-end run
    Pipeline(PipelineArgs),
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("EDGEMORPH_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("EDGEMORPH_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<serde_json::Value, Failure> {
    init_threads()?;
    match &cli.command {
        Command::Edges(a) => commands::edges(a),
        Command::Consistency(a) => commands::consistency(a),
        Command::Morph(a) => commands::morph(a),
        Command::Occlusion(a) => commands::occlusion(a),
        Command::Loss(a) => commands::loss(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => commands::synth(a),
        Command::Pipeline(a) => commands::pipeline(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report).expect("json values serialize");
            // A closed pipe downstream is not our failure.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
