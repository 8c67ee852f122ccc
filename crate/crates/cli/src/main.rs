//! Command-line front end: synthesize data, train, embed, and run the
//! downstream evaluations.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/IO error, 3 numeric failure
//! (non-finite values or degenerate geometry).

mod commands;
mod config;

use clap::{Parser, Subcommand};

use crate::commands::{
    cmd_embed, cmd_eval_corr, cmd_gradcheck, cmd_pca, cmd_stability, cmd_synth, cmd_train,
    cmd_transfer, EmbedArgs, EvalCorrArgs, GradcheckArgs, PcaArgs, StabilityArgs, SynthArgs,
    TrainArgs, TransferArgs,
};
use crate::config::CliResult;

#[derive(Parser, Debug)]
#[command(
    name = "spts",
    version,
    about = "Unsupervised structure points for 3D point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic labeled, landmarked dataset
    Synth(SynthArgs),
    /// Train a model on a dataset directory
    Train(TrainArgs),
    /// Emit structure points (PLY) and features (CSV) for cloud files
    Embed(EmbedArgs),
    /// Landmark correspondence-transfer accuracy over a dataset
    EvalCorr(EvalCorrArgs),
    /// Few-shot label transfer from exemplar shapes onto queries
    Transfer(TransferArgs),
    /// Structure-point stability across resampling densities
    Stability(StabilityArgs),
    /// Fit a PCA morphable model over structure-point sets
    Pca(PcaArgs),
    /// Finite-difference gradient check of every operator
    Gradcheck(GradcheckArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Embed(args) => cmd_embed(args),
        Command::EvalCorr(args) => cmd_eval_corr(args),
        Command::Transfer(args) => cmd_transfer(args),
        Command::Stability(args) => cmd_stability(args),
        Command::Pca(args) => cmd_pca(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path with code 0
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e);
        std::process::exit(e.exit_code());
    }
}
