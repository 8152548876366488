//! `watermass`: gridded ocean data to water-mass regionalisations.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numeric degeneracy.

mod commands;
mod config;
mod error;
mod io;
mod pipeline;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::Kind;

#[derive(Parser, Debug)]
#[command(name = "watermass", version, about = "Objective water-mass regionalisation of gridded ocean data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a cell file and write it back in the 18-column layout.
    Ingest(commands::IngestArgs),
    /// Fill missing parameters from the nearest complete cells.
    Impute(commands::ImputeArgs),
    /// Scale the parameters and embed them.
    Embed(commands::EmbedArgs),
    /// Label cells with k-means, Ward or DBSCAN.
    Cluster(commands::ClusterArgs),
    /// Score a range of k, or an epsilon × min_samples grid.
    Sweep(commands::SweepArgs),
    /// Fuse labelled files into one labelling with per-cell uncertainty.
    Nemi(commands::NemiArgs),
    /// Agreement between two labelled files, joined on cell coordinates.
    Compare(commands::CompareArgs),
    /// Parameter and label statistics of a cell file.
    Stats(commands::StatsArgs),
    /// Write a synthetic Gaussian-blob cell file.
    Synth(commands::SynthArgs),
    /// Run the whole pipeline from a config and write a manifest.
    Run(pipeline::RunArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Kind::Usage.exit_code() } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Impute(a) => commands::impute(a),
        Command::Embed(a) => commands::embed_cmd(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Nemi(a) => commands::nemi(a),
        Command::Compare(a) => commands::compare(a),
        Command::Stats(a) => commands::stats(a),
        Command::Synth(a) => commands::synth(a),
        Command::Run(a) => pipeline::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("watermass: {e}");
            e.kind.exit_code()
        }
    }
}
