//! `relmark` — end-to-end driver for the marker-based relation extraction
//! pipeline: synthetic data, vocabulary, MLM pretraining, fine-tuning,
//! evaluation, cross-lingual transfer matrices, and reports.

mod commands;
mod pipeline;

use clap::{Parser, Subcommand};

use commands::{build_vocab, eval, gen_data, pretrain, report, train, transfer};

#[derive(Parser)]
#[command(name = "relmark", version, about = "Relation extraction with entity markers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multilingual relation corpus
    GenData(gen_data::GenDataArgs),
    /// Build a subword vocabulary from labeled corpora
    BuildVocab(build_vocab::BuildVocabArgs),
    /// Masked-language-model pretraining on raw text
    Pretrain(pretrain::PretrainArgs),
    /// Fine-tune a relation classifier (one run per seed)
    Train(train::TrainArgs),
    /// Evaluate a checkpoint on a labeled test set
    Eval(eval::EvalArgs),
    /// All-pairs cross-lingual evaluation and transfer efficiency
    TransferMatrix(transfer::TransferMatrixArgs),
    /// Collect metrics files into a combined CSV and SVG chart
    Report(report::ReportArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(args) => gen_data::run(&args),
        Command::BuildVocab(args) => build_vocab::run(&args),
        Command::Pretrain(args) => pretrain::run(&args),
        Command::Train(args) => train::run(&args),
        Command::Eval(args) => eval::run(&args),
        Command::TransferMatrix(args) => transfer::run(&args),
        Command::Report(args) => report::run(&args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
