use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "zsl",
    version,
    about = "Zero-shot audio classification with bilinear compatibility models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition the class catalog into disjoint folds.
    Split(SplitArgs),
    /// Cap the sample count of over-represented classes.
    Undersample(UndersampleArgs),
    /// Build the class semantic table from word or sentence tables.
    Assemble(AssembleArgs),
    /// Learn a compatibility matrix with the WARP loss.
    Train(TrainArgs),
    /// Write the top-ranked class for every test sample.
    Predict(PredictArgs),
    /// Top-1 accuracy and mAP on the test classes.
    Evaluate(EvaluateArgs),
    /// McNemar's test between two classifiers.
    Mcnemar(McnemarArgs),
    /// Configuration helpers.
    #[command(subcommand)]
    Config(ConfigCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Category,
    Random,
    Bins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Setting {
    S1,
    S2,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, value_enum)]
    pub strategy: Strategy,
    #[arg(long)]
    pub catalog: PathBuf,
    /// JSON object mapping class id to category (category strategy).
    #[arg(long)]
    pub categories: Option<PathBuf>,
    /// Sample set used for the per-class census (bins strategy).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// JSON list of bin edges (bins strategy); defaults to the built-in edges.
    #[arg(long)]
    pub bins: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Assign roles for a data setting; needs folds Fold0..Fold4.
    #[arg(long, value_enum)]
    pub setting: Option<Setting>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct UndersampleArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value_t = 1500)]
    pub cap: usize,
    /// Only classes with more samples than this are reduced.
    #[arg(long, default_value_t = 1000)]
    pub threshold: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    /// JSON array of assembly specs; table paths are relative to this file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Inputs shared by every command that scores samples.
#[derive(Debug, Args)]
pub struct Corpus {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub acoustic: PathBuf,
    #[arg(long)]
    pub semantic: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: Corpus,
    /// TrainConfig JSON; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-λ training log here as JSON Lines.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub corpus: Corpus,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    /// Score with this model (requires --acoustic and --semantic).
    #[arg(
        long,
        conflicts_with = "predictions",
        required_unless_present = "predictions"
    )]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub acoustic: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub semantic: Option<PathBuf>,
    /// Score a predictions file instead; yields Top-1 only.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Include one entry per test sample in the report.
    #[arg(long)]
    pub per_sample: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct McnemarArgs {
    /// Contingency cells: both correct, only A correct, only B correct, both wrong.
    #[arg(long, num_args = 4, value_names = ["BOTH", "A_ONLY", "B_ONLY", "NEITHER"], conflicts_with_all = ["a", "b", "truths"])]
    pub cells: Option<Vec<u64>>,
    /// Predictions of classifier A.
    #[arg(long, requires_all = ["b", "truths"], required_unless_present = "cells")]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Sample set holding the true classes.
    #[arg(long)]
    pub truths: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ConfigCommand {
    /// Print a training config with every default filled in.
    Init {
        /// Write to this path instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}
