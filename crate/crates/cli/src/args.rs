//! Command-line surface.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "appraise", version, about = "Appraisal-informed emotion classification experiments")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inter-annotator agreement and appraisal/emotion co-occurrence tables.
    Agreement(AgreementArgs),
    /// Cross-validated experiments over a set of tasks.
    Run(RunArgs),
    /// Finite-difference gradient checks for every layer and model.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic corpus with a bijective appraisal-to-emotion mapping.
    Synth(SynthArgs),
    /// Build a stratified fold plan and print its partition hash.
    Folds(FoldsArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus TSV file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Column mapping file (`field = column` per line); inferred from the header when absent.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Fail unless every instance carries three annotator votes.
    #[arg(long)]
    pub require_votes: bool,
    /// Parent directory of the run directory.
    #[arg(long, default_value = "runs")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Word vectors in text format; random vectors are used when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Comma-separated tasks: t2e, t2a, a2e-gold, pipeline, multitask,
    /// oracle-pipeline, oracle-multitask, reference-baseline, or all.
    #[arg(long, value_delimiter = ',')]
    pub tasks: Option<Vec<String>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Seed for fold assignment and model initialization.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reuse a fold plan exported by `appraise folds`.
    #[arg(long)]
    pub folds: Option<PathBuf>,
    /// Parent directory of the run directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Override any configuration key, e.g. `--set model.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random cases per layer and model.
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    /// Negate the backward pass of one op.
    #[arg(long, hide = true, value_name = "OP")]
    pub inject_sign_error: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output TSV file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 143)]
    pub per_emotion: usize,
    /// Probability that an annotator flips a prototype appraisal bit.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FoldsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the plan as JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
