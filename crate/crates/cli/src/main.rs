mod commands;
mod config;
mod error;
mod layout;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{resolve, ConfigLayer};
use crate::error::{CliError, Result};
use crate::layout::RunLayout;

/// Aspect-based sentiment analysis with lexicon-enriched auxiliary sentences.
#[derive(Parser)]
#[command(name = "aspectforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter, split, enrich and index a dataset into <out>/prepared.
    Prepare(RunFlags),
    /// Fine-tune on the prepared split; writes checkpoints and history.csv.
    Train(RunFlags),
    /// Score a checkpoint; writes report.json, confusion.csv and pr_curve.csv.
    Eval(EvalArgs),
    /// Classify one review toward one aspect.
    Predict(PredictArgs),
    /// Render auxiliary sentences for aspects read line by line from stdin.
    Enrich(EnrichArgs),
    /// Print the word pieces of each stdin line.
    Tokenize(TokenizeArgs),
}

#[derive(Args)]
struct RunFlags {
    /// Run root holding prepared/, checkpoints/ and reports/.
    #[arg(long, default_value = "run")]
    out: PathBuf,
    /// TOML config file; defaults to <out>/run.cfg when present.
    #[arg(long)]
    config: Option<PathBuf>,
    /// XML dataset of reviews with annotated aspects.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Synonym lexicon, one `headword<TAB>syn1|syn2` entry per line.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Existing vocabulary file, one token per line; built from the training side when absent.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Target size when building a vocabulary.
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Use the raw aspect term as the auxiliary sentence.
    #[arg(long)]
    no_enrich: bool,
    /// Whitespace-token budget for auxiliary sentences.
    #[arg(long)]
    max_tokens: Option<usize>,
    /// `cap:<words>` or `p<percentile>`.
    #[arg(long)]
    length_filter: Option<String>,
    /// Share of reviews assigned to the training side.
    #[arg(long)]
    train_fraction: Option<f64>,
    /// base or toy.
    #[arg(long)]
    preset: Option<String>,
    /// Encoded pair length, including special tokens.
    #[arg(long)]
    max_len: Option<usize>,
    /// Seed for the split, initialization, data order, dropout and masking.
    #[arg(long)]
    seed: Option<u64>,
    /// AdamW learning rate.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Decoupled weight decay.
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Training batch size.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// `balanced` (the default when given without a value) or 7 comma-separated weights.
    #[arg(long, num_args = 0..=1, default_missing_value = "balanced")]
    class_weights: Option<String>,
    /// Also evaluate every N optimizer steps when picking the best checkpoint.
    #[arg(long)]
    eval_every: Option<usize>,
}

impl RunFlags {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            dataset: self.dataset.clone(),
            lexicon: self.lexicon.clone(),
            vocab: self.vocab.clone(),
            vocab_size: self.vocab_size,
            enrich: self.no_enrich.then_some(false),
            max_aux_tokens: self.max_tokens,
            length_filter: self.length_filter.clone(),
            train_fraction: self.train_fraction,
            group_by_review: None,
            preset: self.preset.clone(),
            max_len: self.max_len,
            seed: self.seed,
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
            batch: self.batch,
            epochs: self.epochs,
            class_weights: self.class_weights.clone(),
            eval_every: self.eval_every,
        }
    }

    fn resolve(&self) -> Result<(RunLayout, config::RunConfig)> {
        let config = resolve(self.config.as_deref(), &self.out, self.layer())?;
        Ok((RunLayout::new(&self.out), config))
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Defaults to <out>/checkpoints/best.ckpt.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Which prepared side to score: train or test.
    #[arg(long, default_value = "test")]
    set: String,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Defaults to <out>/checkpoints/best.ckpt.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    review: String,
    #[arg(long)]
    aspect: String,
    /// Echo the auxiliary sentence.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct EnrichArgs {
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = aspectforge_core::lexicon::DEFAULT_MAX_TOKENS)]
    max_tokens: usize,
    #[arg(long)]
    no_enrich: bool,
}

#[derive(Args)]
struct TokenizeArgs {
    #[arg(long)]
    vocab: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(flags) => {
            let (layout, config) = flags.resolve()?;
            commands::prepare(&layout, &config)
        }
        Command::Train(flags) => {
            let (layout, config) = flags.resolve()?;
            commands::train(&layout, &config)
        }
        Command::Eval(args) => {
            let (layout, config) = args.run.resolve()?;
            commands::eval(&layout, &config, args.checkpoint.as_deref(), &args.set)
        }
        Command::Predict(args) => {
            let (layout, config) = args.run.resolve()?;
            let input = commands::PredictInput {
                checkpoint: args.checkpoint.as_deref(),
                review: &args.review,
                aspect: &args.aspect,
                verbose: args.verbose,
            };
            commands::predict_one(&layout, &config, &input)
        }
        Command::Enrich(args) => commands::enrich(args.lexicon.as_deref(), args.max_tokens, !args.no_enrich),
        Command::Tokenize(args) => commands::tokenize_lines(&args.vocab),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.kind().as_str().map(str::to_string).unwrap_or_else(|| e.to_string());
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or("").trim_start_matches("error: ");
            let err = CliError::Usage(if first.is_empty() { message } else { first.to_string() });
            eprintln!("{}", err.render());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.render());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
