use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use morphboot::pipeline::{self, PipelineConfig};
use morphboot::Result;

/// Bootstrap morphological inflection data from seed tables and embeddings.
#[derive(Debug, Parser)]
#[command(name = "morphboot", version)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, short, global = true, env = "MORPHBOOT_CONFIG")]
    config: Option<PathBuf>,

    /// Override one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Output directory for stage artifacts.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Tagging variant: orth, sem or comb.
    #[arg(long, global = true)]
    variant: Option<String>,

    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load embeddings and write the filtered vocabulary.
    Ingest,
    /// Select seed tables from the UniMorph file.
    Seed,
    /// Tag vocabulary words with paradigm cells.
    Tag,
    /// Pair tagged words into a training dataset.
    Pair,
    /// Train the suffix-rule inflector.
    Train,
    /// Inflect the test lemmas.
    Inflect,
    /// Score predictions and write the report.
    Evaluate,
    /// Generate a synthetic language.
    Synth,
    /// Run every stage from ingest to evaluate.
    Pipeline,
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    for item in &cli.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| morphboot::Error::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(output) = &cli.output {
        cfg.output = output.clone();
    }
    if let Some(variant) = &cli.variant {
        cfg.set("variant", variant)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    match cli.command {
        Command::Ingest => pipeline::ingest(&cfg).map(drop),
        Command::Seed => pipeline::seed(&cfg).map(drop),
        Command::Tag => pipeline::tag(&cfg).map(drop),
        Command::Pair => pipeline::pair(&cfg).map(drop),
        Command::Train => pipeline::train(&cfg).map(drop),
        Command::Inflect => pipeline::inflect(&cfg).map(drop),
        Command::Evaluate => pipeline::evaluate(&cfg).map(drop),
        Command::Synth => pipeline::synth(&cfg).map(drop),
        Command::Pipeline => pipeline::pipeline(&cfg).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                // Stage errors already embed their cause in the message.
                if !msg.contains(&s.to_string()) {
                    msg.push_str(&format!(": {s}"));
                }
                source = s.source();
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
