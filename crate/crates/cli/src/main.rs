//! `relsvm`: train, apply and evaluate a relation classifier.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use relsvm_core::Families;

use crate::config::{parse_ablation, parse_switch, CliError, CliResult, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "relsvm", version, about = "Relation classification with slotted features and a linear SVM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write it to --model.
    Train(TrainArgs),
    /// Label entity pairs with a trained model.
    Predict(PredictArgs),
    /// K-fold cross-validation on a labeled corpus.
    Cv(CvArgs),
    /// Score a predicted relation file against a gold one.
    Score(ScoreArgs),
}

#[derive(Args, Debug, Default)]
struct InputArgs {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Annotated abstracts.
    #[arg(long)]
    abstracts: Option<PathBuf>,
    /// Relation file (entity pairs for predict).
    #[arg(long)]
    relations: Option<PathBuf>,
    /// Word embeddings in word2vec text format.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Tab-separated `word<TAB>cluster` file.
    #[arg(long)]
    clusters: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Ablation preset: all, no-shape, no-e2ctx, no-ctx.
    #[arg(long, value_parser = parse_ablation, conflicts_with = "families")]
    ablate: Option<Families>,
    /// Comma-separated families: word,shape,cluster,embedding,ctx1,ctx2.
    #[arg(long)]
    families: Option<String>,
    /// SVM cost C.
    #[arg(long)]
    cost: Option<f64>,
    /// Stopping tolerance on the projected gradient.
    #[arg(long)]
    eps: Option<f64>,
    /// Cap on solver passes per class.
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Add held-out or test tokens to the vocabularies: on or off.
    #[arg(long, value_parser = parse_switch)]
    transductive: Option<bool>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model_args: ModelArgs,
    /// Output model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Test abstracts, used for the vocabulary when transductive.
    #[arg(long)]
    test_abstracts: Option<PathBuf>,
    /// Test entity pairs, used for the vocabulary when transductive.
    #[arg(long)]
    test_relations: Option<PathBuf>,
    /// Also write the training vectors in sparse `label index:value` form.
    #[arg(long)]
    dump_vectors: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Answer file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model_args: ModelArgs,
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
}

fn base_config(input: &InputArgs) -> CliResult<RunConfig> {
    let mut config = match &input.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let overrides = [
        (&input.abstracts, &mut config.abstracts),
        (&input.relations, &mut config.relations),
        (&input.embeddings, &mut config.embeddings),
        (&input.clusters, &mut config.clusters),
    ];
    for (flag, slot) in overrides {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    Ok(config)
}

fn apply_model_args(config: &mut RunConfig, args: &ModelArgs) -> CliResult<()> {
    if let Some(families) = args.ablate {
        config.families = families;
    }
    if let Some(spec) = &args.families {
        config.families = spec.parse().map_err(|e: relsvm_core::Error| CliError::Usage(e.to_string()))?;
    }
    if let Some(v) = args.cost {
        config.train.cost = v;
    }
    if let Some(v) = args.eps {
        config.train.eps = v;
    }
    if let Some(v) = args.max_iters {
        config.train.max_outer_iters = v;
    }
    if let Some(v) = args.seed {
        config.train.seed = v;
    }
    if let Some(v) = args.transductive {
        config.transductive = v;
    }
    Ok(())
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Train(args) => {
            let mut config = base_config(&args.input)?;
            apply_model_args(&mut config, &args.model_args)?;
            if args.model.is_some() {
                config.model = args.model;
            }
            if args.test_abstracts.is_some() {
                config.test_abstracts = args.test_abstracts;
            }
            if args.test_relations.is_some() {
                config.test_relations = args.test_relations;
            }
            config.validate()?;
            commands::train(&config, args.dump_vectors.as_deref())
        }
        Command::Predict(args) => {
            let mut config = base_config(&args.input)?;
            if args.model.is_some() {
                config.model = args.model;
            }
            if args.out.is_some() {
                config.out = args.out;
            }
            commands::predict(&config)
        }
        Command::Cv(args) => {
            let mut config = base_config(&args.input)?;
            apply_model_args(&mut config, &args.model_args)?;
            if let Some(folds) = args.folds {
                config.folds = folds;
            }
            config.validate()?;
            commands::cv(&config)
        }
        Command::Score(args) => commands::score_files(&args.gold, &args.pred),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
