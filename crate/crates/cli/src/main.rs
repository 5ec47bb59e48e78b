//! `deephate` command-line runner.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 invalid arguments or
//! configuration, 3 data error (including checkpoint/data mismatch),
//! 4 numeric failure during training.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "deephate", version, about = "Multi-task hate speech classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean a raw `id,text,label` corpus into `id,tokens,label`.
    Preprocess {
        /// Raw corpus CSV.
        #[arg(long)]
        input: PathBuf,
        /// Destination CSV.
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a model and write checkpoint, history and run manifest.
    Train {
        /// Run configuration (`key = value` lines).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; created if missing.
        #[arg(long)]
        out_dir: PathBuf,
        /// Also run this many repeated 90/10 resampling experiments and
        /// write runs.csv and summary.json.
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Grid search over hidden and batch sizes.
    Grid {
        /// Run configuration; its hidden and batch sizes are overridden.
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated hidden sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        hidden: Vec<usize>,
        /// Comma-separated batch sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        batch: Vec<usize>,
        /// Destination CSV `hidden_size,batch_size,macro_f1`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint on a labelled corpus.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        /// Labelled corpus (raw or cleaned CSV).
        #[arg(long)]
        data: PathBuf,
        /// Task (head) to evaluate.
        #[arg(long)]
        task: String,
        /// Output directory for report.json and confusion.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render per-word selection scores of one post as HTML.
    Highlight {
        #[command(flatten)]
        model: ModelArgs,
        /// Labelled corpus containing the post.
        #[arg(long)]
        data: PathBuf,
        /// Task (head) whose prediction is explained.
        #[arg(long)]
        task: String,
        /// Post id; defaults to the first row.
        #[arg(long)]
        id: Option<String>,
        /// Destination HTML file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Project pooled sentence vectors to 2-D and draw them as SVG.
    Map {
        #[command(flatten)]
        model: ModelArgs,
        /// Labelled corpus; repeat together with --task for several tasks.
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        /// Task of the matching --data file.
        #[arg(long, required = true)]
        task: Vec<String>,
        /// Destination SVG; coordinates go next to it with a .csv extension.
        #[arg(long)]
        out: PathBuf,
        /// t-SNE perplexity; lowered automatically for very small inputs.
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        /// t-SNE gradient-descent iterations.
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        /// Seed of the t-SNE initialization.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, clap::Args)]
struct ModelArgs {
    /// Run configuration used for training (supplies the embeddings).
    #[arg(long)]
    config: PathBuf,
    /// Checkpoint written by `train`.
    #[arg(long)]
    checkpoint: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Preprocess { input, output } => run::preprocess(&input, &output),
        Command::Train {
            config,
            out_dir,
            repetitions,
        } => run::train(&config, &out_dir, repetitions),
        Command::Grid {
            config,
            hidden,
            batch,
            out,
        } => run::grid(&config, &hidden, &batch, &out),
        Command::Eval {
            model,
            data,
            task,
            out,
        } => run::eval(&model.config, &model.checkpoint, &data, &task, &out),
        Command::Highlight {
            model,
            data,
            task,
            id,
            out,
        } => run::highlight(&model.config, &model.checkpoint, &data, &task, id.as_deref(), &out),
        Command::Map {
            model,
            data,
            task,
            out,
            perplexity,
            iterations,
            seed,
        } => {
            let tsne = deephate::interpret::TsneConfig {
                perplexity,
                iterations,
                seed,
                ..Default::default()
            };
            run::map(&model.config, &model.checkpoint, &data, &task, &out, &tsne)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
