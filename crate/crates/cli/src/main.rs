mod commands;
mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "autocombat", version, about = "Comment-driven answer refinement: curation, refinement and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Provider selection. The API key comes from AUTOCOMBAT_API_KEY or the
/// provider's credentials_file, never from arguments.
#[derive(Args, Clone)]
pub struct ProviderArgs {
    /// TOML file holding [provider] / [providers.<name>] tables.
    #[arg(long, default_value = "autocombat.toml")]
    pub config: PathBuf,
    /// Named provider; defaults to [provider].
    #[arg(long)]
    pub provider: Option<String>,
    /// Instances processed concurrently.
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Attempts per model call.
    #[arg(long, default_value_t = 3)]
    pub max_attempts: u32,
}

#[derive(Args, Clone)]
pub struct SampleArgs {
    /// Keep at most this many instances per quartile (uniform, seeded).
    #[arg(long)]
    pub per_quartile: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample instances outside the four target languages too.
    #[arg(long)]
    pub include_other_languages: bool,
    /// Drop threads whose addressed comments link to no revision.
    #[arg(long)]
    pub drop_unaddressed: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CorpusModeArg {
    Macro,
    Pooled,
}

#[derive(Subcommand)]
enum Command {
    /// Build benchmark instances from labeled threads.
    Curate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Classify comments of each instance and report per-quartile scores.
    Classify {
        #[arg(long)]
        bench: PathBuf,
        /// Per-quartile classification table (CSV).
        #[arg(long)]
        out: PathBuf,
        /// Per-instance result records (JSON lines).
        #[arg(long)]
        results: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Score hypotheses against references, one text per line or one JSON
    /// string per line for .jsonl files.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// CSV path; a JSON report is written next to it.
        #[arg(long)]
        report: PathBuf,
    },
    /// Aggregate result records into report tables.
    Evaluate {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Baseline result records for the significance table.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "macro")]
        corpus_mode: CorpusModeArg,
        #[arg(long)]
        primary_annotator: Option<String>,
        /// Compare against the baseline on every answer, not only
        /// single-snippet ones.
        #[arg(long)]
        all_answers: bool,
    },
    /// Run the HTTP refinement service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Full pipeline: curate, classify, refine, score, aggregate.
    Run {
        /// Labeled threads (curated first).
        #[arg(long, conflicts_with = "bench", required_unless_present = "bench")]
        threads: Option<PathBuf>,
        /// Already curated instances.
        #[arg(long)]
        bench: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "macro")]
        corpus_mode: CorpusModeArg,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Build a replay store from hand-written responses keyed by instance id.
    ReplayBuild {
        #[arg(long)]
        bench: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 4096)]
        max_output_tokens: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> std::process::ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("AUTOCOMBAT_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curate { input, out, sample } => commands::curate(&input, &out, &sample),
        Command::Classify {
            bench,
            out,
            results,
            provider,
        } => commands::classify(&bench, &out, results.as_deref(), &provider),
        Command::Score { hyp, reference, report } => commands::score(&hyp, &reference, &report),
        Command::Evaluate {
            results,
            annotations,
            baseline,
            out,
            corpus_mode,
            primary_annotator,
            all_answers,
        } => commands::evaluate(commands::EvaluateArgs {
            results: &results,
            annotations: annotations.as_deref(),
            baseline: baseline.as_deref(),
            out: &out,
            corpus_mode,
            primary_annotator,
            single_snippet_only: !all_answers,
        }),
        Command::Serve { config } => commands::serve(&config),
        Command::Run {
            threads,
            bench,
            out,
            annotations,
            corpus_mode,
            sample,
            provider,
        } => commands::run(commands::RunArgs {
            threads: threads.as_deref(),
            bench: bench.as_deref(),
            out: &out,
            annotations: annotations.as_deref(),
            corpus_mode,
            sample: &sample,
            provider: &provider,
        }),
        Command::ReplayBuild {
            bench,
            responses,
            model,
            max_output_tokens,
            out,
        } => commands::replay_build(&bench, &responses, &model, max_output_tokens, &out),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
