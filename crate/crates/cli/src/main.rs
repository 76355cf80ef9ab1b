//! Command-line front end for the crash deduplication pipeline.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crashdedup_core::embed::{EmbeddingProviderConfig, ProviderKind};
use crashdedup_core::pipeline::{
    cmd_cluster, cmd_embed, cmd_evaluate, cmd_prepare, cmd_run, RunConfig,
};
use crashdedup_core::preprocess::{SourceConfig, SourceKind};

/// Groups fuzzer-found crashes by underlying bug: cleans stack traces and
/// sanitizer reports, embeds them, and clusters the embedding vectors.
#[derive(Parser)]
#[command(name = "crashdedup", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and clean a crash corpus; collapse exact duplicates.
    Prepare(StageArgs),
    /// Embed prepared texts and combine them into one vector per crash.
    Embed(StageArgs),
    /// Cluster the vectors and expand assignments to all crashes.
    Cluster(StageArgs),
    /// Score clusters.csv against a ground-truth labeling.
    Evaluate(StageArgs),
    /// Run prepare, embed, cluster, and (with ground truth) evaluate.
    Run(StageArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderArg {
    Offline,
    Remote,
}

#[derive(Args)]
struct StageArgs {
    /// Directory with `<id>.trace` (and optional `<id>.asan`) files.
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,

    /// Output directory for pipeline artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Comma-separated data sources: any non-empty subset of full,coarse,asan.
    #[arg(long, default_value = "full,coarse,asan", value_delimiter = ',')]
    sources: Vec<String>,

    /// Keep stack traces inside cleaned sanitizer reports
    /// (the reports-only ablation uses this).
    #[arg(long)]
    asan_keep_traces: bool,

    /// Embedding provider.
    #[arg(long, value_enum, default_value_t = ProviderArg::Offline)]
    provider: ProviderArg,

    /// Model id for the remote provider (cache key component).
    #[arg(long, default_value = "text-embedding-3-large")]
    model: String,

    /// Base URL of the remote embeddings API.
    #[arg(long, default_value = "")]
    endpoint: String,

    /// Final vector dimension after truncation.
    #[arg(long, default_value_t = 64)]
    dim: usize,

    /// Output dimension of the offline embedder (defaults to --dim).
    #[arg(long)]
    offline_dim: Option<usize>,

    /// Seed for the offline embedder.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Maximum texts per embedding request.
    #[arg(long, default_value_t = 128)]
    batch_size: usize,

    /// Iteration budget of the epsilon search.
    #[arg(long, default_value_t = 64)]
    num_steps: usize,

    /// Embedding cache file (DEDUP_CACHE env var overrides the default).
    #[arg(long)]
    cache: Option<PathBuf>,

    /// Ground truth CSV (`id,label[,bug_type]`) for evaluate.
    #[arg(long)]
    truth: Option<PathBuf>,

    /// Also write the condensed cluster tree as condensed.jsonl.
    #[arg(long)]
    dump_tree: bool,
}

impl StageArgs {
    fn into_config(self) -> Result<RunConfig> {
        let mut sources = Vec::new();
        for name in &self.sources {
            let kind = SourceKind::from_short_name(name)
                .with_context(|| format!("unknown source {name:?}; expected full, coarse, asan"))?;
            if !sources.contains(&kind) {
                sources.push(kind);
            }
        }
        if sources.is_empty() {
            bail!("--sources must enable at least one of full, coarse, asan");
        }
        if self.dim == 0 {
            bail!("--dim must be positive");
        }
        if self.batch_size == 0 {
            bail!("--batch-size must be positive");
        }
        if self.num_steps == 0 {
            bail!("--num-steps must be positive");
        }
        if self.provider == ProviderArg::Remote && self.endpoint.is_empty() {
            bail!("--provider remote requires --endpoint");
        }

        let mut config = RunConfig::new(self.corpus, self.out);
        config.sources = SourceConfig {
            enabled: sources,
            asan_keep_traces: self.asan_keep_traces,
        };
        config.provider = EmbeddingProviderConfig {
            kind: match self.provider {
                ProviderArg::Offline => ProviderKind::Offline,
                ProviderArg::Remote => ProviderKind::Remote,
            },
            model: self.model,
            endpoint: self.endpoint,
            // The key itself comes from the environment, never a flag.
            api_key_env: "DEDUP_API_KEY".to_string(),
            batch_size: self.batch_size,
            target_dim: self.dim,
            seed: self.seed,
            offline_dim: self.offline_dim.unwrap_or(self.dim),
        };
        config.num_steps = self.num_steps;
        config.dump_tree = self.dump_tree;
        config.ground_truth = self.truth;
        if let Some(cache) = self.cache {
            config.cache_path = cache;
        } else if let Ok(env_cache) = std::env::var("DEDUP_CACHE") {
            config.cache_path = PathBuf::from(env_cache);
        }
        Ok(config)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Prepare(args) => {
            let config = args.into_config()?;
            let summary = cmd_prepare(&config)?;
            println!(
                "prepared {} records -> {} representatives ({} duplicate classes, {} unpreparable)",
                summary.total_records,
                summary.representatives,
                summary.duplicate_classes,
                summary.unpreparable.len()
            );
            if !summary.unpreparable.is_empty() {
                println!("unpreparable: {}", summary.unpreparable.join(", "));
            }
        }
        Command::Embed(args) => {
            let config = args.into_config()?;
            let summary = cmd_embed(&config)?;
            println!(
                "embedded {} texts for {} records ({} truncated at byte cap)",
                summary.texts_embedded,
                summary.records,
                summary.truncated_texts.len()
            );
        }
        Command::Cluster(args) => {
            let config = args.into_config()?;
            let selection = cmd_cluster(&config)?;
            println!(
                "selected eps {:.6}: dbcv {:.4}, persistence {:.4}, {} effective clusters ({} candidates)",
                selection.epsilon,
                selection.dbcv,
                selection.persistence,
                selection.effective_count,
                selection.candidates_considered
            );
        }
        Command::Evaluate(args) => {
            let config = args.into_config()?;
            let report = cmd_evaluate(&config)?;
            print!("{}", report.render_text());
        }
        Command::Run(args) => {
            let config = args.into_config()?;
            cmd_run(&config)?;
        }
    }
    Ok(())
}
