//! Staged pipeline drivers and the file formats between stages.
//!
//! Four independently re-runnable stages communicate through files in the
//! output directory:
//!
//! - `prepare`: corpus -> `prepared.jsonl` (representatives) +
//!   `duplicates.csv` (id,representative over all ids)
//! - `embed`: `prepared.jsonl` -> `vectors.jsonl` (id, dim, values),
//!   warming the embedding cache
//! - `cluster`: `vectors.jsonl` -> `clusters.csv` (id,cluster; noise points
//!   become unique `noise-` singletons) + `selection.json`
//! - `evaluate`: `clusters.csv` + ground truth -> `report.json`/`report.txt`
//!
//! Every stage is deterministic given unchanged inputs (with the offline
//! provider, reruns are byte-identical), records provenance in `run.json`,
//! and takes an exclusive lock on the output directory while it runs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embed::{
    cap_text_bytes, combine_sources, embed_texts, truncate_normalize, EmbedError, EmbeddingCache,
    EmbeddingProviderConfig, EmbeddingVector, MAX_EMBED_TEXT_BYTES,
};
use crate::hdbscan::{build_mst, condense, ClusterError, MsTree, PointSet};
use crate::ingest::{load_corpus, CorpusLayout, IngestError};
use crate::metrics::{evaluate, EvalReport, GroundTruth, MetricsError};
use crate::preprocess::{
    collapse_duplicates, content_hash, prepare, PrepareError, PreparedRecord, SourceConfig,
};
use crate::search::{choose_best, gather_candidates, SearchParams};

pub const PREPARED_FILE: &str = "prepared.jsonl";
pub const DUPLICATES_FILE: &str = "duplicates.csv";
pub const VECTORS_FILE: &str = "vectors.jsonl";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const SELECTION_FILE: &str = "selection.json";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const RUN_LOG_FILE: &str = "run.json";
pub const TREE_DUMP_FILE: &str = "condensed.jsonl";
const LOCK_FILE: &str = ".lock";

/// Everything a run needs; serialized into `run.json` for provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    pub output_dir: PathBuf,
    pub cache_path: PathBuf,
    pub sources: SourceConfig,
    pub provider: EmbeddingProviderConfig,
    pub num_steps: usize,
    pub ground_truth: Option<PathBuf>,
    pub dump_tree: bool,
}

impl RunConfig {
    pub fn new(corpus_dir: PathBuf, output_dir: PathBuf) -> Self {
        let cache_path = output_dir.join("embedding-cache.jsonl");
        RunConfig {
            corpus_dir,
            output_dir,
            cache_path,
            sources: SourceConfig::default(),
            provider: EmbeddingProviderConfig::default(),
            num_steps: 64,
            ground_truth: None,
            dump_tree: false,
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("output directory is locked by another run ({0})")]
    Locked(PathBuf),
    #[error("no representatives to cluster; run prepare/embed first")]
    NoRepresentatives,
    #[error("embedding of record {id} ({kind}) is degenerate: {source}")]
    DegenerateRecord {
        id: String,
        kind: String,
        source: EmbedError,
    },
    #[error("provider failed; unresolved records: {ids:?} ({message})")]
    Unresolved { ids: Vec<String>, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Exclusive ownership of an output directory for the duration of a stage.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<DirLock, PipelineError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(LOCK_FILE);
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(PipelineError::Locked(path))
            }
            Err(e) => Err(PipelineError::Io { path, source: e }),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub total_records: usize,
    pub unpreparable: Vec<String>,
    pub representatives: usize,
    pub duplicate_classes: usize,
}

/// Loads the corpus, cleans every record, collapses exact duplicates, and
/// writes `prepared.jsonl` plus `duplicates.csv`.
pub fn cmd_prepare(config: &RunConfig) -> Result<PrepareSummary, PipelineError> {
    let _lock = DirLock::acquire(&config.output_dir)?;
    let records = load_corpus(&config.corpus_dir, CorpusLayout::Flat)?;

    let mut corpus_digest = Sha256::new();
    let mut prepared = Vec::with_capacity(records.len());
    let mut unpreparable = Vec::new();
    for record in &records {
        corpus_digest.update(record.id.as_bytes());
        corpus_digest.update(content_hash(&record.trace_text).as_bytes());
        corpus_digest.update(content_hash(record.asan_text.as_deref().unwrap_or("")).as_bytes());
        match prepare(record, &config.sources) {
            Ok(p) => prepared.push(p),
            Err(PrepareError::Unpreparable { id }) => unpreparable.push(id),
        }
    }
    let corpus_hash = hex(&corpus_digest.finalize());

    let (representatives, assignment) = collapse_duplicates(&prepared);
    let mut class_sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for representative in assignment.values() {
        *class_sizes.entry(representative).or_default() += 1;
    }
    let duplicate_classes = class_sizes.values().filter(|&&size| size >= 2).count();

    let prepared_path = config.out(PREPARED_FILE);
    let mut writer = BufWriter::new(File::create(&prepared_path).map_err(io_err(&prepared_path))?);
    for record in &representatives {
        serde_json::to_writer(&mut writer, record).map_err(|e| PipelineError::Format {
            path: prepared_path.clone(),
            message: e.to_string(),
        })?;
        writer.write_all(b"\n").map_err(io_err(&prepared_path))?;
    }
    writer.flush().map_err(io_err(&prepared_path))?;

    let duplicates_path = config.out(DUPLICATES_FILE);
    let mut writer =
        BufWriter::new(File::create(&duplicates_path).map_err(io_err(&duplicates_path))?);
    writeln!(writer, "id,representative").map_err(io_err(&duplicates_path))?;
    for (id, representative) in &assignment {
        writeln!(writer, "{id},{representative}").map_err(io_err(&duplicates_path))?;
    }
    writer.flush().map_err(io_err(&duplicates_path))?;

    let summary = PrepareSummary {
        total_records: records.len(),
        unpreparable,
        representatives: representatives.len(),
        duplicate_classes,
    };
    update_run_log(config, Some(&corpus_hash), "prepare", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedSummary {
    pub records: usize,
    pub texts_embedded: usize,
    /// `id:kind` entries whose text was cut at the byte cap.
    pub truncated_texts: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VectorLine {
    id: String,
    dim: usize,
    values: Vec<f64>,
}

/// Embeds every prepared text (through the cache), combines per-source
/// vectors, and writes unit-norm vectors to `vectors.jsonl`.
pub fn cmd_embed(config: &RunConfig) -> Result<EmbedSummary, PipelineError> {
    let _lock = DirLock::acquire(&config.output_dir)?;
    let representatives = read_prepared(&config.out(PREPARED_FILE))?;

    let mut items: Vec<(String, String)> = Vec::new();
    let mut truncated_texts = Vec::new();
    for record in &representatives {
        for kind in record.present() {
            let text = record.text(kind).expect("present source has text");
            let (capped, truncated) = cap_text_bytes(text, MAX_EMBED_TEXT_BYTES);
            if truncated {
                truncated_texts.push(format!("{}:{}", record.id, kind.short_name()));
            }
            let hash = record.hash(kind).expect("present source has hash");
            items.push((hash.to_string(), capped.to_string()));
        }
    }

    let provider = config.provider.build()?;
    let cache = EmbeddingCache::open(&config.cache_path)?;
    let vectors = embed_texts(
        provider.as_ref(),
        &cache,
        &items,
        config.provider.batch_size,
    )
    .map_err(|err| match err {
        EmbedError::Provider {
            message,
            unresolved,
        } => {
            // Surface record ids, not bare content hashes.
            let mut ids: Vec<String> = representatives
                .iter()
                .filter(|r| {
                    r.present()
                        .any(|k| unresolved.iter().any(|h| Some(h.as_str()) == r.hash(k)))
                })
                .map(|r| r.id.clone())
                .collect();
            ids.dedup();
            PipelineError::Unresolved { ids, message }
        }
        other => PipelineError::Embed(other),
    })?;

    let vectors_path = config.out(VECTORS_FILE);
    let mut writer = BufWriter::new(File::create(&vectors_path).map_err(io_err(&vectors_path))?);
    for record in &representatives {
        let mut per_source: BTreeMap<crate::preprocess::SourceKind, EmbeddingVector> =
            BTreeMap::new();
        for kind in record.present() {
            let hash = record.hash(kind).expect("present");
            let full = vectors[hash].clone();
            let truncated =
                truncate_normalize(&full, config.provider.target_dim).map_err(|source| {
                    PipelineError::DegenerateRecord {
                        id: record.id.clone(),
                        kind: kind.short_name().to_string(),
                        source,
                    }
                })?;
            per_source.insert(kind, truncated);
        }
        let combined =
            combine_sources(&per_source).map_err(|source| PipelineError::DegenerateRecord {
                id: record.id.clone(),
                kind: "combined".to_string(),
                source,
            })?;
        let line = VectorLine {
            id: record.id.clone(),
            dim: combined.dim(),
            values: combined.into_values(),
        };
        serde_json::to_writer(&mut writer, &line).map_err(|e| PipelineError::Format {
            path: vectors_path.clone(),
            message: e.to_string(),
        })?;
        writer.write_all(b"\n").map_err(io_err(&vectors_path))?;
    }
    writer.flush().map_err(io_err(&vectors_path))?;

    let summary = EmbedSummary {
        records: representatives.len(),
        texts_embedded: items.len(),
        truncated_texts,
    };
    update_run_log(config, None, "embed", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub epsilon: f64,
    pub dbcv: f64,
    pub persistence: f64,
    pub effective_count: usize,
    pub candidates_considered: usize,
}

/// Clusters the representative vectors and expands cluster assignments to
/// every original crash id. Noise points become unique singleton clusters
/// named `noise-<representative id>`.
pub fn cmd_cluster(config: &RunConfig) -> Result<SelectionSummary, PipelineError> {
    let _lock = DirLock::acquire(&config.output_dir)?;
    let vectors_path = config.out(VECTORS_FILE);
    let lines = read_vector_lines(&vectors_path)?;
    if lines.is_empty() {
        return Err(PipelineError::NoRepresentatives);
    }

    let ids: Vec<String> = lines.iter().map(|l| l.id.clone()).collect();
    let coords: Vec<Vec<f64>> = lines.into_iter().map(|l| l.values).collect();
    let points = PointSet::new(ids.clone(), coords)?;

    // m_clSize = 2 and m_pts = 1: as low as possible, so single-crash bugs
    // can still form their own clusters.
    let mst = if points.len() >= 2 {
        build_mst(&points, 1)?
    } else {
        MsTree {
            n_points: 1,
            edges: vec![],
        }
    };
    let hierarchy = condense(&mst, 2)?;
    if config.dump_tree {
        let dump_path = config.out(TREE_DUMP_FILE);
        std::fs::write(&dump_path, hierarchy.to_jsonl()).map_err(io_err(&dump_path))?;
    }

    let params = SearchParams {
        num_steps: config.num_steps,
        min_dist: None,
        max_dist: None,
    };
    let candidates = gather_candidates(&points, &hierarchy, &params);
    let best = choose_best(&candidates);

    // Cluster name per representative id.
    let mut rep_cluster: BTreeMap<&str, String> = BTreeMap::new();
    for (index, id) in ids.iter().enumerate() {
        let name = match best.clustering.labels[index] {
            Some(label) => label.to_string(),
            None => format!("noise-{id}"),
        };
        rep_cluster.insert(id, name);
    }

    let assignment = read_duplicates(&config.out(DUPLICATES_FILE))?;
    let clusters_path = config.out(CLUSTERS_FILE);
    let mut writer = BufWriter::new(File::create(&clusters_path).map_err(io_err(&clusters_path))?);
    writeln!(writer, "id,cluster").map_err(io_err(&clusters_path))?;
    for (id, representative) in &assignment {
        let cluster =
            rep_cluster
                .get(representative.as_str())
                .ok_or_else(|| PipelineError::Format {
                    path: clusters_path.clone(),
                    message: format!("representative {representative} has no vector"),
                })?;
        writeln!(writer, "{id},{cluster}").map_err(io_err(&clusters_path))?;
    }
    writer.flush().map_err(io_err(&clusters_path))?;

    let summary = SelectionSummary {
        epsilon: best.clustering.epsilon,
        dbcv: best.dbcv,
        persistence: best.persistence,
        effective_count: best.effective_count,
        candidates_considered: candidates.len(),
    };
    let selection_path = config.out(SELECTION_FILE);
    write_json_pretty(&selection_path, &summary)?;
    update_run_log(config, None, "cluster", &summary)?;
    Ok(summary)
}

/// Scores `clusters.csv` against the ground-truth CSV and writes
/// `report.json` and `report.txt`.
pub fn cmd_evaluate(config: &RunConfig) -> Result<EvalReport, PipelineError> {
    let _lock = DirLock::acquire(&config.output_dir)?;
    let truth_path = config
        .ground_truth
        .as_ref()
        .ok_or_else(|| PipelineError::Format {
            path: config.out(REPORT_JSON_FILE),
            message: "evaluate requires a ground-truth csv".to_string(),
        })?;
    let truth = GroundTruth::from_csv(truth_path)?;
    let clusters = read_clusters(&config.out(CLUSTERS_FILE))?;
    let report = evaluate(&clusters, &truth)?;

    write_json_pretty(&config.out(REPORT_JSON_FILE), &report)?;
    let text_path = config.out(REPORT_TEXT_FILE);
    std::fs::write(&text_path, report.render_text()).map_err(io_err(&text_path))?;
    update_run_log(config, None, "evaluate", &report)?;
    Ok(report)
}

/// All four stages in order; evaluation runs only when ground truth is
/// configured.
pub fn cmd_run(config: &RunConfig) -> Result<(), PipelineError> {
    let prepare_summary = cmd_prepare(config)?;
    println!(
        "prepare: {} records, {} representatives, {} unpreparable",
        prepare_summary.total_records,
        prepare_summary.representatives,
        prepare_summary.unpreparable.len()
    );
    let embed_summary = cmd_embed(config)?;
    println!(
        "embed: {} records, {} texts ({} truncated)",
        embed_summary.records,
        embed_summary.texts_embedded,
        embed_summary.truncated_texts.len()
    );
    let selection = cmd_cluster(config)?;
    println!(
        "cluster: eps {:.6}, dbcv {:.4}, persistence {:.4}, effective clusters {}",
        selection.epsilon, selection.dbcv, selection.persistence, selection.effective_count
    );
    if config.ground_truth.is_some() {
        let report = cmd_evaluate(config)?;
        println!(
            "evaluate: purity {:.1}%, inverse purity {:.1}%, f-measure {:.1}%",
            report.purity * 100.0,
            report.inverse_purity * 100.0,
            report.f_measure * 100.0
        );
    }
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let body = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, body + "\n").map_err(io_err(path))
}

/// Merges one stage summary into `run.json`, refreshing config provenance.
fn update_run_log<T: Serialize>(
    config: &RunConfig,
    corpus_hash: Option<&str>,
    stage: &str,
    summary: &T,
) -> Result<(), PipelineError> {
    let path = config.out(RUN_LOG_FILE);
    let mut log: serde_json::Value = if path.exists() {
        let body = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&body).unwrap_or_else(|_| serde_json::json!({}))
    } else {
        serde_json::json!({})
    };

    let config_json = serde_json::to_value(config).map_err(|e| PipelineError::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let config_hash = hex(&Sha256::digest(config_json.to_string().as_bytes()));

    log["version"] = serde_json::json!(env!("CARGO_PKG_VERSION"));
    log["config"] = config_json;
    log["config_hash"] = serde_json::json!(config_hash);
    if let Some(hash) = corpus_hash {
        log["corpus_hash"] = serde_json::json!(hash);
    }
    if !log["stages"].is_object() {
        log["stages"] = serde_json::json!({});
    }
    log["stages"][stage] = serde_json::to_value(summary).map_err(|e| PipelineError::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;

    write_json_pretty(&path, &log)
}

fn read_prepared(path: &Path) -> Result<Vec<PreparedRecord>, PipelineError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|e| PipelineError::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?,
        );
    }
    Ok(records)
}

fn read_vector_lines(path: &Path) -> Result<Vec<VectorLine>, PipelineError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: VectorLine =
            serde_json::from_str(&line).map_err(|e| PipelineError::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        if parsed.dim != parsed.values.len() {
            return Err(PipelineError::Format {
                path: path.to_path_buf(),
                message: format!(
                    "vector {} dim {} != {}",
                    parsed.id,
                    parsed.dim,
                    parsed.values.len()
                ),
            });
        }
        lines.push(parsed);
    }
    Ok(lines)
}

fn read_duplicates(path: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| PipelineError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut assignment = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| PipelineError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        assignment.insert(
            row.get(0).unwrap_or("").to_string(),
            row.get(1).unwrap_or("").to_string(),
        );
    }
    Ok(assignment)
}

/// Reads `clusters.csv` into an id -> cluster-name map.
pub fn read_clusters(path: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| PipelineError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut clusters = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| PipelineError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        clusters.insert(
            row.get(0).unwrap_or("").to_string(),
            row.get(1).unwrap_or("").to_string(),
        );
    }
    Ok(clusters)
}
