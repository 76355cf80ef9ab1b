//! Crash deduplication engine.
//!
//! Groups fuzzer-found crashing inputs by underlying bug: stack traces and
//! AddressSanitizer reports are cleaned into canonical texts, embedded as
//! unit-norm vectors, clustered with hybrid density-based extraction under an
//! automated epsilon search, and scored against ground-truth labels.
//!
//! The pipeline is split into independently re-runnable stages (prepare,
//! embed, cluster, evaluate) that communicate through line-delimited JSON and
//! CSV files; see [`pipeline`] for the stage drivers used by the CLI.

pub mod embed;
pub mod hdbscan;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod search;
pub mod synthetic;

pub use embed::{combine_sources, offline_embed, truncate_normalize, EmbeddingVector};
pub use hdbscan::{
    build_mst, clustering_persistence, condense, extract_hybrid, Clustering, CondensedHierarchy,
    MutualReachability, PointSet,
};
pub use ingest::{load_corpus, parse_asan, parse_trace, AsanReport, CrashRecord, StackTrace};
pub use metrics::{contingency, purity_scores, EvalReport, GroundTruth};
pub use preprocess::{collapse_duplicates, prepare, PreparedRecord, SourceConfig, SourceKind};
pub use search::{choose_best, cluster_search, dbcv, CandidateClustering, SearchParams};
