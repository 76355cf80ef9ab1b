//! Embedding vectors: providers, caching, truncation, and combination.
//!
//! Each cleaned text is embedded once (cache keyed by model id and content
//! hash), truncated to the target dimension, rescaled to unit norm, and the
//! per-source vectors of a crash are summed after per-source normalization
//! and renormalized. All downstream distances are Euclidean; on unit-norm
//! vectors the Euclidean and cosine orderings agree.

mod cache;
mod offline;
mod remote;

pub use cache::EmbeddingCache;
pub use offline::{hash_features, offline_embed, OfflineEmbedder};
pub use remote::RemoteProvider;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::SourceKind;

/// Texts longer than this are truncated at a line boundary before being
/// sent to a provider; the pipeline records which records were affected.
pub const MAX_EMBED_TEXT_BYTES: usize = 100_000;

/// A fixed-dimension real vector with a recorded norm state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    unit_norm: bool,
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding vector contains non-finite entries")]
    NonFinite,
    #[error("vector claimed unit norm but has norm {norm}")]
    NotUnitNorm { norm: f64 },
    #[error("cannot truncate dim-{dim} vector to {target} dimensions")]
    TruncateTooLong { dim: usize, target: usize },
    #[error("truncated prefix has zero norm (degenerate vector)")]
    DegenerateVector,
    #[error("combined sources cancel to a near-zero vector")]
    DegenerateCombination,
    #[error("no source vectors to combine")]
    NoSources,
    #[error("source vectors have mismatched dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("provider request failed ({message}); {} hashes unresolved", unresolved.len())]
    Provider {
        message: String,
        /// Content hashes that still need embeddings; the cache already
        /// holds everything resolved before the failure.
        unresolved: Vec<String>,
    },
    #[error("provider protocol error: {0}")]
    Protocol(String),
    #[error("api key environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("embedding cache i/o failed: {0}")]
    Cache(#[from] std::io::Error),
    #[error("embedding cache line is not valid JSON: {0}")]
    CacheFormat(#[from] serde_json::Error),
}

impl EmbeddingVector {
    /// Wraps raw provider output. Entries must be finite.
    pub fn raw(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(EmbeddingVector {
            values,
            unit_norm: false,
        })
    }

    /// Wraps values already scaled to unit norm (within 1e-6).
    pub fn unit(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > 1e-6 {
            return Err(EmbedError::NotUnitNorm { norm });
        }
        Ok(EmbeddingVector {
            values,
            unit_norm: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_unit_norm(&self) -> bool {
        self.unit_norm
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub(crate) fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Which provider backs the embedding stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Remote,
    Offline,
}

/// Configuration for the embedding stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingProviderConfig {
    pub kind: ProviderKind,
    /// Model identifier; part of every cache key.
    pub model: String,
    /// Base URL of the embeddings API (remote only).
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    /// Maximum number of texts per provider request.
    pub batch_size: usize,
    /// Final vector dimension after truncation.
    pub target_dim: usize,
    /// Feature-hash seed (offline only).
    pub seed: u64,
    /// Output dimension of the offline embedder.
    pub offline_dim: usize,
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        EmbeddingProviderConfig {
            kind: ProviderKind::Offline,
            model: String::new(),
            endpoint: String::new(),
            api_key_env: "DEDUP_API_KEY".to_string(),
            batch_size: 128,
            target_dim: 64,
            seed: 0,
            offline_dim: 64,
        }
    }
}

impl EmbeddingProviderConfig {
    /// Instantiates the configured provider. The offline model id encodes
    /// dimension and seed so cache keys never collide across settings.
    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
        match self.kind {
            ProviderKind::Offline => {
                Ok(Box::new(OfflineEmbedder::new(self.offline_dim, self.seed)))
            }
            ProviderKind::Remote => Ok(Box::new(RemoteProvider::new(
                self.endpoint.clone(),
                self.model.clone(),
                self.api_key_env.clone(),
            ))),
        }
    }
}

/// A source of embedding vectors for batches of texts.
pub trait EmbeddingProvider: Send + Sync {
    /// Identifier under which this provider's vectors are cached.
    fn model_id(&self) -> String;

    /// Embeds `texts`, one vector per input, in order.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

/// Resolves embeddings for `(content hash, text)` items through the cache.
///
/// Cache hits are returned as stored; misses are deduplicated, batched into
/// provider requests of at most `batch_size` inputs, and written back to the
/// cache as soon as each batch returns, so a failure loses no progress. The
/// result covers every requested hash exactly once.
pub fn embed_texts(
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    items: &[(String, String)],
    batch_size: usize,
) -> Result<BTreeMap<String, EmbeddingVector>, EmbedError> {
    assert!(batch_size > 0, "batch size must be positive");
    let model = provider.model_id();

    let mut resolved: BTreeMap<String, EmbeddingVector> = BTreeMap::new();
    let mut misses: Vec<(&str, &str)> = Vec::new();
    for (hash, text) in items {
        if resolved.contains_key(hash) || misses.iter().any(|(h, _)| h == hash) {
            continue;
        }
        match cache.get(&model, hash) {
            Some(vector) => {
                resolved.insert(hash.clone(), vector);
            }
            None => misses.push((hash, text)),
        }
    }

    let mut remaining: &[(&str, &str)] = &misses;
    while !remaining.is_empty() {
        let take = remaining.len().min(batch_size);
        let (batch, rest) = remaining.split_at(take);
        let texts: Vec<&str> = batch.iter().map(|(_, t)| *t).collect();
        let vectors = provider.embed_batch(&texts).map_err(|err| match err {
            EmbedError::Protocol(_) => err,
            other => EmbedError::Provider {
                message: other.to_string(),
                unresolved: remaining.iter().map(|(h, _)| h.to_string()).collect(),
            },
        })?;
        if vectors.len() != batch.len() {
            return Err(EmbedError::Protocol(format!(
                "provider returned {} vectors for {} inputs",
                vectors.len(),
                batch.len()
            )));
        }
        for ((hash, _), vector) in batch.iter().zip(vectors) {
            cache.put(&model, hash, &vector)?;
            resolved.insert(hash.to_string(), vector);
        }
        remaining = rest;
    }

    Ok(resolved)
}

/// Keeps the first `target_dim` entries and rescales them to unit norm.
///
/// Valid for models trained so that early vector components carry the
/// coarsest information; the truncated prefix of a unit vector is sub-unit,
/// so rescaling restores the norm the distance equivalence relies on.
pub fn truncate_normalize(
    vector: &EmbeddingVector,
    target_dim: usize,
) -> Result<EmbeddingVector, EmbedError> {
    if target_dim > vector.dim() {
        return Err(EmbedError::TruncateTooLong {
            dim: vector.dim(),
            target: target_dim,
        });
    }
    let prefix = &vector.values()[..target_dim];
    let norm = l2_norm(prefix);
    if norm < 1e-12 {
        return Err(EmbedError::DegenerateVector);
    }
    let values = prefix.iter().map(|v| v / norm).collect();
    Ok(EmbeddingVector {
        values,
        unit_norm: true,
    })
}

/// Combines per-source vectors into one unit vector:
/// each present vector is divided by its Euclidean norm, the normalized
/// vectors are summed, and the sum is renormalized. Summing (rather than
/// concatenating) amplifies features shared across sources; absent sources
/// contribute nothing.
pub fn combine_sources(
    sources: &BTreeMap<SourceKind, EmbeddingVector>,
) -> Result<EmbeddingVector, EmbedError> {
    let mut iter = sources.values();
    let Some(first) = iter.next() else {
        return Err(EmbedError::NoSources);
    };
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for vector in sources.values() {
        if vector.dim() != dim {
            return Err(EmbedError::DimensionMismatch(dim, vector.dim()));
        }
        let norm = vector.norm();
        if norm < 1e-12 {
            return Err(EmbedError::DegenerateVector);
        }
        for (acc, v) in sum.iter_mut().zip(vector.values()) {
            *acc += v / norm;
        }
    }
    let norm = l2_norm(&sum);
    if norm < 1e-12 {
        return Err(EmbedError::DegenerateCombination);
    }
    for v in &mut sum {
        *v /= norm;
    }
    Ok(EmbeddingVector {
        values: sum,
        unit_norm: true,
    })
}

/// Truncates `text` to at most `max_bytes`, cutting at the last line
/// boundary that fits (or at a char boundary when a single line exceeds the
/// cap). Returns the text unchanged when it already fits.
pub fn cap_text_bytes(text: &str, max_bytes: usize) -> (&str, bool) {
    if text.len() <= max_bytes {
        return (text, false);
    }
    let mut limit = max_bytes;
    while !text.is_char_boundary(limit) {
        limit -= 1;
    }
    match text[..limit].rfind('\n') {
        Some(cut) => (&text[..cut], true),
        None => (&text[..limit], true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    /// Test provider that records batch sizes and embeds deterministically.
    struct CountingProvider {
        calls: Mutex<Vec<usize>>,
        fail_after: Option<usize>,
        served: AtomicUsize,
    }

    impl CountingProvider {
        fn new() -> Self {
            CountingProvider {
                calls: Mutex::new(Vec::new()),
                fail_after: None,
                served: AtomicUsize::new(0),
            }
        }

        fn failing_after(batches: usize) -> Self {
            CountingProvider {
                calls: Mutex::new(Vec::new()),
                fail_after: Some(batches),
                served: AtomicUsize::new(0),
            }
        }
    }

    impl EmbeddingProvider for CountingProvider {
        fn model_id(&self) -> String {
            "counting-test".to_string()
        }

        fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
            let batch_no = self.served.fetch_add(1, Ordering::SeqCst);
            if let Some(limit) = self.fail_after {
                if batch_no >= limit {
                    return Err(EmbedError::Provider {
                        message: "simulated outage".to_string(),
                        unresolved: Vec::new(),
                    });
                }
            }
            self.calls.lock().unwrap().push(texts.len());
            Ok(texts.iter().map(|t| offline_embed(t, 16, 7)).collect())
        }
    }

    fn items(n: usize) -> Vec<(String, String)> {
        (0..n)
            .map(|i| (format!("hash{i:03}"), format!("text number {i}")))
            .collect()
    }

    fn temp_cache() -> (tempfile::TempDir, EmbeddingCache) {
        let dir = tempfile::tempdir().expect("tempdir");
        let cache = EmbeddingCache::open(&dir.path().join("cache.jsonl")).expect("cache");
        (dir, cache)
    }

    #[test]
    fn cached_items_skip_the_provider() {
        let (_dir, cache) = temp_cache();
        let provider = CountingProvider::new();
        let all = items(3);

        // Warm two of three.
        embed_texts(&provider, &cache, &all[..2], 100).expect("warm");
        provider.calls.lock().unwrap().clear();

        embed_texts(&provider, &cache, &all, 100).expect("embed");
        assert_eq!(*provider.calls.lock().unwrap(), vec![1]);
    }

    #[test]
    fn fully_cached_input_makes_zero_calls() {
        let (_dir, cache) = temp_cache();
        let provider = CountingProvider::new();
        let all = items(4);
        embed_texts(&provider, &cache, &all, 100).expect("warm");
        provider.calls.lock().unwrap().clear();

        let result = embed_texts(&provider, &cache, &all, 100).expect("cached");
        assert!(provider.calls.lock().unwrap().is_empty());
        assert_eq!(result.len(), 4);
    }

    #[test]
    fn misses_are_chunked_by_batch_size() {
        let (_dir, cache) = temp_cache();
        let provider = CountingProvider::new();
        embed_texts(&provider, &cache, &items(250), 100).expect("embed");
        assert_eq!(*provider.calls.lock().unwrap(), vec![100, 100, 50]);
    }

    #[test]
    fn repeated_hashes_resolve_once() {
        let (_dir, cache) = temp_cache();
        let provider = CountingProvider::new();
        let mut all = items(2);
        all.push(all[0].clone());
        let result = embed_texts(&provider, &cache, &all, 100).expect("embed");
        assert_eq!(result.len(), 2);
        assert_eq!(*provider.calls.lock().unwrap(), vec![2]);
    }

    #[test]
    fn wrong_vector_count_is_a_protocol_error() {
        struct ShortProvider;
        impl EmbeddingProvider for ShortProvider {
            fn model_id(&self) -> String {
                "short".to_string()
            }
            fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
                Ok(texts[..texts.len() - 1]
                    .iter()
                    .map(|t| offline_embed(t, 16, 0))
                    .collect())
            }
        }
        let (_dir, cache) = temp_cache();
        let err = embed_texts(&ShortProvider, &cache, &items(3), 100).expect_err("must fail");
        assert!(matches!(err, EmbedError::Protocol(_)), "got {err}");
    }

    #[test]
    fn provider_failure_reports_unresolved_and_keeps_progress() {
        let (_dir, cache) = temp_cache();
        let provider = CountingProvider::failing_after(1);
        let all = items(5);
        let err = embed_texts(&provider, &cache, &all, 2).expect_err("should fail");
        match err {
            EmbedError::Provider { unresolved, .. } => {
                // First batch of 2 succeeded; 3 remain.
                assert_eq!(unresolved.len(), 3);
                assert!(unresolved.contains(&"hash002".to_string()));
            }
            other => panic!("expected provider error, got {other}"),
        }
        assert!(cache.get("counting-test", "hash000").is_some());
        assert!(cache.get("counting-test", "hash001").is_some());
        assert!(cache.get("counting-test", "hash002").is_none());
    }

    #[test]
    fn truncate_keeps_already_unit_prefix() {
        let v = EmbeddingVector::raw(vec![0.6, 0.8, 0.0, 0.0]).unwrap();
        let t = truncate_normalize(&v, 2).unwrap();
        assert!((t.values()[0] - 0.6).abs() < 1e-12);
        assert!((t.values()[1] - 0.8).abs() < 1e-12);
        assert!(t.is_unit_norm());
    }

    #[test]
    fn truncate_rescales_prefix() {
        let v = EmbeddingVector::raw(vec![1.0, 1.0, 7.0, 7.0]).unwrap();
        let t = truncate_normalize(&v, 2).unwrap();
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert!((t.values()[0] - expected).abs() < 1e-12);
        assert!((t.values()[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn truncate_zero_prefix_is_degenerate() {
        let v = EmbeddingVector::raw(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            truncate_normalize(&v, 2),
            Err(EmbedError::DegenerateVector)
        ));
    }

    fn unit_basis(dim: usize, axis: usize) -> EmbeddingVector {
        let mut values = vec![0.0; dim];
        values[axis] = 1.0;
        EmbeddingVector::unit(values).unwrap()
    }

    #[test]
    fn combine_orthonormal_pair() {
        let mut sources = BTreeMap::new();
        sources.insert(SourceKind::FullTrace, unit_basis(4, 0));
        sources.insert(SourceKind::CoarseTrace, unit_basis(4, 1));
        let combined = combine_sources(&sources).unwrap();
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert!((combined.values()[0] - expected).abs() < 1e-12);
        assert!((combined.values()[1] - expected).abs() < 1e-12);
        assert!(combined.values()[2].abs() < 1e-12);
    }

    #[test]
    fn combine_identical_unit_vectors_is_identity() {
        let v = offline_embed("some text", 16, 3);
        let mut sources = BTreeMap::new();
        sources.insert(SourceKind::FullTrace, v.clone());
        sources.insert(SourceKind::CoarseTrace, v.clone());
        sources.insert(SourceKind::AsanReport, v.clone());
        let combined = combine_sources(&sources).unwrap();
        for (got, want) in combined.values().iter().zip(v.values()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn combine_matches_direct_formula_on_random_vectors() {
        // Independent evaluation of sum(v/|v|) then renormalize.
        let vectors: Vec<EmbeddingVector> = (0..3)
            .map(|i| offline_embed(&format!("vector {i}"), 12, 99))
            .collect();
        let mut sources = BTreeMap::new();
        sources.insert(SourceKind::FullTrace, vectors[0].clone());
        sources.insert(SourceKind::CoarseTrace, vectors[1].clone());
        sources.insert(SourceKind::AsanReport, vectors[2].clone());
        let combined = combine_sources(&sources).unwrap();

        let mut expected = vec![0.0; 12];
        for v in &vectors {
            let n = (v.values().iter().map(|x| x * x).sum::<f64>()).sqrt();
            for (e, x) in expected.iter_mut().zip(v.values()) {
                *e += x / n;
            }
        }
        let n = (expected.iter().map(|x| x * x).sum::<f64>()).sqrt();
        for e in &mut expected {
            *e /= n;
        }
        for (got, want) in combined.values().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn combine_antipodal_vectors_is_degenerate() {
        let plus = EmbeddingVector::unit(vec![1.0, 0.0]).unwrap();
        let minus = EmbeddingVector::unit(vec![-1.0, 0.0]).unwrap();
        let mut sources = BTreeMap::new();
        sources.insert(SourceKind::FullTrace, plus);
        sources.insert(SourceKind::CoarseTrace, minus);
        assert!(matches!(
            combine_sources(&sources),
            Err(EmbedError::DegenerateCombination)
        ));
    }

    #[test]
    fn combine_is_scale_invariant_per_input() {
        let a = offline_embed("alpha", 10, 1);
        let b = offline_embed("beta", 10, 1);
        let scaled = EmbeddingVector::raw(a.values().iter().map(|v| v * 37.5).collect()).unwrap();

        let mut plain = BTreeMap::new();
        plain.insert(SourceKind::FullTrace, a);
        plain.insert(SourceKind::CoarseTrace, b.clone());
        let mut scaled_map = BTreeMap::new();
        scaled_map.insert(SourceKind::FullTrace, scaled);
        scaled_map.insert(SourceKind::CoarseTrace, b);

        let one = combine_sources(&plain).unwrap();
        let two = combine_sources(&scaled_map).unwrap();
        for (x, y) in one.values().iter().zip(two.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cap_text_prefers_line_boundary() {
        let text = "line one\nline two\nline three";
        let (capped, truncated) = cap_text_bytes(text, 12);
        assert!(truncated);
        assert_eq!(capped, "line one");
        let (uncapped, untruncated) = cap_text_bytes(text, 1000);
        assert!(!untruncated);
        assert_eq!(uncapped, text);
    }

    #[test]
    fn cap_text_without_newline_cuts_at_char_boundary() {
        let text = "aaaa\u{00e9}"; // 4 + 2 bytes
        let (capped, truncated) = cap_text_bytes(text, 5);
        assert!(truncated);
        assert_eq!(capped, "aaaa");
    }
}
