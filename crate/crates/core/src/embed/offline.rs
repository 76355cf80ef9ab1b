//! Deterministic offline embedder based on signed feature hashing.
//!
//! A stand-in for a remote embedding model: tokenizes on non-alphanumeric
//! boundaries, hashes every token and every 3-gram of consecutive tokens
//! into one of `dim` signed buckets, accumulates counts, and normalizes the
//! result to unit norm. Identical text always yields the identical vector.

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};

/// Stable 64-bit FNV-1a with the seed folded into the offset basis; the
/// bucket and sign must not depend on platform or std hasher internals.
fn fnv1a(seed: u64, marker: u8, parts: &[&str]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut eat = |byte: u8| {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    eat(marker);
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            eat(0x1f);
        }
        for byte in part.bytes() {
            eat(byte);
        }
    }
    h
}

fn tokens(text: &str) -> Vec<&str> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Raw signed-count accumulation before normalization. Exposed so tests can
/// count exactly which buckets a text edit touches.
pub fn hash_features(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    assert!(dim >= 8, "offline embedding dimension must be at least 8");
    let tokens = tokens(text);
    let mut counts = vec![0.0f64; dim];
    let mut add = |h: u64| {
        let bucket = (h % dim as u64) as usize;
        let sign = if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
        counts[bucket] += sign;
    };
    for token in &tokens {
        add(fnv1a(seed, b'1', &[token]));
    }
    for window in tokens.windows(3) {
        add(fnv1a(seed, b'3', window));
    }
    counts
}

/// Deterministic unit-norm embedding of `text`.
///
/// Text with no tokens (or whose signed counts cancel entirely) maps to the
/// first basis vector rather than a zero vector.
pub fn offline_embed(text: &str, dim: usize, seed: u64) -> EmbeddingVector {
    let mut counts = hash_features(text, dim, seed);
    let norm = super::l2_norm(&counts);
    if norm < 1e-12 {
        counts.iter_mut().for_each(|v| *v = 0.0);
        counts[0] = 1.0;
    } else {
        counts.iter_mut().for_each(|v| *v /= norm);
    }
    EmbeddingVector::unit(counts).expect("normalized vector is unit")
}

/// Offline provider wrapper around [`offline_embed`].
#[derive(Debug, Clone)]
pub struct OfflineEmbedder {
    dim: usize,
    seed: u64,
}

impl OfflineEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        OfflineEmbedder { dim, seed }
    }
}

impl EmbeddingProvider for OfflineEmbedder {
    fn model_id(&self) -> String {
        // Seed and dimension are part of the identity: cached vectors from
        // one setting must never be served for another.
        format!("offline-fh-d{}-s{}", self.dim, self.seed)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts
            .iter()
            .map(|t| offline_embed(t, self.dim, self.seed))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_text_identical_vector() {
        let a = offline_embed("free(): invalid pointer at depth 3", 64, 42);
        let b = offline_embed("free(): invalid pointer at depth 3", 64, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn seed_changes_vector() {
        let a = offline_embed("same text", 64, 1);
        let b = offline_embed("same text", 64, 2);
        assert_ne!(a, b);
    }

    #[test]
    fn always_unit_norm() {
        for text in ["", "x", "a b c d e f g", "#0 foo (a=1) at foo.c:42"] {
            let v = offline_embed(text, 32, 9);
            assert!((v.norm() - 1.0).abs() <= 1e-6, "norm off for {text:?}");
        }
    }

    #[test]
    fn empty_text_maps_to_first_basis_vector() {
        let v = offline_embed("", 16, 5);
        assert_eq!(v.values()[0], 1.0);
        assert!(v.values()[1..].iter().all(|&x| x == 0.0));
        // No-token text behaves the same.
        assert_eq!(offline_embed("!!! ---", 16, 5), v);
    }

    #[test]
    fn single_token_edit_touches_at_most_eight_buckets() {
        // One token change affects one unigram and up to three 3-grams per
        // variant, each landing in a single bucket.
        let base = "alpha beta gamma delta epsilon zeta eta";
        let edit = "alpha beta gamma DELTA epsilon zeta eta";
        for seed in 0..20 {
            let a = hash_features(base, 64, seed);
            let b = hash_features(edit, 64, seed);
            let differing = a
                .iter()
                .zip(&b)
                .filter(|(x, y)| (**x - **y).abs() > 1e-12)
                .count();
            assert!(differing <= 8, "seed {seed}: {differing} buckets differ");
        }
    }

    #[test]
    fn provider_batch_matches_direct_calls() {
        let provider = OfflineEmbedder::new(24, 11);
        let batch = provider.embed_batch(&["one", "two"]).unwrap();
        assert_eq!(batch[0], offline_embed("one", 24, 11));
        assert_eq!(batch[1], offline_embed("two", 24, 11));
        assert_eq!(provider.model_id(), "offline-fh-d24-s11");
    }
}
