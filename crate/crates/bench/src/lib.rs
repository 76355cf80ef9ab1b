//! Shared helpers for the criterion benchmarks.

use crashdedup_core::hdbscan::PointSet;

/// Deterministic unit vectors drawn from `clusters` spherical blobs.
pub fn blob_points(n: usize, dim: usize, clusters: usize, seed: u64) -> PointSet {
    // SplitMix64 stream; benchmark data only needs to be stable.
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        (z ^ (z >> 31)) as f64 / u64::MAX as f64 - 0.5
    };

    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| normalize((0..dim).map(|_| next()).collect()))
        .collect();
    let coords = (0..n)
        .map(|i| {
            let center = &centers[i % clusters];
            let jittered: Vec<f64> = center.iter().map(|c| c + 0.05 * next()).collect();
            normalize(jittered)
        })
        .collect();
    PointSet::raw(coords).expect("points")
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}
