//! Epsilon search and best-clustering selection.
//!
//! The search seeds a FIFO queue with the data's distance range, extracts a
//! clustering at both ends of each interval, and subdivides only where the
//! endpoint partitions differ — extraction changes monotonically with
//! epsilon, so intervals with equal endpoints hide nothing. Every distinct
//! candidate partition is scored with DBCV (density-based cluster validity)
//! and persistence, and the winner is picked by a three-stage filter that
//! prefers validity, then persistence, then fewer clusters (noise counted
//! as one cluster per point).

use std::collections::VecDeque;

use crate::hdbscan::{
    clustering_persistence, extract_hybrid, Clustering, CondensedHierarchy, EpsilonSweep,
    ExtractionMode, PointSet,
};

/// A scored candidate partition.
#[derive(Debug, Clone)]
pub struct CandidateClustering {
    pub clustering: Clustering,
    /// Density-based cluster validity in [-1, 1].
    pub dbcv: f64,
    /// Normalized width of the epsilon interval producing this partition.
    pub persistence: f64,
    /// Non-noise cluster count plus one per noise point.
    pub effective_count: usize,
}

/// Parameters of the epsilon search.
#[derive(Debug, Clone, Copy)]
pub struct SearchParams {
    /// Upper bound on queue iterations, and the divisor for the interval
    /// shrink step. The interval endpoints default to the dataset's minimum
    /// and maximum positive pairwise distances.
    pub num_steps: usize,
    pub min_dist: Option<f64>,
    pub max_dist: Option<f64>,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            num_steps: 64,
            min_dist: None,
            max_dist: None,
        }
    }
}

/// Non-noise clusters plus each noise point as its own cluster.
pub fn effective_count(clustering: &Clustering) -> usize {
    clustering.num_clusters() + clustering.noise_count()
}

/// Runs the bounded interval-subdivision search and returns the distinct
/// candidate partitions it visited, scored, in ascending epsilon order.
/// Each partition is recorded with the smallest epsilon that produced it.
pub fn gather_candidates(
    points: &PointSet,
    hierarchy: &CondensedHierarchy,
    params: &SearchParams,
) -> Vec<CandidateClustering> {
    assert_eq!(
        hierarchy.n_points,
        points.len(),
        "hierarchy built from a different point set"
    );
    let n = points.len();
    if n == 1 {
        return vec![singleton_candidate()];
    }
    let Some((data_min, data_max)) = points.positive_distance_range() else {
        // All points coincident: one cluster at any epsilon.
        let clustering = extract_hybrid(hierarchy, 0.0);
        let count = effective_count(&clustering);
        let dbcv_score = dbcv(points, &clustering.labels);
        return vec![CandidateClustering {
            clustering,
            dbcv: dbcv_score,
            persistence: 1.0,
            effective_count: count,
        }];
    };
    let min_dist = params.min_dist.unwrap_or(data_min);
    let max_dist = params.max_dist.unwrap_or(data_max);
    let num_steps = params.num_steps.max(1);

    let mut raw: Vec<(f64, Clustering)> = Vec::new();
    let mut queue: VecDeque<(f64, f64)> = VecDeque::from([(min_dist, max_dist)]);
    let mut steps = 0usize;
    while let Some((eps_start, eps_end)) = queue.pop_front() {
        if steps >= num_steps {
            break;
        }
        let clustering_start = extract_hybrid(hierarchy, eps_start);
        let clustering_end = extract_hybrid(hierarchy, eps_end);
        let differ = !clustering_start.same_partition(&clustering_end);
        raw.push((eps_start, clustering_start));
        raw.push((eps_end, clustering_end));
        if differ {
            let eps_mid = (eps_start + eps_end) / 2.0;
            let step = (eps_mid - eps_start) / num_steps as f64;
            queue.push_back((eps_start + step, eps_mid));
            queue.push_back((eps_mid + step, eps_end - step));
        }
        steps += 1;
    }

    // Deduplicate by partition, keeping the smallest epsilon per partition,
    // so the expensive scoring runs once per distinct clustering.
    let mut unique: Vec<(f64, Clustering)> = Vec::new();
    for (eps, clustering) in raw {
        match unique
            .iter_mut()
            .find(|(_, c)| c.same_partition(&clustering))
        {
            Some((kept_eps, kept)) => {
                if eps < *kept_eps {
                    *kept_eps = eps;
                    *kept = clustering;
                }
            }
            None => unique.push((eps, clustering)),
        }
    }
    unique.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite epsilon"));

    let sweep = EpsilonSweep::new(hierarchy);
    unique
        .into_iter()
        .map(|(eps, mut clustering)| {
            clustering.epsilon = eps;
            let dbcv_score = dbcv(points, &clustering.labels);
            let persistence = clustering_persistence(&sweep, points, &clustering);
            let count = effective_count(&clustering);
            CandidateClustering {
                clustering,
                dbcv: dbcv_score,
                persistence,
                effective_count: count,
            }
        })
        .collect()
}

fn singleton_candidate() -> CandidateClustering {
    CandidateClustering {
        clustering: Clustering {
            labels: vec![Some(0)],
            epsilon: 0.0,
            mode: ExtractionMode::ExcessOfMass,
        },
        dbcv: 0.0,
        persistence: 1.0,
        effective_count: 1,
    }
}

/// Searches for the best clustering of `points` under `hierarchy`.
///
/// A single point needs no search and comes back as one singleton cluster.
pub fn cluster_search(
    points: &PointSet,
    hierarchy: &CondensedHierarchy,
    params: &SearchParams,
) -> CandidateClustering {
    let candidates = gather_candidates(points, hierarchy, params);
    choose_best(&candidates).clone()
}

/// Three-stage selection over scored candidates:
/// 1. keep candidates whose DBCV is within 20% of the maximum (all of them
///    when the maximum is exactly 0), truncated to the 10 best;
/// 2. among those, keep candidates whose persistence is within 20% of the
///    best survivor;
/// 3. return the survivor with the fewest effective clusters, breaking ties
///    by higher persistence, then higher DBCV, then smaller epsilon.
pub fn choose_best(candidates: &[CandidateClustering]) -> &CandidateClustering {
    assert!(!candidates.is_empty(), "choose_best needs candidates");

    let max_dbcv = candidates
        .iter()
        .map(|c| c.dbcv)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut survivors: Vec<&CandidateClustering> = if max_dbcv == 0.0 {
        candidates.iter().collect()
    } else {
        let threshold = max_dbcv - 0.2 * max_dbcv.abs();
        candidates.iter().filter(|c| c.dbcv >= threshold).collect()
    };

    // Canonical order so the truncation is independent of input order.
    survivors.sort_by(|a, b| {
        b.dbcv
            .partial_cmp(&a.dbcv)
            .expect("finite dbcv")
            .then(
                b.persistence
                    .partial_cmp(&a.persistence)
                    .expect("finite persistence"),
            )
            .then(a.effective_count.cmp(&b.effective_count))
            .then(
                a.clustering
                    .epsilon
                    .partial_cmp(&b.clustering.epsilon)
                    .expect("finite epsilon"),
            )
    });
    survivors.truncate(10);

    let max_persistence = survivors
        .iter()
        .map(|c| c.persistence)
        .fold(f64::NEG_INFINITY, f64::max);
    survivors.retain(|c| c.persistence >= 0.8 * max_persistence);

    survivors
        .into_iter()
        .min_by(|a, b| {
            a.effective_count
                .cmp(&b.effective_count)
                .then(
                    b.persistence
                        .partial_cmp(&a.persistence)
                        .expect("finite persistence"),
                )
                .then(b.dbcv.partial_cmp(&a.dbcv).expect("finite dbcv"))
                .then(
                    a.clustering
                        .epsilon
                        .partial_cmp(&b.clustering.epsilon)
                        .expect("finite epsilon"),
                )
        })
        .expect("survivors non-empty")
}

/// Density-based cluster validity (DBCV) in [-1, 1].
///
/// Within each cluster of size >= 2, every point gets an all-points core
/// distance; the cluster's density sparseness is the largest internal edge
/// of the minimum spanning tree under all-points mutual reachability, and
/// the separation between two clusters is the smallest reachability between
/// their internal nodes. The index is the size-weighted sum of
/// `(min separation - sparseness) / max(min separation, sparseness)`.
///
/// Mutual reachability takes the max of three quantities, so exact weight
/// ties are structural, and which MST we get matters because internal nodes
/// are defined by tree degree. The tree is pinned to be well-defined from
/// distances alone (independent of point order and of rigid motions):
/// members are ranked by their within-cluster sorted-distance profiles and
/// the MST is Kruskal over edges sorted by (weight, min rank, max rank).
///
/// Pinned degenerate rules: clusters of size 1 — including each noise point
/// treated as a singleton — have validity 0; with fewer than two clusters of
/// size >= 2 the index is 0.
pub fn dbcv(points: &PointSet, labels: &[Option<usize>]) -> f64 {
    assert_eq!(points.len(), labels.len(), "labels must cover all points");
    let n_total = points.len();

    let num_labels = labels.iter().filter_map(|l| *l).max().map_or(0, |m| m + 1);
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); num_labels];
    for (point, label) in labels.iter().enumerate() {
        if let Some(l) = *label {
            clusters[l].push(point);
        }
    }
    let mut real: Vec<Vec<usize>> = clusters.into_iter().filter(|c| c.len() >= 2).collect();
    if real.len() < 2 {
        return 0.0;
    }
    for members in &mut real {
        let profiles: Vec<Vec<f64>> = members
            .iter()
            .map(|&o| distance_profile(points, o, members))
            .collect();
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by(|&a, &b| lex_order(&profiles[a], &profiles[b]));
        *members = order.into_iter().map(|i| members[i]).collect();
    }

    let dim = points.dim() as f64;

    // All-points core distance of each member within its own cluster.
    let apts: Vec<Vec<f64>> = real
        .iter()
        .map(|members| {
            members
                .iter()
                .map(|&o| {
                    let sum: f64 = members
                        .iter()
                        .filter(|&&other| other != o)
                        .map(|&other| (1.0 / points.euclidean(o, other)).powf(dim))
                        .sum();
                    (sum / (members.len() - 1) as f64).powf(-1.0 / dim)
                })
                .collect()
        })
        .collect();

    let mreach = |ci: usize, i: usize, cj: usize, j: usize| -> f64 {
        let d = points.euclidean(real[ci][i], real[cj][j]);
        d.max(apts[ci][i]).max(apts[cj][j])
    };

    // Per cluster: density sparseness and internal nodes of the pinned MST.
    // Clusters too small for internal nodes (size 2) fall back to all
    // nodes / all edges.
    let mut sparseness = Vec::with_capacity(real.len());
    let mut internals: Vec<Vec<usize>> = Vec::with_capacity(real.len());
    for (ci, members) in real.iter().enumerate() {
        let k = members.len();
        let mut all_edges: Vec<(usize, usize, f64)> = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in (i + 1)..k {
                all_edges.push((i, j, mreach(ci, i, ci, j)));
            }
        }
        all_edges.sort_by(|x, y| {
            x.2.partial_cmp(&y.2)
                .expect("finite weights")
                .then(x.0.cmp(&y.0))
                .then(x.1.cmp(&y.1))
        });
        let mut component: Vec<usize> = (0..k).collect();
        let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(k - 1);
        for (a, b, w) in all_edges {
            let (ca, cb) = (component[a], component[b]);
            if ca == cb {
                continue;
            }
            for c in component.iter_mut() {
                if *c == cb {
                    *c = ca;
                }
            }
            edges.push((a, b, w));
            if edges.len() == k - 1 {
                break;
            }
        }

        let mut degree = vec![0usize; k];
        for &(a, b, _) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let internal: Vec<usize> = (0..k).filter(|&i| degree[i] >= 2).collect();
        let internal_edges: Vec<f64> = edges
            .iter()
            .filter(|&&(a, b, _)| degree[a] >= 2 && degree[b] >= 2)
            .map(|&(_, _, w)| w)
            .collect();
        let dsc = if internal_edges.is_empty() {
            edges.iter().map(|&(_, _, w)| w).fold(0.0, f64::max)
        } else {
            internal_edges.into_iter().fold(0.0, f64::max)
        };
        sparseness.push(dsc);
        internals.push(if internal.is_empty() {
            (0..k).collect()
        } else {
            internal
        });
    }

    let separation = |ci: usize, cj: usize| -> f64 {
        let mut best = f64::INFINITY;
        for &i in &internals[ci] {
            for &j in &internals[cj] {
                best = best.min(mreach(ci, i, cj, j));
            }
        }
        best
    };

    let mut index = 0.0;
    for ci in 0..real.len() {
        let min_sep = (0..real.len())
            .filter(|&cj| cj != ci)
            .map(|cj| separation(ci, cj))
            .fold(f64::INFINITY, f64::min);
        let denom = min_sep.max(sparseness[ci]);
        let validity = if denom > 0.0 {
            (min_sep - sparseness[ci]) / denom
        } else {
            0.0
        };
        index += (real[ci].len() as f64 / n_total as f64) * validity;
    }
    index
}

/// Lexicographic comparison of real sequences (total order on floats).
pub fn lex_order(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.total_cmp(y);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Sorted distances from `point` to the other members: a rank key that
/// depends on the geometry only through distances.
pub fn distance_profile(points: &PointSet, point: usize, members: &[usize]) -> Vec<f64> {
    let mut profile: Vec<f64> = members
        .iter()
        .filter(|&&m| m != point)
        .map(|&m| points.euclidean(point, m))
        .collect();
    profile.sort_by(|a, b| a.total_cmp(b));
    profile
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdbscan::{build_mst, condense};

    fn points_2d(coords: &[(f64, f64)]) -> PointSet {
        PointSet::raw(coords.iter().map(|&(x, y)| vec![x, y]).collect()).expect("points")
    }

    fn blob(center: (f64, f64), spread: f64, count: usize, seq: &mut u64) -> Vec<(f64, f64)> {
        // Cheap deterministic jitter; no statistical quality needed.
        (0..count)
            .map(|_| {
                *seq = seq
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let a = ((*seq >> 33) as f64 / 2f64.powi(31) - 0.5) * spread;
                *seq = seq
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let b = ((*seq >> 33) as f64 / 2f64.powi(31) - 0.5) * spread;
                (center.0 + a, center.1 + b)
            })
            .collect()
    }

    #[test]
    fn dbcv_two_separated_blobs_scores_high() {
        let mut seq = 7;
        let mut coords = blob((0.0, 0.0), 0.4, 12, &mut seq);
        coords.extend(blob((10.0, 0.0), 0.4, 12, &mut seq));
        let points = points_2d(&coords);
        let labels: Vec<Option<usize>> = (0..24).map(|i| Some(usize::from(i >= 12))).collect();
        let score = dbcv(&points, &labels);
        assert!(score > 0.5, "got {score}");
    }

    #[test]
    fn dbcv_random_halves_score_negative() {
        let mut seq = 13;
        let mut coords = blob((0.0, 0.0), 0.4, 12, &mut seq);
        coords.extend(blob((10.0, 0.0), 0.4, 12, &mut seq));
        let points = points_2d(&coords);
        // Alternate labels so both halves mix both blobs.
        let labels: Vec<Option<usize>> = (0..24).map(|i| Some(i % 2)).collect();
        let score = dbcv(&points, &labels);
        assert!(score < 0.0, "got {score}");
    }

    #[test]
    fn dbcv_single_cluster_is_zero() {
        let points = points_2d(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let labels = vec![Some(0); 3];
        assert_eq!(dbcv(&points, &labels), 0.0);
    }

    #[test]
    fn dbcv_invariant_under_label_renaming_and_reorder() {
        let mut seq = 3;
        let mut coords = blob((0.0, 0.0), 0.5, 8, &mut seq);
        coords.extend(blob((6.0, 1.0), 0.5, 7, &mut seq));
        coords.extend(blob((-4.0, 8.0), 0.5, 6, &mut seq));
        let points = points_2d(&coords);
        let labels: Vec<Option<usize>> = (0..21)
            .map(|i| {
                if i < 8 {
                    Some(0)
                } else if i < 15 {
                    Some(1)
                } else {
                    Some(2)
                }
            })
            .collect();
        let renamed: Vec<Option<usize>> = labels.iter().map(|l| l.map(|v| (v + 5) * 2)).collect();
        let a = dbcv(&points, &labels);
        let b = dbcv(&points, &renamed);
        assert!((a - b).abs() < 1e-12);

        // Reorder points together with their labels.
        let permutation: Vec<usize> = (0..21).rev().collect();
        let coords_p: Vec<(f64, f64)> = permutation.iter().map(|&i| coords[i]).collect();
        let labels_p: Vec<Option<usize>> = permutation.iter().map(|&i| labels[i]).collect();
        let c = dbcv(&points_2d(&coords_p), &labels_p);
        assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn dbcv_noise_dilutes_weighting() {
        let mut seq = 23;
        let mut coords = blob((0.0, 0.0), 0.3, 10, &mut seq);
        coords.extend(blob((8.0, 0.0), 0.3, 10, &mut seq));
        coords.push((100.0, 100.0));
        let points = points_2d(&coords);
        let mut labels: Vec<Option<usize>> = (0..20).map(|i| Some(usize::from(i >= 10))).collect();
        labels.push(None);
        let with_noise = dbcv(&points, &labels);
        assert!(with_noise > 0.0);
        // The noise singleton contributes weight but zero validity.
        let without: Vec<Option<usize>> = labels[..20].to_vec();
        let coords20 = points_2d(&coords[..20]);
        let base = dbcv(&coords20, &without);
        assert!(with_noise < base);
    }

    fn scored(dbcv: f64, persistence: f64, count: usize, eps: f64) -> CandidateClustering {
        CandidateClustering {
            clustering: Clustering {
                labels: vec![Some(0)],
                epsilon: eps,
                mode: ExtractionMode::Hybrid,
            },
            dbcv,
            persistence,
            effective_count: count,
        }
    }

    #[test]
    fn choose_best_single_candidate() {
        let candidates = vec![scored(0.4, 0.5, 3, 1.0)];
        assert!((choose_best(&candidates).dbcv - 0.4).abs() < 1e-12);
    }

    #[test]
    fn choose_best_stage1_threshold() {
        // Max 0.9 -> threshold 0.72 keeps 0.9 and 0.8 only; among those the
        // lower cluster count wins.
        let candidates = vec![
            scored(0.9, 0.5, 9, 1.0),
            scored(0.8, 0.5, 4, 2.0),
            scored(0.5, 0.9, 1, 3.0),
        ];
        let best = choose_best(&candidates);
        assert_eq!(best.effective_count, 4);
    }

    #[test]
    fn choose_best_prefers_fewer_clusters() {
        let candidates = vec![scored(0.9, 0.7, 7, 1.0), scored(0.9, 0.7, 3, 2.0)];
        assert_eq!(choose_best(&candidates).effective_count, 3);
    }

    #[test]
    fn choose_best_stage2_persistence_filter() {
        // Both pass stage 1; persistence 0.2 < 0.8 * 0.9 drops the second
        // even though its count is lower.
        let candidates = vec![scored(0.9, 0.9, 5, 1.0), scored(0.85, 0.2, 2, 2.0)];
        assert_eq!(choose_best(&candidates).effective_count, 5);
    }

    #[test]
    fn choose_best_zero_max_keeps_all() {
        let candidates = vec![scored(0.0, 0.9, 4, 1.0), scored(-0.5, 0.95, 2, 2.0)];
        // Max dbcv is 0: stage 1 keeps everything, stage 2 keeps both
        // (0.95 and 0.9), stage 3 picks the 2-cluster candidate.
        assert_eq!(choose_best(&candidates).effective_count, 2);
    }

    #[test]
    fn choose_best_negative_max_uses_relative_band() {
        let candidates = vec![scored(-0.1, 0.5, 6, 1.0), scored(-0.5, 0.9, 2, 2.0)];
        // Threshold: -0.1 - 0.02 = -0.12 excludes -0.5.
        assert_eq!(choose_best(&candidates).effective_count, 6);
    }

    #[test]
    fn choose_best_is_order_invariant() {
        let mut candidates = vec![
            scored(0.9, 0.8, 5, 0.5),
            scored(0.87, 0.85, 5, 0.7),
            scored(0.7, 0.99, 2, 1.5),
            scored(0.86, 0.3, 1, 2.5),
            scored(0.0, 0.0, 11, 3.5),
        ];
        let forward = choose_best(&candidates).clustering.epsilon;
        candidates.reverse();
        let backward = choose_best(&candidates).clustering.epsilon;
        assert_eq!(forward, backward);
        candidates.swap(0, 2);
        candidates.swap(1, 3);
        assert_eq!(choose_best(&candidates).clustering.epsilon, forward);
    }

    #[test]
    fn effective_count_examples() {
        let make = |labels: Vec<Option<usize>>| Clustering {
            labels,
            epsilon: 0.0,
            mode: ExtractionMode::Hybrid,
        };
        assert_eq!(effective_count(&make(vec![Some(0), Some(1), Some(2)])), 3);
        let mut labels = vec![Some(0), Some(0), Some(1), Some(1)];
        labels.extend(vec![None; 5]);
        assert_eq!(effective_count(&make(labels)), 7);
        assert_eq!(effective_count(&make(vec![None; 6])), 6);
    }

    #[test]
    fn search_constant_extraction_short_circuits() {
        // Singleton-peeling chain: the condensed tree is a single root leaf,
        // so extraction is identical for every epsilon and the first
        // iteration exhausts the queue.
        let points = points_2d(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (4.0, 0.0), (8.0, 0.0)]);
        let mst = build_mst(&points, 1).expect("mst");
        let h = condense(&mst, 2).expect("condense");
        let candidates = gather_candidates(&points, &h, &SearchParams::default());
        assert_eq!(candidates.len(), 1);
        assert_eq!(candidates[0].effective_count, 1);
        let best = cluster_search(&points, &h, &SearchParams::default());
        assert_eq!(best.clustering.noise_count(), 0);
    }

    #[test]
    fn search_two_pairs_finds_two_clusters() {
        let points = points_2d(&[(0.0, 0.0), (0.1, 0.0), (10.0, 0.0), (10.1, 0.0)]);
        let mst = build_mst(&points, 1).expect("mst");
        let h = condense(&mst, 2).expect("condense");
        let best = cluster_search(&points, &h, &SearchParams::default());
        assert_eq!(
            best.clustering.labels,
            vec![Some(0), Some(0), Some(1), Some(1)]
        );
    }

    #[test]
    fn search_num_steps_one_yields_endpoint_candidates() {
        let points = points_2d(&[(0.0, 0.0), (0.1, 0.0), (10.0, 0.0), (10.1, 0.0)]);
        let mst = build_mst(&points, 1).expect("mst");
        let h = condense(&mst, 2).expect("condense");
        let params = SearchParams {
            num_steps: 1,
            ..SearchParams::default()
        };
        let candidates = gather_candidates(&points, &h, &params);
        // One iteration: exactly the extractions at min_dist and max_dist.
        let at_min = extract_hybrid(&h, 0.1);
        let at_max = extract_hybrid(&h, 10.1);
        assert_eq!(candidates.len(), 2);
        assert!(candidates[0].clustering.same_partition(&at_min));
        assert!(candidates[1].clustering.same_partition(&at_max));
    }

    #[test]
    fn search_single_point_returns_singleton() {
        let points = PointSet::raw(vec![vec![1.0, 0.0]]).expect("points");
        let mst_less_hierarchy = {
            // A one-point hierarchy is a root leaf holding the point.
            use crate::hdbscan::MsTree;
            condense(
                &MsTree {
                    n_points: 1,
                    edges: vec![],
                },
                2,
            )
            .expect("condense")
        };
        let best = cluster_search(&points, &mst_less_hierarchy, &SearchParams::default());
        assert_eq!(best.clustering.labels, vec![Some(0)]);
        assert_eq!(best.effective_count, 1);
        assert!((best.persistence - 1.0).abs() < 1e-12);
    }
}
