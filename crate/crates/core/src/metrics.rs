//! Ground-truth evaluation of a clustering: purity, inverse purity,
//! F-measure, and per-label overcounting/undercounting with optional
//! bug-type aggregation.
//!
//! Noise points are expected to arrive as singleton clusters (the pipeline
//! writes them that way), keeping reported cluster counts consistent with
//! the search's effective-count rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("clustering and ground truth cover different ids; only in clustering: {only_clusters:?}, only in truth: {only_truth:?}")]
    IdMismatch {
        only_clusters: Vec<String>,
        only_truth: Vec<String>,
    },
    #[error("ground truth csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("ground truth csv needs header id,label[,bug_type]")]
    BadHeader,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Ground-truth labels per crash id, with optional per-label bug types.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    pub labels: BTreeMap<String, String>,
    pub bug_types: BTreeMap<String, String>,
}

impl GroundTruth {
    /// Reads `id,label[,bug_type]` CSV. The bug type column may be absent
    /// entirely or empty per row.
    pub fn from_csv(path: &Path) -> Result<GroundTruth, MetricsError> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
        let headers = reader.headers()?.clone();
        let mut columns = headers.iter();
        if columns.next() != Some("id") || columns.next() != Some("label") {
            return Err(MetricsError::BadHeader);
        }
        let has_type = headers.get(2) == Some("bug_type");

        let mut truth = GroundTruth::default();
        for row in reader.records() {
            let row = row?;
            let id = row.get(0).unwrap_or("").to_string();
            let label = row.get(1).unwrap_or("").to_string();
            if has_type {
                if let Some(bug_type) = row.get(2) {
                    if !bug_type.is_empty() {
                        truth.bug_types.insert(label.clone(), bug_type.to_string());
                    }
                }
            }
            truth.labels.insert(id, label);
        }
        Ok(truth)
    }

    pub fn has_types(&self) -> bool {
        !self.bug_types.is_empty()
    }
}

/// Exact intersection counts between ground-truth labels and clusters.
#[derive(Debug, Clone)]
pub struct Contingency {
    /// n(label, cluster) = |L_label ∩ C_cluster|, only nonzero cells.
    pub counts: BTreeMap<(String, String), usize>,
    pub label_sizes: BTreeMap<String, usize>,
    pub cluster_sizes: BTreeMap<String, usize>,
    pub total: usize,
}

/// Counts label/cluster intersections. Both mappings must cover exactly the
/// same ids.
pub fn contingency(
    clusters: &BTreeMap<String, String>,
    truth: &GroundTruth,
) -> Result<Contingency, MetricsError> {
    let cluster_ids: BTreeSet<&String> = clusters.keys().collect();
    let truth_ids: BTreeSet<&String> = truth.labels.keys().collect();
    if cluster_ids != truth_ids {
        return Err(MetricsError::IdMismatch {
            only_clusters: cluster_ids
                .difference(&truth_ids)
                .map(|s| (*s).clone())
                .collect(),
            only_truth: truth_ids
                .difference(&cluster_ids)
                .map(|s| (*s).clone())
                .collect(),
        });
    }

    let mut result = Contingency {
        counts: BTreeMap::new(),
        label_sizes: BTreeMap::new(),
        cluster_sizes: BTreeMap::new(),
        total: clusters.len(),
    };
    for (id, cluster) in clusters {
        let label = &truth.labels[id];
        *result
            .counts
            .entry((label.clone(), cluster.clone()))
            .or_default() += 1;
        *result.label_sizes.entry(label.clone()).or_default() += 1;
        *result.cluster_sizes.entry(cluster.clone()).or_default() += 1;
    }
    Ok(result)
}

/// Purity, inverse purity, and F-measure of a contingency table.
///
/// Purity sums, per cluster, the best precision over labels; inverse purity
/// sums, per label, the best recall over clusters; the F-measure sums, per
/// label, the best harmonic mean of precision and recall (0 when both
/// vanish). All three are size-weighted and lie in [0, 1].
pub fn purity_scores(table: &Contingency) -> (f64, f64, f64) {
    let n = table.total as f64;

    let mut purity = 0.0;
    for (cluster, &cluster_size) in &table.cluster_sizes {
        let best = table
            .counts
            .iter()
            .filter(|((_, c), _)| c == cluster)
            .map(|(_, &count)| count as f64 / cluster_size as f64)
            .fold(0.0, f64::max);
        purity += (cluster_size as f64 / n) * best;
    }

    let mut inverse_purity = 0.0;
    let mut f_measure = 0.0;
    for (label, &label_size) in &table.label_sizes {
        let mut best_recall = 0.0f64;
        let mut best_f = 0.0f64;
        for ((l, cluster), &count) in &table.counts {
            if l != label {
                continue;
            }
            let cluster_size = table.cluster_sizes[cluster];
            let precision = count as f64 / cluster_size as f64;
            let recall = count as f64 / label_size as f64;
            best_recall = best_recall.max(recall);
            if precision + recall > 0.0 {
                best_f = best_f.max(2.0 * precision * recall / (precision + recall));
            }
        }
        inverse_purity += (label_size as f64 / n) * best_recall;
        f_measure += (label_size as f64 / n) * best_f;
    }

    (purity, inverse_purity, f_measure)
}

/// Per-label deduplication quality counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelScores {
    /// Superfluous clusters containing this label: clusters touched minus 1.
    pub overcounting: usize,
    /// Foreign labels sharing at least one cluster with this label.
    pub undercounting: usize,
}

/// Overcounting and undercounting per ground-truth label.
pub fn over_under(table: &Contingency) -> BTreeMap<String, LabelScores> {
    let mut touched: BTreeMap<&String, BTreeSet<&String>> = BTreeMap::new();
    for (label, cluster) in table.counts.keys() {
        touched.entry(label).or_default().insert(cluster);
    }

    let mut scores = BTreeMap::new();
    for (label, clusters) in &touched {
        let mut foreign: BTreeSet<&String> = BTreeSet::new();
        for (other, other_clusters) in &touched {
            if other != label && !clusters.is_disjoint(other_clusters) {
                foreign.insert(other);
            }
        }
        scores.insert(
            (*label).clone(),
            LabelScores {
                overcounting: clusters.len() - 1,
                undercounting: foreign.len(),
            },
        );
    }
    scores
}

/// Mean and population standard deviation of over/under scores per bug type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub labels: usize,
    pub over_mean: f64,
    pub over_std: f64,
    pub under_mean: f64,
    pub under_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    // Population standard deviation: groups of size 1 report 0.
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, variance.sqrt())
}

/// Groups per-label scores by bug type (labels without a type aggregate
/// under "Other"). Empty groups are simply absent.
pub fn aggregate_types(
    per_label: &BTreeMap<String, LabelScores>,
    bug_types: &BTreeMap<String, String>,
) -> BTreeMap<String, TypeStats> {
    let mut groups: BTreeMap<String, Vec<&LabelScores>> = BTreeMap::new();
    for (label, scores) in per_label {
        let bug_type = bug_types
            .get(label)
            .cloned()
            .unwrap_or_else(|| "Other".to_string());
        groups.entry(bug_type).or_default().push(scores);
    }

    groups
        .into_iter()
        .map(|(bug_type, scores)| {
            let over: Vec<f64> = scores.iter().map(|s| s.overcounting as f64).collect();
            let under: Vec<f64> = scores.iter().map(|s| s.undercounting as f64).collect();
            let (over_mean, over_std) = mean_std(&over);
            let (under_mean, under_std) = mean_std(&under);
            (
                bug_type,
                TypeStats {
                    labels: scores.len(),
                    over_mean,
                    over_std,
                    under_mean,
                    under_std,
                },
            )
        })
        .collect()
}

/// Full evaluation result, serialized as report.json and rendered as
/// report.txt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub clusters: usize,
    pub purity: f64,
    pub inverse_purity: f64,
    pub f_measure: f64,
    pub per_label: BTreeMap<String, LabelScores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_type: Option<BTreeMap<String, TypeStats>>,
}

/// Evaluates a clustering (noise already expanded to singleton clusters)
/// against ground truth.
pub fn evaluate(
    clusters: &BTreeMap<String, String>,
    truth: &GroundTruth,
) -> Result<EvalReport, MetricsError> {
    let table = contingency(clusters, truth)?;
    let (purity, inverse_purity, f_measure) = purity_scores(&table);
    let per_label = over_under(&table);
    let per_type = if truth.has_types() {
        Some(aggregate_types(&per_label, &truth.bug_types))
    } else {
        None
    };
    Ok(EvalReport {
        clusters: table.cluster_sizes.len(),
        purity,
        inverse_purity,
        f_measure,
        per_label,
        per_type,
    })
}

impl EvalReport {
    /// Plain-text table; ratio metrics shown as percentages rounded to the
    /// nearest integer. Cluster counts include noise singletons.
    pub fn render_text(&self) -> String {
        let pct = |v: f64| format!("{}%", (v * 100.0).round() as i64);
        let mut out = String::new();
        let _ = writeln!(out, "clusters         {}", self.clusters);
        let _ = writeln!(out, "purity           {}", pct(self.purity));
        let _ = writeln!(out, "inverse purity   {}", pct(self.inverse_purity));
        let _ = writeln!(out, "f-measure        {}", pct(self.f_measure));

        if !self.per_label.is_empty() {
            let width = self
                .per_label
                .keys()
                .map(|l| l.len())
                .max()
                .unwrap_or(5)
                .max("label".len());
            let _ = writeln!(out);
            let _ = writeln!(out, "{:width$}  over  under", "label");
            for (label, scores) in &self.per_label {
                let _ = writeln!(
                    out,
                    "{label:width$}  {:>4}  {:>5}",
                    scores.overcounting, scores.undercounting
                );
            }
        }

        if let Some(per_type) = &self.per_type {
            let width = per_type
                .keys()
                .map(|t| t.len())
                .max()
                .unwrap_or(4)
                .max("bug type".len());
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{:width$}  labels  over µ  over σ  under µ  under σ",
                "bug type"
            );
            for (bug_type, stats) in per_type {
                let _ = writeln!(
                    out,
                    "{bug_type:width$}  {:>6}  {:>6.1}  {:>6.1}  {:>7.1}  {:>7.1}",
                    stats.labels,
                    stats.over_mean,
                    stats.over_std,
                    stats.under_mean,
                    stats.under_std
                );
            }
        }
        out
    }
}
