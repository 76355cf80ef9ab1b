//! Density-based clustering machinery: mutual reachability distances, the
//! minimum spanning tree of the mutual reachability graph, the condensed
//! cluster hierarchy, and hybrid epsilon-thresholded cluster extraction.
//!
//! The expensive part (MST + hierarchy) is built once per point set; an
//! extraction at any epsilon is then a cheap tree walk, which is what makes
//! the epsilon search affordable. Extraction is excess-of-mass selection
//! with every split below epsilon undone, so dense regions come out as flat
//! fixed-density clusters while sparser structure keeps the
//! stability-optimal shape.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Guard for lambda = 1/distance at zero distance (coincident points).
const LAMBDA_MAX: f64 = 1e12;

fn lambda(distance: f64) -> f64 {
    if !distance.is_finite() {
        0.0
    } else if distance <= 1.0 / LAMBDA_MAX {
        LAMBDA_MAX
    } else {
        1.0 / distance
    }
}

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("point set must contain at least one point")]
    Empty,
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("point {index} is not unit norm (norm {norm})")]
    NotUnitNorm { index: usize, norm: f64 },
    #[error("point {index} has non-finite coordinates")]
    NonFinite { index: usize },
    #[error("need at least {needed} points, have {have}")]
    TooFewPoints { needed: usize, have: usize },
    #[error("m_pts = {m_pts} exceeds n - 1 = {max}")]
    InvalidMPts { m_pts: usize, max: usize },
    #[error("m_clSize must be at least 2, got {0}")]
    InvalidMClSize(usize),
}

/// A fixed collection of points with stable ids.
#[derive(Debug, Clone)]
pub struct PointSet {
    ids: Vec<String>,
    coords: Vec<Vec<f64>>,
}

impl PointSet {
    /// Builds a point set of unit-norm vectors (the pipeline contract:
    /// combined embeddings are unit within 1e-6).
    pub fn new(ids: Vec<String>, coords: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        let set = Self::raw_with_ids(ids, coords)?;
        for (index, point) in set.coords.iter().enumerate() {
            let norm = point.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(ClusterError::NotUnitNorm { index, norm });
            }
        }
        Ok(set)
    }

    /// Builds a point set without the unit-norm check, for arbitrary
    /// geometry (oracles, synthetic layouts).
    pub fn raw(coords: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        let ids = (0..coords.len()).map(|i| format!("p{i}")).collect();
        Self::raw_with_ids(ids, coords)
    }

    fn raw_with_ids(ids: Vec<String>, coords: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        if coords.is_empty() || ids.len() != coords.len() {
            return Err(ClusterError::Empty);
        }
        let dim = coords[0].len();
        for (index, point) in coords.iter().enumerate() {
            if point.len() != dim {
                return Err(ClusterError::DimensionMismatch {
                    index,
                    got: point.len(),
                    expected: dim,
                });
            }
            if point.iter().any(|v| !v.is_finite()) {
                return Err(ClusterError::NonFinite { index });
            }
        }
        Ok(PointSet { ids, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coords[0].len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    pub fn euclidean(&self, a: usize, b: usize) -> f64 {
        euclidean(&self.coords[a], &self.coords[b])
    }

    /// Minimum and maximum positive pairwise distances, or None when no
    /// positive distance exists (single point or all points coincident).
    pub fn positive_distance_range(&self) -> Option<(f64, f64)> {
        let mut range: Option<(f64, f64)> = None;
        for a in 0..self.len() {
            for b in (a + 1)..self.len() {
                let d = self.euclidean(a, b);
                if d > 0.0 {
                    range = Some(match range {
                        None => (d, d),
                        Some((lo, hi)) => (lo.min(d), hi.max(d)),
                    });
                }
            }
        }
        range
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise mutual reachability distances over a point set:
/// `MR(a, b) = max(core(a), core(b), ||a - b||)` where the core distance of
/// a point is the Euclidean distance to its `m_pts`-th nearest neighbor
/// (self excluded). `MR(a, a) = 0`.
pub struct MutualReachability<'a> {
    points: &'a PointSet,
    core: Vec<f64>,
}

pub fn mutual_reachability(
    points: &PointSet,
    m_pts: usize,
) -> Result<MutualReachability<'_>, ClusterError> {
    let n = points.len();
    if n < 2 {
        // Trivial single-point handling: no pairwise distances exist.
        return Ok(MutualReachability {
            points,
            core: vec![0.0; n],
        });
    }
    if m_pts == 0 || m_pts > n - 1 {
        return Err(ClusterError::InvalidMPts { m_pts, max: n - 1 });
    }

    let mut core = Vec::with_capacity(n);
    let mut neighbor_dists = Vec::with_capacity(n - 1);
    for i in 0..n {
        neighbor_dists.clear();
        for j in 0..n {
            if j != i {
                neighbor_dists.push(points.euclidean(i, j));
            }
        }
        // m_pts-th smallest
        neighbor_dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        core.push(neighbor_dists[m_pts - 1]);
    }
    Ok(MutualReachability { points, core })
}

impl MutualReachability<'_> {
    pub fn core_distance(&self, i: usize) -> f64 {
        self.core[i]
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        self.points
            .euclidean(a, b)
            .max(self.core[a])
            .max(self.core[b])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Minimum spanning tree of the mutual reachability graph, edges sorted
/// ascending by (weight, min endpoint, max endpoint).
#[derive(Debug, Clone)]
pub struct MsTree {
    pub n_points: usize,
    pub edges: Vec<MstEdge>,
}

impl MsTree {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// Prim's algorithm over the implicit complete mutual reachability graph,
/// O(n^2) without materializing the matrix.
pub fn build_mst(points: &PointSet, m_pts: usize) -> Result<MsTree, ClusterError> {
    let n = points.len();
    if n < 2 {
        return Err(ClusterError::TooFewPoints { needed: 2, have: n });
    }
    let mr = mutual_reachability(points, m_pts)?;

    let mut in_tree = vec![false; n];
    let mut best_dist = vec![f64::INFINITY; n];
    let mut best_from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);

    let mut current = 0usize;
    for _ in 1..n {
        in_tree[current] = true;
        let mut next = usize::MAX;
        let mut next_dist = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = mr.distance(current, j);
            if d < best_dist[j] {
                best_dist[j] = d;
                best_from[j] = current;
            }
            if best_dist[j] < next_dist {
                next_dist = best_dist[j];
                next = j;
            }
        }
        let (a, b) = (best_from[next].min(next), best_from[next].max(next));
        edges.push(MstEdge {
            a,
            b,
            weight: next_dist,
        });
        current = next;
    }

    edges.sort_by(|x, y| {
        x.weight
            .partial_cmp(&y.weight)
            .expect("finite weights")
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });
    Ok(MsTree { n_points: n, edges })
}

/// One node of the condensed hierarchy.
#[derive(Debug, Clone)]
pub struct CondensedNode {
    pub parent: Option<usize>,
    /// Distance at which this node split from its parent; infinite for the
    /// root, which has no parent.
    pub birth: f64,
    /// Distance at which the node splits into its children, or dissolves
    /// when it has none.
    pub death: f64,
    pub size: usize,
    /// Excess-of-mass stability: sum over member points of
    /// (1/departure_distance - 1/birth_distance).
    pub stability: f64,
    pub children: Vec<usize>,
    /// Points leaving this node directly, with their departure distances.
    pub departures: Vec<(usize, f64)>,
}

/// HDBSCAN condensed cluster tree: the single-linkage dendrogram with every
/// split whose smaller side has fewer than `m_cl_size` points flattened into
/// point departures.
#[derive(Debug, Clone)]
pub struct CondensedHierarchy {
    pub nodes: Vec<CondensedNode>,
    pub n_points: usize,
    pub m_cl_size: usize,
    /// Condensed node each point departs from.
    point_node: Vec<usize>,
    /// Distance at which each point departs it.
    point_departure: Vec<f64>,
    /// Sorted distinct finite birth distances; extraction can only change
    /// when epsilon crosses one of these.
    births: Vec<f64>,
}

const ROOT: usize = 0;

impl CondensedHierarchy {
    pub fn root(&self) -> usize {
        ROOT
    }

    pub fn birth_distances(&self) -> &[f64] {
        &self.births
    }

    pub fn point_departure(&self, point: usize) -> (usize, f64) {
        (self.point_node[point], self.point_departure[point])
    }

    /// All points in the subtree rooted at `node`, ascending.
    pub fn subtree_points(&self, node: usize) -> Vec<usize> {
        let mut points = Vec::new();
        let mut stack = vec![node];
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id];
            points.extend(n.departures.iter().map(|(p, _)| *p));
            stack.extend(&n.children);
        }
        points.sort_unstable();
        points
    }

    /// Line-delimited JSON debug dump: one `{node, parent, birth, death,
    /// size}` object per node (root birth rendered as null).
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let birth = if node.birth.is_finite() {
                serde_json::json!(node.birth)
            } else {
                serde_json::Value::Null
            };
            let line = serde_json::json!({
                "node": id,
                "parent": node.parent,
                "birth": birth,
                "death": node.death,
                "size": node.size,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Builds the condensed hierarchy from an MST.
///
/// The single-linkage dendrogram is formed by uniting components along
/// ascending edges; descending it again, a split counts as real only when
/// both sides have at least `m_cl_size` points. Points on a too-small side
/// fall out of the current node at the split distance.
pub fn condense(mst: &MsTree, m_cl_size: usize) -> Result<CondensedHierarchy, ClusterError> {
    if m_cl_size < 2 {
        return Err(ClusterError::InvalidMClSize(m_cl_size));
    }
    let n = mst.n_points;
    if n == 0 {
        return Err(ClusterError::Empty);
    }

    // Single-linkage tree: nodes 0..n are points, n+step is the merge made
    // by the step-th edge. Edges are already sorted ascending.
    struct SltNode {
        left: usize,
        right: usize,
        distance: f64,
        size: usize,
    }
    let mut slt: Vec<SltNode> = Vec::with_capacity(n.saturating_sub(1));
    let mut uf = UnionFind::new(2 * n - 1);
    let mut component_node: Vec<usize> = (0..2 * n - 1).collect();
    let mut sizes = vec![1usize; 2 * n - 1];
    for (step, edge) in mst.edges.iter().enumerate() {
        let ra = uf.find(edge.a);
        let rb = uf.find(edge.b);
        let (na, nb) = (component_node[ra], component_node[rb]);
        let merged = n + step;
        slt.push(SltNode {
            left: na,
            right: nb,
            distance: edge.weight,
            size: sizes[na] + sizes[nb],
        });
        sizes[merged] = sizes[na] + sizes[nb];
        let root = uf.union(ra, rb);
        component_node[root] = merged;
    }

    let slt_size = |id: usize| -> usize {
        if id < n {
            1
        } else {
            slt[id - n].size
        }
    };
    let slt_points = |id: usize| -> Vec<usize> {
        let mut points = Vec::new();
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            if cur < n {
                points.push(cur);
            } else {
                let node = &slt[cur - n];
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        points
    };

    let mut nodes: Vec<CondensedNode> = vec![CondensedNode {
        parent: None,
        birth: f64::INFINITY,
        death: 0.0,
        size: n,
        stability: 0.0,
        children: Vec::new(),
        departures: Vec::new(),
    }];

    // Walk the dendrogram top-down. Each work item is an SLT node together
    // with the condensed node it currently belongs to.
    let top = 2 * n - 2;
    let mut work: Vec<(usize, usize)> = vec![(top, ROOT)];
    while let Some((slt_id, cond_id)) = work.pop() {
        if slt_id < n {
            // A bare point at the top level only happens for n == 1 (not
            // reachable here: MST requires n >= 2 and splits handle points).
            let birth = nodes[cond_id].birth;
            nodes[cond_id].departures.push((slt_id, birth));
            continue;
        }
        let node = &slt[slt_id - n];
        let (left, right, d) = (node.left, node.right, node.distance);
        let left_big = slt_size(left) >= m_cl_size;
        let right_big = slt_size(right) >= m_cl_size;
        match (left_big, right_big) {
            (true, true) => {
                nodes[cond_id].death = d;
                for child_slt in [left, right] {
                    let child_id = nodes.len();
                    nodes.push(CondensedNode {
                        parent: Some(cond_id),
                        birth: d,
                        death: 0.0,
                        size: slt_size(child_slt),
                        stability: 0.0,
                        children: Vec::new(),
                        departures: Vec::new(),
                    });
                    nodes[cond_id].children.push(child_id);
                    work.push((child_slt, child_id));
                }
            }
            (true, false) => {
                for p in slt_points(right) {
                    nodes[cond_id].departures.push((p, d));
                }
                work.push((left, cond_id));
            }
            (false, true) => {
                for p in slt_points(left) {
                    nodes[cond_id].departures.push((p, d));
                }
                work.push((right, cond_id));
            }
            (false, false) => {
                // The node dissolves here; every remaining point departs.
                nodes[cond_id].death = d;
                for p in slt_points(left).into_iter().chain(slt_points(right)) {
                    nodes[cond_id].departures.push((p, d));
                }
            }
        }
    }

    let mut point_node = vec![ROOT; n];
    let mut point_departure = vec![0.0; n];
    for (id, node) in nodes.iter().enumerate() {
        for &(p, d) in &node.departures {
            point_node[p] = id;
            point_departure[p] = d;
        }
    }

    // Stability: each point contributes from the node's birth until it
    // departs; each child cluster contributes its whole mass over the
    // parent's lifetime.
    for id in 0..nodes.len() {
        let birth_lambda = lambda(nodes[id].birth);
        let mut stability = 0.0;
        for &(_, d) in &nodes[id].departures {
            stability += lambda(d) - birth_lambda;
        }
        for &child in &nodes[id].children {
            stability += nodes[child].size as f64 * (lambda(nodes[child].birth) - birth_lambda);
        }
        nodes[id].stability = stability;
    }

    let mut births: Vec<f64> = nodes
        .iter()
        .filter(|node| node.birth.is_finite())
        .map(|node| node.birth)
        .collect();
    births.sort_by(|a, b| a.partial_cmp(b).expect("finite births"));
    births.dedup();

    Ok(CondensedHierarchy {
        nodes,
        n_points: n,
        m_cl_size,
        point_node,
        point_departure,
        births,
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let ra = self.find(a);
        let rb = self.find(b);
        self.parent[ra] = rb;
        rb
    }
}

/// How a flat clustering was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMode {
    ExcessOfMass,
    Hybrid,
}

impl fmt::Display for ExtractionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractionMode::ExcessOfMass => f.write_str("eom"),
            ExtractionMode::Hybrid => f.write_str("hybrid"),
        }
    }
}

/// A flat partition of the points; `None` marks noise. Cluster ids are
/// contiguous from 0 in order of each cluster's first point.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<Option<usize>>,
    pub epsilon: f64,
    pub mode: ExtractionMode,
}

impl Clustering {
    pub fn num_clusters(&self) -> usize {
        self.labels
            .iter()
            .filter_map(|l| *l)
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Partition equality up to cluster renaming, with noise matching noise.
    /// Labels are first-occurrence canonical by construction, so this is a
    /// plain comparison after canonicalizing defensively.
    pub fn same_partition(&self, other: &Clustering) -> bool {
        canonical_labels(&self.labels) == canonical_labels(&other.labels)
    }
}

/// Relabels clusters by order of first appearance; noise stays noise.
pub fn canonical_labels(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut mapping: Vec<Option<usize>> = Vec::new();
    let mut next = 0usize;
    labels
        .iter()
        .map(|label| {
            label.map(|l| {
                if l >= mapping.len() {
                    mapping.resize(l + 1, None);
                }
                *mapping[l].get_or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                })
            })
        })
        .collect()
}

/// Stability-maximizing antichain of condensed-tree nodes (excess of mass).
/// The root is selectable only when it is the sole node.
pub fn excess_of_mass_selection(hierarchy: &CondensedHierarchy) -> Vec<usize> {
    let nodes = &hierarchy.nodes;
    if nodes.len() == 1 {
        return vec![ROOT];
    }

    // Children always have larger ids than their parents, so one reverse
    // sweep accumulates optimal subtree selections bottom-up.
    let mut best = vec![0.0f64; nodes.len()];
    let mut chosen_here = vec![false; nodes.len()];
    for id in (1..nodes.len()).rev() {
        let node = &nodes[id];
        let child_sum: f64 = node.children.iter().map(|&c| best[c]).sum();
        if node.children.is_empty() || node.stability >= child_sum {
            chosen_here[id] = true;
            best[id] = node.stability;
        } else {
            best[id] = child_sum;
        }
    }

    // Collect the topmost chosen nodes below the root.
    let mut selected = Vec::new();
    let mut stack: Vec<usize> = nodes[ROOT].children.clone();
    while let Some(id) = stack.pop() {
        if chosen_here[id] {
            selected.push(id);
        } else {
            stack.extend(&nodes[id].children);
        }
    }
    selected.sort_unstable();
    selected
}

/// Extracts a flat clustering at threshold `epsilon`.
///
/// Excess-of-mass selection runs first; then every split that happened at a
/// distance below `epsilon` is undone by replacing each selected node whose
/// birth lies below `epsilon` with the ancestor above all such splits
/// (possibly the root). Each surviving node labels its whole subtree;
/// points outside every selected subtree are noise.
pub fn extract_hybrid(hierarchy: &CondensedHierarchy, epsilon: f64) -> Clustering {
    let selected = excess_of_mass_selection(hierarchy);

    let mut targets: BTreeSet<usize> = BTreeSet::new();
    for mut node in selected {
        while node != ROOT && hierarchy.nodes[node].birth < epsilon {
            node = hierarchy.nodes[node].parent.expect("non-root has parent");
        }
        targets.insert(node);
    }
    // Undoing splits keeps targets an antichain, except that reaching the
    // root subsumes everything else.
    if targets.contains(&ROOT) {
        targets = BTreeSet::from([ROOT]);
    }

    let mut labels: Vec<Option<usize>> = vec![None; hierarchy.n_points];
    for (temp_id, &target) in targets.iter().enumerate() {
        for point in hierarchy.subtree_points(target) {
            labels[point] = Some(temp_id);
        }
    }

    Clustering {
        labels: canonical_labels(&labels),
        epsilon,
        mode: if epsilon > 0.0 {
            ExtractionMode::Hybrid
        } else {
            ExtractionMode::ExcessOfMass
        },
    }
}

/// Shared sweep over every epsilon at which extraction can change,
/// supporting persistence computation and exhaustive candidate enumeration.
pub struct EpsilonSweep<'h> {
    hierarchy: &'h CondensedHierarchy,
    /// Atom boundaries: extraction is constant on (births[i-1], births[i]]
    /// and on (births[last], infinity).
    partitions: Vec<Clustering>,
}

impl<'h> EpsilonSweep<'h> {
    pub fn new(hierarchy: &'h CondensedHierarchy) -> Self {
        let births = hierarchy.birth_distances();
        let mut partitions = Vec::with_capacity(births.len() + 1);
        for &b in births {
            partitions.push(extract_hybrid(hierarchy, b));
        }
        partitions.push(extract_hybrid(hierarchy, f64::INFINITY));
        EpsilonSweep {
            hierarchy,
            partitions,
        }
    }

    pub fn hierarchy(&self) -> &CondensedHierarchy {
        self.hierarchy
    }

    /// Distinct partitions in ascending epsilon order, each with the lowest
    /// sweep epsilon that produces it.
    pub fn distinct_partitions(&self) -> Vec<&Clustering> {
        let mut out: Vec<&Clustering> = Vec::new();
        for clustering in &self.partitions {
            if !out.iter().any(|c| c.same_partition(clustering)) {
                out.push(clustering);
            }
        }
        out
    }

    /// Index of the atom containing `epsilon`.
    fn atom_of(&self, epsilon: f64) -> usize {
        let births = self.hierarchy.birth_distances();
        births.partition_point(|&b| b < epsilon)
    }

    /// Maximal epsilon interval around `clustering.epsilon` on which
    /// extraction yields this exact partition. The lower bound of the first
    /// atom is 0 and the upper bound of the last is unbounded (None).
    pub fn stable_interval(&self, clustering: &Clustering) -> (f64, Option<f64>) {
        let births = self.hierarchy.birth_distances();
        let atom = self.atom_of(clustering.epsilon);
        let matches = |i: usize| self.partitions[i].same_partition(clustering);

        let mut lo_atom = atom;
        if matches(atom) {
            while lo_atom > 0 && matches(lo_atom - 1) {
                lo_atom -= 1;
            }
        }
        let mut hi_atom = atom;
        if matches(atom) {
            while hi_atom + 1 < self.partitions.len() && matches(hi_atom + 1) {
                hi_atom += 1;
            }
        }

        let lo = if lo_atom == 0 {
            0.0
        } else {
            births[lo_atom - 1]
        };
        let hi = births.get(hi_atom).copied();
        (lo, hi)
    }
}

/// Normalized width of the epsilon interval over which extraction keeps
/// producing this exact partition: `(e_hi - e_lo) / (d_max - d_min)` with
/// the interval clamped to the data's positive pairwise distance span, in
/// [0, 1]. A degenerate span (d_max = d_min, or none) gives 1.
pub fn clustering_persistence(
    sweep: &EpsilonSweep<'_>,
    points: &PointSet,
    clustering: &Clustering,
) -> f64 {
    let Some((d_min, d_max)) = points.positive_distance_range() else {
        return 1.0;
    };
    if d_max <= d_min {
        return 1.0;
    }
    let (lo, hi) = sweep.stable_interval(clustering);
    let hi = hi.unwrap_or(d_max).min(d_max);
    let lo = lo.max(d_min);
    ((hi - lo) / (d_max - d_min)).clamp(0.0, 1.0)
}
