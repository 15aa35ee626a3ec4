//! Graph containers shared by the pipeline stages.
//!
//! All graphs are sparse and use dense `0..n` node ids local to their stage.
//! Mapping tables (`sample_map`, `LandmarkCover::landmarks`, partitions) tie
//! the id spaces together.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn canonical(a: usize, b: usize) -> (u32, u32) {
    if a < b {
        (a as u32, b as u32)
    } else {
        (b as u32, a as u32)
    }
}

/// Undirected, unweighted graph over sampled points.
///
/// Edges are stored once as `(i, j)` with `i < j`; self-loops and duplicates
/// are dropped on construction. A CSR adjacency with sorted neighbor lists is
/// kept alongside for traversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNeighborGraph", into = "RawNeighborGraph")]
pub struct NeighborGraph {
    node_count: usize,
    edges: Vec<(u32, u32)>,
    sample_map: Vec<usize>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct RawNeighborGraph {
    node_count: usize,
    edges: Vec<(u32, u32)>,
    sample_map: Vec<usize>,
}

impl TryFrom<RawNeighborGraph> for NeighborGraph {
    type Error = Error;

    fn try_from(raw: RawNeighborGraph) -> Result<Self> {
        let g = NeighborGraph::from_edges(
            raw.node_count,
            raw.edges.iter().map(|&(a, b)| (a as usize, b as usize)),
        )?;
        g.with_sample_map(raw.sample_map)
    }
}

impl From<NeighborGraph> for RawNeighborGraph {
    fn from(g: NeighborGraph) -> Self {
        RawNeighborGraph {
            node_count: g.node_count,
            edges: g.edges,
            sample_map: g.sample_map,
        }
    }
}

impl NeighborGraph {
    /// Builds the graph from any edge list; the sample map defaults to identity.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if node_count > u32::MAX as usize {
            return Err(Error::InvalidInput(format!("{node_count} nodes exceed the u32 id space")));
        }
        let mut canon = Vec::new();
        for (a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            if a != b {
                canon.push(canonical(a, b));
            }
        }
        Ok(Self::from_canonical(node_count, canon))
    }

    fn from_canonical(node_count: usize, mut edges: Vec<(u32, u32)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut degree = vec![0usize; node_count];
        for &(a, b) in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..node_count].to_vec();
        let mut neighbors = vec![0u32; offsets[node_count]];
        // edges are sorted, so each node's lower neighbors arrive in order and
        // a final per-node sort is still needed for the upper ones
        for &(a, b) in &edges {
            neighbors[fill[a as usize]] = b;
            fill[a as usize] += 1;
            neighbors[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        for v in 0..node_count {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Self {
            node_count,
            edges,
            sample_map: (0..node_count).collect(),
            offsets,
            neighbors,
        }
    }

    pub fn with_sample_map(mut self, sample_map: Vec<usize>) -> Result<Self> {
        if sample_map.len() != self.node_count {
            return Err(Error::InvalidInput(format!(
                "sample map has {} entries for {} nodes",
                sample_map.len(),
                self.node_count
            )));
        }
        self.sample_map = sample_map;
        Ok(self)
    }

    /// Returns a new graph containing the current edges plus `extra`.
    pub fn with_extra_edges(&self, extra: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = self.edges.clone();
        for (a, b) in extra {
            if a >= self.node_count || b >= self.node_count {
                return Err(Error::InvalidInput(format!("edge ({a}, {b}) out of range")));
            }
            if a != b {
                edges.push(canonical(a, b));
            }
        }
        let mut g = Self::from_canonical(self.node_count, edges);
        g.sample_map = self.sample_map.clone();
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical `(i, j)` edges with `i < j`, sorted.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(a, b)| (a as usize, b as usize))
    }

    /// Sorted neighbor ids of `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.node_count).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.node_count && b < self.node_count && self.neighbors(a).binary_search(&(b as u32)).is_ok()
    }

    /// Original point-cloud row of node `v`.
    pub fn sample_row(&self, v: usize) -> usize {
        self.sample_map[v]
    }

    pub fn sample_map(&self) -> &[usize] {
        &self.sample_map
    }

    /// Component id per node, numbered in order of the smallest member.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut uf = UnionFind::new(self.node_count);
        for (a, b) in self.edges() {
            uf.union(a, b);
        }
        uf.labels()
    }
}

/// Landmarks chosen on a [`NeighborGraph`] plus the reverse-neighbor assignment
/// of every graph node to the landmark that covered it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkCover {
    /// Graph node of each landmark, in selection order.
    landmarks: Vec<usize>,
    /// For every graph node, the index (into `landmarks`) of its landmark.
    rev_neigh: Vec<u32>,
}

impl LandmarkCover {
    pub fn new(landmarks: Vec<usize>, rev_neigh: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; rev_neigh.len()];
        for (i, &l) in landmarks.iter().enumerate() {
            if l >= rev_neigh.len() {
                return Err(Error::InvalidInput(format!("landmark node {l} out of range")));
            }
            if std::mem::replace(&mut seen[l], true) {
                return Err(Error::InvalidInput(format!("landmark node {l} listed twice")));
            }
            if rev_neigh[l] as usize != i {
                return Err(Error::InvalidInput(format!("landmark node {l} is not assigned to itself")));
            }
        }
        if let Some(bad) = rev_neigh.iter().position(|&r| r as usize >= landmarks.len()) {
            return Err(Error::InvalidInput(format!("node {bad} assigned to a missing landmark")));
        }
        Ok(Self { landmarks, rev_neigh })
    }

    pub(crate) fn from_parts_unchecked(landmarks: Vec<usize>, rev_neigh: Vec<u32>) -> Self {
        Self { landmarks, rev_neigh }
    }

    pub fn landmark_count(&self) -> usize {
        self.landmarks.len()
    }

    pub fn node_count(&self) -> usize {
        self.rev_neigh.len()
    }

    pub fn landmarks(&self) -> &[usize] {
        &self.landmarks
    }

    /// Landmark index covering graph node `v`.
    pub fn landmark_of(&self, v: usize) -> usize {
        self.rev_neigh[v] as usize
    }

    pub fn rev_neigh(&self) -> &[u32] {
        &self.rev_neigh
    }

    /// Graph nodes covered by each landmark, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.landmarks.len()];
        for (v, &l) in self.rev_neigh.iter().enumerate() {
            out[l as usize].push(v);
        }
        out
    }
}

/// Symmetric sparse weighted graph with optional self-loop weights.
///
/// Used for the landmark graph (no self-loops) and for community-induced
/// graphs (intra-community weight carried as a self-loop). The total weight
/// `m` counts each undirected edge and each self-loop once; weighted degrees
/// count a self-loop twice, so `sum(degree) == 2m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeightedGraph", into = "RawWeightedGraph")]
pub struct WeightedGraph {
    adjacency: Vec<Vec<(u32, f64)>>,
    self_weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawWeightedGraph {
    node_count: usize,
    edges: Vec<(u32, u32, f64)>,
    self_weights: Vec<f64>,
}

impl TryFrom<RawWeightedGraph> for WeightedGraph {
    type Error = Error;

    fn try_from(raw: RawWeightedGraph) -> Result<Self> {
        if raw.self_weights.len() != raw.node_count {
            return Err(Error::InvalidInput("self weight count does not match node count".into()));
        }
        let mut g = WeightedGraph::from_edges(
            raw.node_count,
            raw.edges.iter().map(|&(a, b, w)| (a as usize, b as usize, w)),
        )?;
        g.self_weights = raw.self_weights;
        Ok(g)
    }
}

impl From<WeightedGraph> for RawWeightedGraph {
    fn from(g: WeightedGraph) -> Self {
        RawWeightedGraph {
            node_count: g.node_count(),
            edges: g.edges().map(|(a, b, w)| (a as u32, b as u32, w)).collect(),
            self_weights: g.self_weights,
        }
    }
}

impl WeightedGraph {
    pub fn empty(node_count: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); node_count],
            self_weights: vec![0.0; node_count],
        }
    }

    /// Builds a graph from weighted edges. Duplicate entries for the same
    /// unordered pair are summed; `(i, i, w)` adds to the self weight of `i`.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut self_weights = vec![0.0; node_count];
        let mut canon: Vec<(u32, u32, f64)> = Vec::new();
        for (a, b, w) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            if !w.is_finite() {
                return Err(Error::InvalidInput(format!("edge ({a}, {b}) has non-finite weight")));
            }
            if a == b {
                self_weights[a] += w;
            } else {
                let (x, y) = canonical(a, b);
                canon.push((x, y, w));
            }
        }
        canon.sort_by_key(|p| (p.0, p.1));
        let mut adjacency = vec![Vec::new(); node_count];
        let mut i = 0;
        while i < canon.len() {
            let (a, b, mut w) = canon[i];
            let mut j = i + 1;
            while j < canon.len() && canon[j].0 == a && canon[j].1 == b {
                w += canon[j].2;
                j += 1;
            }
            adjacency[a as usize].push((b, w));
            adjacency[b as usize].push((a, w));
            i = j;
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }
        Ok(Self { adjacency, self_weights })
    }

    pub(crate) fn from_adjacency_unchecked(adjacency: Vec<Vec<(u32, f64)>>, self_weights: Vec<f64>) -> Self {
        Self { adjacency, self_weights }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Canonical `(i, j, w)` edges with `i < j`, sorted by `(i, j)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| (j as usize) > i)
                .map(move |&(j, w)| (i, j as usize, w))
        })
    }

    /// Sorted `(neighbor, weight)` pairs of `v`, excluding the self-loop.
    pub fn neighbors(&self, v: usize) -> &[(u32, f64)] {
        &self.adjacency[v]
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return self.self_weights[a];
        }
        self.adjacency[a]
            .binary_search_by_key(&(b as u32), |&(n, _)| n)
            .map_or(0.0, |pos| self.adjacency[a][pos].1)
    }

    pub fn self_weight(&self, v: usize) -> f64 {
        self.self_weights[v]
    }

    pub fn self_weights(&self) -> &[f64] {
        &self.self_weights
    }

    /// Weighted degree; a self-loop counts twice.
    pub fn degree(&self, v: usize) -> f64 {
        self.adjacency[v].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_weights[v]
    }

    /// `m`: every undirected edge and self-loop counted once.
    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum::<f64>() + self.self_weights.iter().sum::<f64>()
    }

    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut uf = UnionFind::new(self.node_count());
        for (a, b, _) in self.edges() {
            uf.union(a, b);
        }
        uf.labels()
    }
}

/// One level of a community assignment: node -> community id in `0..C`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<u32>,
    community_count: usize,
    level: usize,
}

impl Partition {
    /// Relabels arbitrary ids to contiguous `0..C`, numbered by first appearance.
    pub fn from_assignment(raw: &[usize], level: usize) -> Self {
        let mut remap = std::collections::HashMap::new();
        let assignment = raw
            .iter()
            .map(|&c| {
                let next = remap.len() as u32;
                *remap.entry(c).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            community_count: remap.len(),
            level,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n as u32).collect(),
            community_count: n,
            level: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn community_of(&self, v: usize) -> usize {
        self.assignment[v] as usize
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c as usize].push(v);
        }
        out
    }
}

/// Disjoint-set forest with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            sets: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Returns `true` when the two elements were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] += 1;
        }
        self.sets -= 1;
        true
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }

    /// `(count, label per element)` with labels numbered by first appearance.
    pub fn labels(&mut self) -> (usize, Vec<usize>) {
        let n = self.parent.len();
        let mut root_label = vec![usize::MAX; n];
        let mut labels = Vec::with_capacity(n);
        let mut next = 0;
        for v in 0..n {
            let r = self.find(v);
            if root_label[r] == usize::MAX {
                root_label[r] = next;
                next += 1;
            }
            labels.push(root_label[r]);
        }
        (next, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neighbor_graph_canonicalizes() {
        let g = NeighborGraph::from_edges(3, [(2, 0), (0, 2), (1, 1), (1, 2)]).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
        assert!(g.has_edge(0, 2) && g.has_edge(2, 0));
        assert!(!g.has_edge(1, 1));
        assert_eq!(g.neighbors(2), &[0, 1]);
    }

    #[test]
    fn neighbor_graph_rejects_out_of_range() {
        assert!(NeighborGraph::from_edges(2, [(0, 2)]).is_err());
    }

    #[test]
    fn weighted_graph_sums_duplicates() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 0.5), (1, 0, 0.25), (2, 2, 1.0)]).unwrap();
        assert_eq!(g.weight(0, 1), 0.75);
        assert_eq!(g.weight(1, 0), 0.75);
        assert_eq!(g.self_weight(2), 1.0);
        assert_eq!(g.degree(2), 2.0);
        assert_eq!(g.total_weight(), 1.75);
    }

    #[test]
    fn landmark_cover_checks_invariants() {
        assert!(LandmarkCover::new(vec![1], vec![0, 0, 0]).is_ok());
        // landmark must map to itself
        assert!(LandmarkCover::new(vec![1, 2], vec![0, 0, 0]).is_err());
        // duplicate landmark
        assert!(LandmarkCover::new(vec![1, 1], vec![0, 0, 0]).is_err());
        // dangling assignment
        assert!(LandmarkCover::new(vec![0], vec![0, 3]).is_err());
    }

    #[test]
    fn partition_is_contiguous() {
        let p = Partition::from_assignment(&[7, 3, 7, 9], 0);
        assert_eq!(p.assignment(), &[0, 1, 0, 2]);
        assert_eq!(p.community_count(), 3);
    }

    #[test]
    fn union_find_counts_sets() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(!uf.union(1, 0));
        assert!(uf.union(3, 4));
        assert_eq!(uf.set_count(), 3);
        assert_eq!(uf.labels(), (3, vec![0, 0, 1, 2, 2]));
    }

    proptest! {
        #[test]
        fn edge_orientation_is_irrelevant(edges in prop::collection::vec((0usize..12, 0usize..12, 0.01f64..1.0), 0..40)) {
            let forward = WeightedGraph::from_edges(12, edges.iter().copied()).unwrap();
            let flipped = WeightedGraph::from_edges(12, edges.iter().map(|&(a, b, w)| (b, a, w))).unwrap();
            for i in 0..12 {
                for j in 0..12 {
                    prop_assert_eq!(forward.weight(i, j), flipped.weight(j, i));
                }
            }
            let ng = NeighborGraph::from_edges(12, edges.iter().map(|&(a, b, _)| (a, b))).unwrap();
            for &(a, b, _) in &edges {
                prop_assert_eq!(ng.has_edge(a, b), a != b);
                prop_assert_eq!(ng.has_edge(b, a), a != b);
            }
        }

        #[test]
        fn serde_round_trip_is_exact(edges in prop::collection::vec((0usize..8, 0usize..8, -5.0f64..5.0), 0..20)) {
            let g = WeightedGraph::from_edges(8, edges.iter().copied()).unwrap();
            let back: WeightedGraph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
            prop_assert_eq!(&back, &g);
            let ng = NeighborGraph::from_edges(8, edges.iter().map(|&(a, b, _)| (a, b))).unwrap();
            let back: NeighborGraph = serde_json::from_str(&serde_json::to_string(&ng).unwrap()).unwrap();
            prop_assert_eq!(back, ng);
        }
    }
}
