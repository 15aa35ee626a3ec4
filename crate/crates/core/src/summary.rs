use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{UnionFind, WeightedGraph};

/// Roll-up of the raw points behind a graph node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    /// Landmark indices merged into this node, ascending.
    pub landmarks: Vec<usize>,
    pub point_count: u64,
    /// `(label, count)` sorted by label.
    pub label_histogram: Vec<(i32, u64)>,
}

impl NodeMeta {
    /// Most frequent label; ties go to the smallest label.
    pub fn dominant_label(&self) -> Option<i32> {
        dominant_label(&self.label_histogram)
    }

    pub fn merge(parts: impl IntoIterator<Item = (usize, NodeMeta)>) -> NodeMeta {
        let mut landmarks = Vec::new();
        let mut point_count = 0;
        let mut hist: BTreeMap<i32, u64> = BTreeMap::new();
        for (_, m) in parts {
            landmarks.extend(m.landmarks);
            point_count += m.point_count;
            for (label, c) in m.label_histogram {
                *hist.entry(label).or_default() += c;
            }
        }
        landmarks.sort_unstable();
        NodeMeta {
            landmarks,
            point_count,
            label_histogram: hist.into_iter().collect(),
        }
    }
}

pub(crate) fn dominant_label(hist: &[(i32, u64)]) -> Option<i32> {
    // histogram is label-sorted, so keeping the first maximum breaks ties low
    let mut best: Option<(i32, u64)> = None;
    for &(label, count) in hist {
        if count > 0 && best.is_none_or(|(_, c)| count > c) {
            best = Some((label, count));
        }
    }
    best.map(|(l, _)| l)
}

/// Quotient of the landmark graph by a partition: one node per community,
/// inter-community weight summed on edges, intra-community weight on self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedGraph {
    pub graph: WeightedGraph,
    pub meta: Vec<NodeMeta>,
}

impl InducedGraph {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgePhase {
    /// Accepted while building the spanning subgraph.
    Spanning,
    /// Discarded by the spanning phase and restored because it closes a loop.
    Reintroduced,
}

impl EdgePhase {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgePhase::Spanning => "spanning",
            EdgePhase::Reintroduced => "reintroduced",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryNode {
    pub id: usize,
    pub landmarks: Vec<usize>,
    pub point_count: u64,
    pub self_weight: f64,
    pub label_histogram: Vec<(i32, u64)>,
    pub dominant_label: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    pub modularity: f64,
    pub phase: EdgePhase,
}

/// The final torn graph handed to viewers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryGraph {
    pub nodes: Vec<SummaryNode>,
    /// Sorted by `(source, target)` with `source < target`.
    pub edges: Vec<SummaryEdge>,
    /// Point-cloud row of every landmark (landmark index -> row).
    #[serde(default)]
    pub landmark_rows: Vec<usize>,
    /// Summary node of every raw point (row -> node); empty if not tracked.
    #[serde(default)]
    pub point_assignment: Vec<u32>,
}

impl SummaryGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.edges {
            uf.union(e.source, e.target);
        }
        uf.set_count()
    }

    /// A graph without parallel edges is a forest iff `|E| = |V| - #components`.
    pub fn is_forest(&self) -> bool {
        self.edges.len() + self.component_count() == self.nodes.len()
    }

    pub fn has_cycle(&self) -> bool {
        !self.is_forest()
    }

    pub fn weighted_graph(&self) -> WeightedGraph {
        WeightedGraph::from_edges(
            self.nodes.len(),
            self.edges.iter().map(|e| (e.source, e.target, e.weight)),
        )
        .expect("summary edges reference existing nodes")
    }

    pub fn count_phase(&self, phase: EdgePhase) -> usize {
        self.edges.iter().filter(|e| e.phase == phase).count()
    }
}
